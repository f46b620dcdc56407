#include "tokmov/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "tokmov/embedding.hpp"

namespace tokmov {

const char* to_string(PlanMethod m) {
  switch (m) {
    case PlanMethod::EXACT: return "EXACT";
    case PlanMethod::AVG: return "AVG";
    case PlanMethod::RCMD1: return "RCMD1";
    case PlanMethod::RCMD2: return "RCMD2";
  }
  return "?";
}

void TransportProblem::validate() const {
  if (d1.size() < 1 || d2.size() < 1) throw ShapeMismatch("empty marginal");
  if (cost.rows() != d1.size() || cost.cols() != d2.size())
    throw ShapeMismatch("cost matrix is " + std::to_string(cost.rows()) + "x" +
                        std::to_string(cost.cols()) + " but marginals have lengths " +
                        std::to_string(d1.size()) + ", " + std::to_string(d2.size()));
  if ((d1.array() < 0).any() || (d2.array() < 0).any())
    throw Error("marginals must be nonnegative");
  if (std::abs(d1.sum() - 1.0) > 1e-9 || std::abs(d2.sum() - 1.0) > 1e-9)
    throw Error("marginals must sum to 1");
  if (!cost.allFinite()) throw Error("cost matrix has non-finite entries");
}

double TransportPlan::total_mass() const {
  if (is_sparse) {
    double s = 0.0;
    for (const auto& e : entries) s += e.mass;
    return s;
  }
  return dense.sum();
}

Matrix TransportPlan::to_dense() const {
  if (!is_sparse) return dense;
  Matrix m = Matrix::Zero(rows, cols);
  for (const auto& e : entries) m(e.i, e.j) += e.mass;
  return m;
}

std::size_t TransportPlan::stored_entries() const {
  return is_sparse ? entries.size() : static_cast<std::size_t>(rows * cols);
}

namespace {

Vector row_norms(const Matrix& m) { return m.rowwise().norm(); }

// 1 - cosine for all row pairs, clamped into [0, 2] against roundoff.
Matrix cosine_distance_matrix(const TokenMatrix& a, const TokenMatrix& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("token matrices have dimensions " + std::to_string(a.dim()) +
                            " and " + std::to_string(b.dim()));
  const Vector na = row_norms(a.vectors);
  const Vector nb = row_norms(b.vectors);
  Matrix cost = a.vectors * b.vectors.transpose();
  cost.array().colwise() /= na.array();
  cost.array().rowwise() /= nb.transpose().array();
  cost = (1.0 - cost.array()).matrix();
  return cost.array().max(0.0).min(2.0).matrix();
}

}  // namespace

Matrix cmd_cost(const TokenMatrix& a, const TokenMatrix& b) {
  return cosine_distance_matrix(a, b);
}

AvgDecomposition avg_decomposition(const TokenMatrix& a, const TokenMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("token matrices differ in dimension");
  const Vector s1 = avg_pool(a).vector;
  const Vector s2 = avg_pool(b).vector;
  const double ns1 = s1.norm();
  const double ns2 = s2.norm();
  if (ns1 < 1e-12 || ns2 < 1e-12)
    throw DegeneratePooledEmbedding("pooled embedding norm below 1e-12");

  const Vector na = row_norms(a.vectors);
  const Vector nb = row_norms(b.vectors);
  const double L1 = static_cast<double>(a.length());
  const double L2 = static_cast<double>(b.length());

  Matrix cos_ab = a.vectors * b.vectors.transpose();
  cos_ab.array().colwise() /= na.array();
  cos_ab.array().rowwise() /= nb.transpose().array();

  AvgDecomposition out;
  out.cost = ((ns1 * ns2) / (na * nb.transpose()).array()).matrix() - cos_ab;
  out.plan.rows = a.length();
  out.plan.cols = b.length();
  out.plan.method = PlanMethod::AVG;
  out.plan.is_sparse = false;
  out.plan.dense = (na * nb.transpose()) / (L1 * L2 * ns1 * ns2);
  out.distance.method = PlanMethod::AVG;
  out.distance.value = (out.plan.dense.array() * out.cost.array()).sum();
  return out;
}

RelaxedResult rcmd1_from_cost(const Matrix& cost) {
  const Eigen::Index L1 = cost.rows();
  RelaxedResult out;
  out.plan.rows = L1;
  out.plan.cols = cost.cols();
  out.plan.method = PlanMethod::RCMD1;
  out.plan.is_sparse = true;
  out.plan.entries.reserve(static_cast<std::size_t>(L1));
  double total = 0.0;
  for (Eigen::Index i = 0; i < L1; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < cost.cols(); ++j)
      if (cost(i, j) < cost(i, best)) best = j;  // smallest index wins ties
    out.plan.entries.push_back({i, best, 1.0 / static_cast<double>(L1)});
    total += cost(i, best);
  }
  out.distance.method = PlanMethod::RCMD1;
  out.distance.value = total / static_cast<double>(L1);
  return out;
}

RelaxedResult rcmd2_from_cost(const Matrix& cost) {
  const Eigen::Index L2 = cost.cols();
  RelaxedResult out;
  out.plan.rows = cost.rows();
  out.plan.cols = L2;
  out.plan.method = PlanMethod::RCMD2;
  out.plan.is_sparse = true;
  out.plan.entries.reserve(static_cast<std::size_t>(L2));
  double total = 0.0;
  for (Eigen::Index j = 0; j < L2; ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < cost.rows(); ++i)
      if (cost(i, j) < cost(best, j)) best = i;
    out.plan.entries.push_back({best, j, 1.0 / static_cast<double>(L2)});
    total += cost(best, j);
  }
  out.distance.method = PlanMethod::RCMD2;
  out.distance.value = total / static_cast<double>(L2);
  return out;
}

TransportPlan rcmd_bidirectional_plan(const Matrix& cost) {
  const auto r1 = rcmd1_from_cost(cost);
  const auto r2 = rcmd2_from_cost(cost);
  TransportPlan plan;
  plan.rows = cost.rows();
  plan.cols = cost.cols();
  plan.method = PlanMethod::RCMD1;
  plan.is_sparse = true;
  plan.entries.reserve(r1.plan.entries.size() + r2.plan.entries.size());
  for (const auto& e : r1.plan.entries) plan.entries.push_back({e.i, e.j, e.mass / 2.0});
  for (const auto& e : r2.plan.entries) plan.entries.push_back({e.i, e.j, e.mass / 2.0});
  return plan;
}

RelaxedResult rcmd1(const TokenMatrix& a, const TokenMatrix& b) {
  return rcmd1_from_cost(cmd_cost(a, b));
}

RelaxedResult rcmd2(const TokenMatrix& a, const TokenMatrix& b) {
  return rcmd2_from_cost(cmd_cost(a, b));
}

namespace {

// Transportation simplex (MODI). Basis is a spanning tree over row and column
// nodes with m + n - 1 cells; entering variable chosen by Bland's rule.
class TransportationSimplex {
public:
  explicit TransportationSimplex(const TransportProblem& p)
      : m_(p.d1.size()), n_(p.d2.size()), cost_(p.cost) {
    basis_index_ = Eigen::MatrixXi::Constant(m_, n_, -1);
    northwest_corner(p.d1, p.d2);
  }

  void solve() {
    const long max_iters = 10 * static_cast<long>(m_) * static_cast<long>(n_);
    for (long iter = 0;; ++iter) {
      if (iter > max_iters)
        throw CycleSuspected("transportation simplex exceeded " + std::to_string(max_iters) +
                             " pivots");
      compute_potentials();
      Eigen::Index ei = -1, ej = -1;
      if (!find_entering(ei, ej)) return;
      pivot(ei, ej);
    }
  }

  TransportPlan plan() const {
    TransportPlan out;
    out.rows = m_;
    out.cols = n_;
    out.method = PlanMethod::EXACT;
    out.is_sparse = true;
    for (const auto& c : basis_)
      if (c.mass > 0.0) out.entries.push_back({c.i, c.j, c.mass});
    return out;
  }

  double objective() const {
    double obj = 0.0;
    for (const auto& c : basis_) obj += c.mass * cost_(c.i, c.j);
    return obj;
  }

private:
  struct Cell {
    Eigen::Index i;
    Eigen::Index j;
    double mass;
  };

  void northwest_corner(const Vector& d1, const Vector& d2) {
    Vector supply = d1, demand = d2;
    Eigen::Index i = 0, j = 0;
    // Advances one index per step so exactly m + n - 1 basic cells appear,
    // some possibly with zero mass (degenerate).
    while (i < m_ && j < n_) {
      const double q = std::min(supply(i), demand(j));
      add_basic(i, j, q);
      supply(i) -= q;
      demand(j) -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1)
        ++j;
      else if (j == n_ - 1)
        ++i;
      else if (supply(i) <= demand(j))
        ++i;
      else
        ++j;
    }
  }

  void add_basic(Eigen::Index i, Eigen::Index j, double mass) {
    basis_index_(i, j) = static_cast<int>(basis_.size());
    basis_.push_back({i, j, mass});
  }

  // Nodes: rows [0, m), columns [m, m + n). The basis tree connects them.
  void compute_potentials() {
    u_.assign(static_cast<std::size_t>(m_), 0.0);
    v_.assign(static_cast<std::size_t>(n_), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int k = 0; k < static_cast<int>(basis_.size()); ++k) {
      row_cells[basis_[k].i].push_back(k);
      col_cells[basis_[k].j].push_back(k);
    }
    std::deque<Eigen::Index> queue{0};
    seen[0] = 1;
    u_[0] = 0.0;
    while (!queue.empty()) {
      const Eigen::Index node = queue.front();
      queue.pop_front();
      if (node < m_) {
        for (int k : row_cells[node]) {
          const Eigen::Index cn = m_ + basis_[k].j;
          if (!seen[cn]) {
            seen[cn] = 1;
            v_[basis_[k].j] = cost_(node, basis_[k].j) - u_[node];
            queue.push_back(cn);
          }
        }
      } else {
        const Eigen::Index j = node - m_;
        for (int k : col_cells[j]) {
          const Eigen::Index rn = basis_[k].i;
          if (!seen[rn]) {
            seen[rn] = 1;
            u_[rn] = cost_(rn, j) - v_[j];
            queue.push_back(rn);
          }
        }
      }
    }
  }

  bool find_entering(Eigen::Index& ei, Eigen::Index& ej) const {
    // Bland: first cell in row-major order with negative reduced cost.
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (basis_index_(i, j) >= 0) continue;
        if (cost_(i, j) - u_[i] - v_[j] < -1e-12) {
          ei = i;
          ej = j;
          return true;
        }
      }
    return false;
  }

  void pivot(Eigen::Index ei, Eigen::Index ej) {
    // The unique cycle is the entering cell plus the tree path from column ej
    // back to row ei. BFS over basis edges recovers that path.
    const Eigen::Index start = m_ + ej;
    const Eigen::Index goal = ei;
    std::vector<int> parent_cell(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<Eigen::Index> parent_node(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int k = 0; k < static_cast<int>(basis_.size()); ++k) {
      row_cells[basis_[k].i].push_back(k);
      col_cells[basis_[k].j].push_back(k);
    }
    std::deque<Eigen::Index> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const Eigen::Index node = queue.front();
      queue.pop_front();
      if (node == goal) break;
      const auto visit = [&](int k, Eigen::Index next) {
        if (!seen[next]) {
          seen[next] = 1;
          parent_cell[next] = k;
          parent_node[next] = node;
          queue.push_back(next);
        }
      };
      if (node < m_) {
        for (int k : row_cells[node]) visit(k, m_ + basis_[k].j);
      } else {
        for (int k : col_cells[node - m_]) visit(k, basis_[k].i);
      }
    }
    if (!seen[goal]) throw CycleSuspected("basis is not a spanning tree");

    // Walk goal -> start; cells alternate -, +, -, ... starting with minus.
    std::vector<int> minus_cells, plus_cells;
    bool minus = true;
    for (Eigen::Index node = goal; node != start; node = parent_node[node]) {
      (minus ? minus_cells : plus_cells).push_back(parent_cell[node]);
      minus = !minus;
    }

    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (int k : minus_cells) {
      if (basis_[k].mass < theta ||
          (basis_[k].mass == theta && (leaving < 0 || k < leaving))) {
        theta = basis_[k].mass;
        leaving = k;
      }
    }

    for (int k : plus_cells) basis_[k].mass += theta;
    for (int k : minus_cells) basis_[k].mass -= theta;
    basis_[leaving].mass = 0.0;

    // Replace the leaving cell with the entering one, reusing its slot.
    basis_index_(basis_[leaving].i, basis_[leaving].j) = -1;
    basis_[leaving] = {ei, ej, theta};
    basis_index_(ei, ej) = leaving;
  }

  Eigen::Index m_, n_;
  Matrix cost_;
  Eigen::MatrixXi basis_index_;
  std::vector<Cell> basis_;
  std::vector<double> u_, v_;
};

}  // namespace

ExactResult exact_emd(const TransportProblem& p) {
  p.validate();
  if (p.d1.size() * p.d2.size() > 4096)
    throw ScaleExceeded("problem size " + std::to_string(p.d1.size()) + "x" +
                        std::to_string(p.d2.size()) + " exceeds the 4096-cell oracle guard");
  TransportationSimplex simplex(p);
  simplex.solve();
  ExactResult out;
  out.plan = simplex.plan();
  out.distance = {simplex.objective(), PlanMethod::EXACT};
  return out;
}

double plan_objective(const TransportPlan& plan, const Matrix& cost) {
  if (plan.rows != cost.rows() || plan.cols != cost.cols())
    throw ShapeMismatch("plan is " + std::to_string(plan.rows) + "x" +
                        std::to_string(plan.cols) + " but cost is " +
                        std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  if (plan.is_sparse) {
    double obj = 0.0;
    for (const auto& e : plan.entries) obj += e.mass * cost(e.i, e.j);
    return obj;
  }
  return (plan.dense.array() * cost.array()).sum();
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_plan_sparse_json(const TransportPlan& plan, const Matrix& cost, std::ostream& out) {
  nlohmann::json arr = nlohmann::json::array();
  const auto add = [&](Eigen::Index i, Eigen::Index j, double mass) {
    arr.push_back({{"i", i}, {"j", j}, {"mass", mass}, {"cost", cost(i, j)}});
  };
  if (plan.is_sparse) {
    for (const auto& e : plan.entries) add(e.i, e.j, e.mass);
  } else {
    for (Eigen::Index i = 0; i < plan.rows; ++i)
      for (Eigen::Index j = 0; j < plan.cols; ++j)
        if (plan.dense(i, j) != 0.0) add(i, j, plan.dense(i, j));
  }
  out << arr.dump() << '\n';
}

}  // namespace tokmov
