#include "tokmov/similarity.hpp"

#include <cmath>
#include <set>

#include "tokmov/embedding.hpp"

namespace tokmov {

const char* to_string(SimMethod m) {
  switch (m) {
    case SimMethod::AVG: return "avg";
    case SimMethod::RCMD1: return "rcmd1";
    case SimMethod::RCMD2: return "rcmd2";
    case SimMethod::RCMD: return "rcmd";
    case SimMethod::EMD: return "emd";
  }
  return "?";
}

std::optional<SimMethod> sim_method_from_string(const std::string& name) {
  if (name == "avg") return SimMethod::AVG;
  if (name == "rcmd1") return SimMethod::RCMD1;
  if (name == "rcmd2") return SimMethod::RCMD2;
  if (name == "rcmd") return SimMethod::RCMD;
  if (name == "emd") return SimMethod::EMD;
  return std::nullopt;
}

SimilarityScore sim_avg(const TokenMatrix& a, const TokenMatrix& b) {
  const Vector s1 = avg_pool(a).vector;
  const Vector s2 = avg_pool(b).vector;
  const double n1 = s1.norm();
  const double n2 = s2.norm();
  if (n1 < 1e-12 || n2 < 1e-12)
    throw DegeneratePooledEmbedding("pooled embedding norm below 1e-12");
  return {s1.dot(s2) / (n1 * n2), SimMethod::AVG};
}

SimilarityScore sim_rcmd1(const TokenMatrix& a, const TokenMatrix& b) {
  return {1.0 - rcmd1(a, b).distance.value, SimMethod::RCMD1};
}

SimilarityScore sim_rcmd2(const TokenMatrix& a, const TokenMatrix& b) {
  return {1.0 - rcmd2(a, b).distance.value, SimMethod::RCMD2};
}

SimilarityScore sim_rcmd(const TokenMatrix& a, const TokenMatrix& b) {
  const Matrix cost = cmd_cost(a, b);
  const double d1 = rcmd1_from_cost(cost).distance.value;
  const double d2 = rcmd2_from_cost(cost).distance.value;
  return {((1.0 - d1) + (1.0 - d2)) / 2.0, SimMethod::RCMD};
}

SimilarityScore sim_emd(const TokenMatrix& a, const TokenMatrix& b) {
  TransportProblem p;
  p.d1 = Vector::Constant(a.length(), 1.0 / static_cast<double>(a.length()));
  p.d2 = Vector::Constant(b.length(), 1.0 / static_cast<double>(b.length()));
  p.cost = cmd_cost(a, b);
  return {1.0 - exact_emd(p).distance.value, SimMethod::EMD};
}

SimilarityScore similarity(const TokenMatrix& a, const TokenMatrix& b, SimMethod method) {
  switch (method) {
    case SimMethod::AVG: return sim_avg(a, b);
    case SimMethod::RCMD1: return sim_rcmd1(a, b);
    case SimMethod::RCMD2: return sim_rcmd2(a, b);
    case SimMethod::RCMD: return sim_rcmd(a, b);
    case SimMethod::EMD: return sim_emd(a, b);
  }
  throw Error("unknown similarity method");
}

namespace {

struct PairResult {
  double value;
  std::size_t sparse_entries;
  std::size_t dense_entries;
};

// One RCMD pair. Sparse storage keeps only the row-argmin and column-argmin
// cost entries (deduplicated), dense keeps the whole L1 x L2 cost matrix.
PairResult rcmd_pair(const TokenMatrix& a, const TokenMatrix& b, SimMethod method,
                     PlanStorage storage) {
  const Matrix cost = cmd_cost(a, b);
  const auto r1 = rcmd1_from_cost(cost);
  const auto r2 = rcmd2_from_cost(cost);
  double value = 0.0;
  switch (method) {
    case SimMethod::RCMD1: value = 1.0 - r1.distance.value; break;
    case SimMethod::RCMD2: value = 1.0 - r2.distance.value; break;
    default: value = 1.0 - (r1.distance.value + r2.distance.value) / 2.0; break;
  }
  PairResult out;
  out.value = value;
  out.dense_entries = static_cast<std::size_t>(cost.rows() * cost.cols());
  if (storage == PlanStorage::DENSE) {
    out.sparse_entries = out.dense_entries;
  } else {
    std::set<std::pair<Eigen::Index, Eigen::Index>> kept;
    if (method != SimMethod::RCMD2)
      for (const auto& e : r1.plan.entries) kept.insert({e.i, e.j});
    if (method != SimMethod::RCMD1)
      for (const auto& e : r2.plan.entries) kept.insert({e.i, e.j});
    out.sparse_entries = kept.size();
  }
  return out;
}

PairResult generic_pair(const TokenMatrix& a, const TokenMatrix& b, SimMethod method,
                        PlanStorage storage) {
  if (method == SimMethod::RCMD || method == SimMethod::RCMD1 || method == SimMethod::RCMD2)
    return rcmd_pair(a, b, method, storage);
  const std::size_t dense = static_cast<std::size_t>(a.length() * b.length());
  return {similarity(a, b, method).value, dense, dense};
}

}  // namespace

BatchSimilarityMatrix batch_similarity(const std::vector<TokenMatrix>& anchors,
                                       const std::vector<TokenMatrix>& positives,
                                       const std::vector<TokenMatrix>* hard_negatives,
                                       SimMethod method, PlanStorage storage) {
  const std::size_t B = anchors.size();
  if (B == 0) throw BatchShapeMismatch("empty batch");
  if (positives.size() != B)
    throw BatchShapeMismatch("anchors and positives differ in length");
  if (hard_negatives && hard_negatives->size() != B)
    throw BatchShapeMismatch("hard negatives differ in length");

  const std::size_t cols = hard_negatives ? 2 * B : B;
  BatchSimilarityMatrix out;
  out.method = method;
  out.storage = storage;
  out.values.resize(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const TokenMatrix& cand = j < B ? positives[j] : (*hard_negatives)[j - B];
      const PairResult r = generic_pair(anchors[i], cand, method, storage);
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.value;
      out.stored_cost_entries += r.sparse_entries;
      out.dense_equivalent_entries += r.dense_entries;
    }
  }
  return out;
}

}  // namespace tokmov
