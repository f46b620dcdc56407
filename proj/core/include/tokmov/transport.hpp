#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tokmov/types.hpp"

namespace tokmov {

/// Balanced transportation problem data: two simplex marginals and a cost matrix.
struct TransportProblem {
  Vector d1;    // length L1, nonnegative, sums to 1
  Vector d2;    // length L2
  Matrix cost;  // L1 x L2

  void validate() const;
};

enum class PlanMethod { EXACT, AVG, RCMD1, RCMD2 };

const char* to_string(PlanMethod m);

struct PlanEntry {
  Eigen::Index i;
  Eigen::Index j;
  double mass;
};

/// Coupling between token positions of two sentences. Dense or sparse storage;
/// AVG plans are dense outer products whose total mass is generally > 1 and is
/// recorded as-is rather than normalized away.
struct TransportPlan {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  PlanMethod method = PlanMethod::EXACT;
  bool is_sparse = false;
  Matrix dense;                    // rows x cols, when !is_sparse
  std::vector<PlanEntry> entries;  // when is_sparse

  double total_mass() const;
  Matrix to_dense() const;
  std::size_t stored_entries() const;
};

struct Distance {
  double value = 0.0;
  PlanMethod method = PlanMethod::EXACT;
};

/// M_{i,j} = 1 - cos(a_i, b_j); every entry lands in [0, 2].
Matrix cmd_cost(const TokenMatrix& a, const TokenMatrix& b);

struct AvgDecomposition {
  TransportPlan plan;  // rank-1 outer product, mass generally > 1
  Matrix cost;         // |s1||s2|/(|x_i||x_j|) - cos(x_i, x_j)
  Distance distance;   // sum T.*M = 1 - cos(s1, s2)
};

AvgDecomposition avg_decomposition(const TokenMatrix& a, const TokenMatrix& b);

struct RelaxedResult {
  TransportPlan plan;
  Distance distance;
};

/// Row-relaxed solution: mass 1/L1 at each row's cost argmin (smallest index on ties).
RelaxedResult rcmd1(const TokenMatrix& a, const TokenMatrix& b);
RelaxedResult rcmd1_from_cost(const Matrix& cost);

/// Column-relaxed mirror: mass 1/L2 at each column's argmin row.
RelaxedResult rcmd2(const TokenMatrix& a, const TokenMatrix& b);
RelaxedResult rcmd2_from_cost(const Matrix& cost);

/// Sparse union of both directional plans, each entry carrying half mass;
/// at most L1 + L2 stored entries.
TransportPlan rcmd_bidirectional_plan(const Matrix& cost);

struct ExactResult {
  TransportPlan plan;
  Distance distance;
};

/// Exact transportation simplex (MODI, Bland's rule). Guarded to L1*L2 <= 4096.
ExactResult exact_emd(const TransportProblem& p);

double plan_objective(const TransportPlan& plan, const Matrix& cost);

// Exports for the heatmap pipeline.
void write_matrix_csv(const Matrix& m, std::ostream& out);
void write_plan_sparse_json(const TransportPlan& plan, const Matrix& cost, std::ostream& out);

}  // namespace tokmov
