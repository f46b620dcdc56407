#pragma once

#include <optional>
#include <vector>

#include "tokmov/transport.hpp"
#include "tokmov/types.hpp"

namespace tokmov {

enum class SimMethod { AVG, RCMD1, RCMD2, RCMD, EMD };

const char* to_string(SimMethod m);
std::optional<SimMethod> sim_method_from_string(const std::string& name);

struct SimilarityScore {
  double value = 0.0;
  SimMethod method = SimMethod::RCMD;
};

SimilarityScore sim_avg(const TokenMatrix& a, const TokenMatrix& b);
SimilarityScore sim_rcmd1(const TokenMatrix& a, const TokenMatrix& b);
SimilarityScore sim_rcmd2(const TokenMatrix& a, const TokenMatrix& b);
// Bidirectional: (s_rcmd1 + s_rcmd2) / 2. Symmetric in its arguments.
SimilarityScore sim_rcmd(const TokenMatrix& a, const TokenMatrix& b);
// 1 - exact EMD over the CMD problem with uniform marginals.
SimilarityScore sim_emd(const TokenMatrix& a, const TokenMatrix& b);

SimilarityScore similarity(const TokenMatrix& a, const TokenMatrix& b, SimMethod method);

enum class PlanStorage { DENSE, SPARSE };

/// B anchors scored against positives (and optional hard negatives appended
/// column-wise). Tracks stored cost-entry counts so the dense/sparse space
/// tradeoff is a measurable quantity: dense keeps L1*L2 entries per pair,
/// sparse keeps the row-argmin and column-argmin entries only (<= L1+L2).
struct BatchSimilarityMatrix {
  Matrix values;  // B x (B or 2B)
  SimMethod method = SimMethod::RCMD;
  PlanStorage storage = PlanStorage::DENSE;
  std::size_t stored_cost_entries = 0;
  std::size_t dense_equivalent_entries = 0;
};

BatchSimilarityMatrix batch_similarity(const std::vector<TokenMatrix>& anchors,
                                       const std::vector<TokenMatrix>& positives,
                                       const std::vector<TokenMatrix>* hard_negatives,
                                       SimMethod method, PlanStorage storage);

}  // namespace tokmov
