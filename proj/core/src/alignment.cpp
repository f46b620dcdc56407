#include "tokmov/alignment.hpp"

#include <algorithm>

namespace tokmov {

ChunkMap ChunkMap::from_spans(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& spans) {
  ChunkMap out;
  for (const auto& [start, end] : spans) {
    if (end <= start) throw IndexOutOfRange("empty chunk span");
    std::vector<Eigen::Index> chunk;
    for (Eigen::Index t = start; t < end; ++t) chunk.push_back(t);
    out.chunks.push_back(std::move(chunk));
  }
  return out;
}

ChunkMap ChunkMap::singletons(Eigen::Index n_tokens) {
  ChunkMap out;
  for (Eigen::Index t = 0; t < n_tokens; ++t) out.chunks.push_back({t});
  return out;
}

void ChunkMap::validate(Eigen::Index n_tokens) const {
  std::vector<char> seen(static_cast<std::size_t>(n_tokens), 0);
  for (const auto& chunk : chunks) {
    if (chunk.empty()) throw IndexOutOfRange("empty chunk");
    for (Eigen::Index t : chunk) {
      if (t < 0 || t >= n_tokens)
        throw IndexOutOfRange("token index " + std::to_string(t) + " outside [0, " +
                              std::to_string(n_tokens) + ")");
      if (seen[static_cast<std::size_t>(t)])
        throw IndexOutOfRange("token index " + std::to_string(t) + " in two chunks");
      seen[static_cast<std::size_t>(t)] = 1;
    }
  }
}

Matrix token_contributions(const TransportPlan& plan, const Matrix& cost) {
  if (plan.rows != cost.rows() || plan.cols != cost.cols())
    throw ShapeMismatch("plan/cost shape mismatch");
  Matrix out = Matrix::Zero(plan.rows, plan.cols);
  if (plan.is_sparse) {
    for (const auto& e : plan.entries) out(e.i, e.j) += (1.0 - cost(e.i, e.j)) * e.mass;
  } else {
    out = ((1.0 - cost.array()) * plan.dense.array()).matrix();
  }
  return out;
}

Matrix chunk_scores(const TransportPlan& plan, const Matrix& cost, const ChunkMap& cmap1,
                    const ChunkMap& cmap2, ChunkQuantity quantity) {
  cmap1.validate(plan.rows);
  cmap2.validate(plan.cols);
  const Matrix transport = plan.to_dense();
  Matrix per_token;
  if (quantity == ChunkQuantity::CONTRIBUTION)
    per_token = ((1.0 - cost.array()) * transport.array()).matrix();
  else
    per_token = (transport.array() * cost.array()).matrix();

  Matrix c(static_cast<Eigen::Index>(cmap1.size()), static_cast<Eigen::Index>(cmap2.size()));
  for (std::size_t i = 0; i < cmap1.size(); ++i) {
    for (std::size_t j = 0; j < cmap2.size(); ++j) {
      double sum = 0.0;
      for (Eigen::Index k : cmap1.chunks[i])
        for (Eigen::Index l : cmap2.chunks[j]) sum += per_token(k, l);
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sum / (static_cast<double>(cmap1.chunks[i].size()) *
                 static_cast<double>(cmap2.chunks[j].size()));
    }
  }
  return c;
}

ChunkAlignment extract_alignment(const Matrix& chunk_matrix) {
  if (!chunk_matrix.allFinite()) throw Error("chunk score matrix has non-finite entries");
  const Eigen::Index rows = chunk_matrix.rows();
  const Eigen::Index cols = chunk_matrix.cols();
  std::vector<Eigen::Index> row_best(rows), col_best(cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < cols; ++j)
      if (chunk_matrix(i, j) > chunk_matrix(i, best)) best = j;
    row_best[i] = best;
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < rows; ++i)
      if (chunk_matrix(i, j) > chunk_matrix(best, j)) best = i;
    col_best[j] = best;
  }
  ChunkAlignment out;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index j = row_best[i];
    if (col_best[j] == i) {
      out.pairs.insert({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
      out.confidences.push_back(chunk_matrix(i, j));
    }
  }
  return out;
}

F1Result alignment_f1(const ChunkAlignment& pred, const ChunkAlignment& gold) {
  std::size_t hit = 0;
  for (const auto& p : pred.pairs)
    if (gold.pairs.count(p)) ++hit;
  F1Result out;
  // Empty-set convention: empty pred scores 1 against empty gold, 0 otherwise.
  out.precision = pred.pairs.empty() ? (gold.pairs.empty() ? 1.0 : 0.0)
                                     : static_cast<double>(hit) / pred.pairs.size();
  out.recall = gold.pairs.empty() ? (pred.pairs.empty() ? 1.0 : 0.0)
                                  : static_cast<double>(hit) / gold.pairs.size();
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

}  // namespace tokmov
