#pragma once

#include <set>
#include <utility>
#include <vector>

#include "tokmov/transport.hpp"
#include "tokmov/types.hpp"

namespace tokmov {

/// Partition of one sentence's token indices into ordered contiguous chunks.
struct ChunkMap {
  std::vector<std::vector<Eigen::Index>> chunks;

  static ChunkMap from_spans(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& spans);
  static ChunkMap singletons(Eigen::Index n_tokens);

  std::size_t size() const { return chunks.size(); }
  void validate(Eigen::Index n_tokens) const;
};

struct ChunkPair {
  std::size_t i;
  std::size_t j;
  bool operator<(const ChunkPair& o) const { return i < o.i || (i == o.i && j < o.j); }
  bool operator==(const ChunkPair& o) const { return i == o.i && j == o.j; }
};

struct ChunkAlignment {
  std::set<ChunkPair> pairs;
  std::vector<double> confidences;  // parallel to pairs in iteration order
};

/// Entry (i,j) = (1 - M_{i,j}) * T_{i,j}; zero wherever the plan is zero.
Matrix token_contributions(const TransportPlan& plan, const Matrix& cost);

/// Which per-token quantity gets block-averaged into the chunk matrix C.
enum class ChunkQuantity {
  CONTRIBUTION,   // (1 - M) .* T; high = aligned
  TRANSPORT_COST  // T .* M, the verbatim variant; high = costly
};

Matrix chunk_scores(const TransportPlan& plan, const Matrix& cost, const ChunkMap& cmap1,
                    const ChunkMap& cmap2, ChunkQuantity quantity = ChunkQuantity::CONTRIBUTION);

/// Mutual-argmax rule; ties broken toward the smallest index in both directions.
ChunkAlignment extract_alignment(const Matrix& chunk_matrix);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

F1Result alignment_f1(const ChunkAlignment& pred, const ChunkAlignment& gold);

}  // namespace tokmov
