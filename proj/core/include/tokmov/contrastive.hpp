#pragma once

#include <random>
#include <vector>

#include "tokmov/types.hpp"

namespace tokmov {

struct ContrastiveBatch {
  std::vector<TokenMatrix> anchors;
  std::vector<TokenMatrix> positives;
  std::vector<TokenMatrix> hard_negatives;  // empty when unused

  std::size_t size() const { return anchors.size(); }
  bool has_negatives() const { return !hard_negatives.empty(); }
  void validate() const;
};

struct LossReport {
  double total_loss = 0.0;  // mean of per_example
  std::vector<double> per_example;
  double temperature = 0.0;
};

/// Temperature-scaled softmax objective over in-batch positives and optional
/// hard negatives, computed with log-sum-exp stabilization.
LossReport contrastive_loss(const ContrastiveBatch& batch, double tau);

/// Gradients with respect to every token embedding in the batch. The argmax
/// alignment inside each directional similarity is held fixed, as autodiff
/// through a max would do. tie_warnings counts rows whose top two cosines are
/// within 1e-9 (subgradient point, reported rather than fatal).
struct BatchGradients {
  std::vector<Matrix> anchors;
  std::vector<Matrix> positives;
  std::vector<Matrix> hard_negatives;
  std::size_t tie_warnings = 0;
};

BatchGradients contrastive_grad(const ContrastiveBatch& batch, double tau);

/// Stand-in encoder: a trainable V x D type-embedding table plus a context
/// mixer lambda blending each token's own embedding with the sentence mean,
/// so the same type gets sentence-dependent vectors.
struct ToyModel {
  std::vector<std::string> vocabulary;
  Matrix table;              // V x D
  double context_mix = 0.5;  // lambda

  TokenMatrix encode(const std::vector<int>& type_ids, const std::string& sentence_id) const;

  // Chains token-embedding gradients back onto the table.
  void accumulate_table_grad(const std::vector<int>& type_ids, const Matrix& token_grads,
                             Matrix& table_grad) const;

  static ToyModel random_init(int vocab_size, int dim, std::uint64_t seed, double scale = 0.05,
                              double context_mix = 0.5);
  // Members of one synonym group share a unit direction plus per-member noise.
  static ToyModel synonym_geometry_init(int groups, int group_size, int dim, std::uint64_t seed,
                                        double noise = 0.05, double context_mix = 0.5);
};

/// Synthetic pair source: vocabulary split into synonym groups; a positive is
/// the anchor with every token swapped for a random same-group synonym and the
/// order shuffled; hard negatives draw from disjoint groups. The substitution
/// map is the planted gold alignment.
struct SynonymPairGenerator {
  int n_groups;
  int group_size;
  int min_len;
  int max_len;
  std::mt19937_64 rng;

  SynonymPairGenerator(int n_groups, int group_size, int min_len, int max_len,
                       std::uint64_t seed);

  int vocab_size() const { return n_groups * group_size; }

  struct Triple {
    std::vector<int> anchor;
    std::vector<int> positive;
    std::vector<int> hard_negative;
    // planted (anchor index, positive index) token alignment
    std::vector<std::pair<int, int>> gold;
  };

  Triple sample();
};

struct TrainStep {
  int step = 0;
  double loss = 0.0;
  double mean_pos_sim = 0.0;
  double alignment_f1 = 0.0;
};

struct TrainTrace {
  std::vector<TrainStep> steps;
};

struct TrainConfig {
  int steps = 500;
  int batch_size = 8;
  double lr = 5e-5;
  double tau = 0.05;
  std::uint64_t seed = 0;
  bool use_hard_negatives = true;
  int validation_pairs = 32;
  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

TrainTrace train_toy(SynonymPairGenerator& gen, ToyModel& model, const TrainConfig& cfg);

void write_trace_csv(const TrainTrace& trace, std::ostream& out);

/// Mean planted-alignment F1 over a fixed validation set drawn from `gen`.
double planted_alignment_f1(const ToyModel& model,
                            const std::vector<SynonymPairGenerator::Triple>& pairs);
double mean_positive_similarity(const ToyModel& model,
                                const std::vector<SynonymPairGenerator::Triple>& pairs);

}  // namespace tokmov
