#include "tokmov/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "tokmov/alignment.hpp"
#include "tokmov/similarity.hpp"
#include "tokmov/transport.hpp"

namespace tokmov {

void ContrastiveBatch::validate() const {
  const std::size_t B = anchors.size();
  if (positives.size() != B) throw BatchShapeMismatch("anchors/positives length mismatch");
  if (!hard_negatives.empty() && hard_negatives.size() != B)
    throw BatchShapeMismatch("hard negatives length mismatch");
  if (B == 0) throw DegenerateBatch("empty batch");
  if (B < 2 && hard_negatives.empty())
    throw DegenerateBatch("B=1 without hard negatives leaves no negative terms");
  Eigen::Index dim = anchors[0].dim();
  const auto check = [&](const std::vector<TokenMatrix>& v) {
    for (const auto& m : v)
      if (m.dim() != dim) throw BatchShapeMismatch("embedding dimension varies inside batch");
  };
  check(anchors);
  check(positives);
  check(hard_negatives);
}

namespace {

constexpr double kTieEps = 1e-9;

// Cosine matrix plus the frozen directional argmaxes that define s^RCMD.
struct PairAlign {
  Matrix cosine;                       // L1 x L2
  std::vector<Eigen::Index> row_best;  // argmax_j per row
  std::vector<Eigen::Index> col_best;  // argmax_i per column
  double sim = 0.0;
  std::size_t ties = 0;
};

PairAlign align_pair(const TokenMatrix& a, const TokenMatrix& b) {
  PairAlign out;
  out.cosine = Matrix::Zero(a.length(), b.length());
  const Vector na = a.vectors.rowwise().norm();
  const Vector nb = b.vectors.rowwise().norm();
  out.cosine = a.vectors * b.vectors.transpose();
  out.cosine.array().colwise() /= na.array();
  out.cosine.array().rowwise() /= nb.transpose().array();

  const Eigen::Index L1 = out.cosine.rows();
  const Eigen::Index L2 = out.cosine.cols();
  out.row_best.resize(L1);
  out.col_best.resize(L2);
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < L1; ++i) {
    Eigen::Index best = 0;
    double second = -2.0;
    for (Eigen::Index j = 1; j < L2; ++j) {
      if (out.cosine(i, j) > out.cosine(i, best)) {
        second = out.cosine(i, best);
        best = j;
      } else {
        second = std::max(second, out.cosine(i, j));
      }
    }
    if (L2 > 1 && out.cosine(i, best) - second < kTieEps) ++out.ties;
    out.row_best[i] = best;
    s1 += out.cosine(i, best);
  }
  for (Eigen::Index j = 0; j < L2; ++j) {
    Eigen::Index best = 0;
    double second = -2.0;
    for (Eigen::Index i = 1; i < L1; ++i) {
      if (out.cosine(i, j) > out.cosine(best, j)) {
        second = out.cosine(best, j);
        best = i;
      } else {
        second = std::max(second, out.cosine(i, j));
      }
    }
    if (L1 > 1 && out.cosine(best, j) - second < kTieEps) ++out.ties;
    out.col_best[j] = best;
    s2 += out.cosine(best, j);
  }
  out.sim = 0.5 * (s1 / static_cast<double>(L1) + s2 / static_cast<double>(L2));
  return out;
}

double grad_weighted_logits(const Matrix& pos_sims, const Matrix& neg_sims, bool has_neg,
                            double tau, std::vector<double>& per_example, Matrix& w_pos,
                            Matrix& w_neg) {
  const Eigen::Index B = pos_sims.rows();
  per_example.assign(static_cast<std::size_t>(B), 0.0);
  w_pos = Matrix::Zero(B, B);
  if (has_neg) w_neg = Matrix::Zero(B, B);
  double total = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    double max_logit = pos_sims.row(i).maxCoeff() / tau;
    if (has_neg) max_logit = std::max(max_logit, neg_sims.row(i).maxCoeff() / tau);
    double denom = 0.0;
    for (Eigen::Index j = 0; j < B; ++j) {
      denom += std::exp(pos_sims(i, j) / tau - max_logit);
      if (has_neg) denom += std::exp(neg_sims(i, j) / tau - max_logit);
    }
    const double lse = max_logit + std::log(denom);
    const double loss_i = lse - pos_sims(i, i) / tau;
    per_example[static_cast<std::size_t>(i)] = loss_i;
    total += loss_i;
    for (Eigen::Index j = 0; j < B; ++j) {
      const double p = std::exp(pos_sims(i, j) / tau - lse);
      w_pos(i, j) = (p - (i == j ? 1.0 : 0.0)) / tau;
      if (has_neg) w_neg(i, j) = std::exp(neg_sims(i, j) / tau - lse) / tau;
    }
  }
  return total / static_cast<double>(B);
}

// d cos(u, v) / d u, with the cosine already known.
inline Vector cos_grad_u(const Vector& u, const Vector& v, double cosine) {
  const double nu = u.norm();
  const double nv = v.norm();
  return v / (nu * nv) - cosine * u / (nu * nu);
}

// Accumulates weight * d s^RCMD(a, b) / d tokens into ga and gb.
void accumulate_pair_grad(const TokenMatrix& a, const TokenMatrix& b, const PairAlign& al,
                          double weight, Matrix& ga, Matrix& gb) {
  const double L1 = static_cast<double>(a.length());
  const double L2 = static_cast<double>(b.length());
  for (Eigen::Index i = 0; i < a.length(); ++i) {
    const Eigen::Index j = al.row_best[i];
    const double c = al.cosine(i, j);
    const Vector u = a.vectors.row(i).transpose();
    const Vector v = b.vectors.row(j).transpose();
    const double w = weight * 0.5 / L1;
    ga.row(i) += (w * cos_grad_u(u, v, c)).transpose();
    gb.row(j) += (w * cos_grad_u(v, u, c)).transpose();
  }
  for (Eigen::Index j = 0; j < b.length(); ++j) {
    const Eigen::Index i = al.col_best[j];
    const double c = al.cosine(i, j);
    const Vector u = a.vectors.row(i).transpose();
    const Vector v = b.vectors.row(j).transpose();
    const double w = weight * 0.5 / L2;
    ga.row(i) += (w * cos_grad_u(u, v, c)).transpose();
    gb.row(j) += (w * cos_grad_u(v, u, c)).transpose();
  }
}

}  // namespace

LossReport contrastive_loss(const ContrastiveBatch& batch, double tau) {
  batch.validate();
  if (!(tau > 0.0)) throw Error("temperature must be positive");
  const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
  const bool has_neg = batch.has_negatives();
  Matrix pos_sims(B, B), neg_sims;
  if (has_neg) neg_sims.resize(B, B);
  for (Eigen::Index i = 0; i < B; ++i)
    for (Eigen::Index j = 0; j < B; ++j) {
      pos_sims(i, j) = align_pair(batch.anchors[i], batch.positives[j]).sim;
      if (has_neg) neg_sims(i, j) = align_pair(batch.anchors[i], batch.hard_negatives[j]).sim;
    }
  LossReport report;
  report.temperature = tau;
  Matrix w_pos, w_neg;
  report.total_loss =
      grad_weighted_logits(pos_sims, neg_sims, has_neg, tau, report.per_example, w_pos, w_neg);
  return report;
}

BatchGradients contrastive_grad(const ContrastiveBatch& batch, double tau) {
  batch.validate();
  if (!(tau > 0.0)) throw Error("temperature must be positive");
  const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
  const bool has_neg = batch.has_negatives();

  std::vector<std::vector<PairAlign>> pos_align(B), neg_align(B);
  Matrix pos_sims(B, B), neg_sims;
  if (has_neg) neg_sims.resize(B, B);
  BatchGradients out;
  for (Eigen::Index i = 0; i < B; ++i) {
    pos_align[i].reserve(B);
    for (Eigen::Index j = 0; j < B; ++j) {
      pos_align[i].push_back(align_pair(batch.anchors[i], batch.positives[j]));
      out.tie_warnings += pos_align[i].back().ties;
      pos_sims(i, j) = pos_align[i].back().sim;
    }
    if (has_neg) {
      neg_align[i].reserve(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        neg_align[i].push_back(align_pair(batch.anchors[i], batch.hard_negatives[j]));
        out.tie_warnings += neg_align[i].back().ties;
        neg_sims(i, j) = neg_align[i].back().sim;
      }
    }
  }

  std::vector<double> per_example;
  Matrix w_pos, w_neg;
  grad_weighted_logits(pos_sims, neg_sims, has_neg, tau, per_example, w_pos, w_neg);

  const auto zeros_like = [](const std::vector<TokenMatrix>& v) {
    std::vector<Matrix> g;
    g.reserve(v.size());
    for (const auto& m : v) g.push_back(Matrix::Zero(m.length(), m.dim()));
    return g;
  };
  out.anchors = zeros_like(batch.anchors);
  out.positives = zeros_like(batch.positives);
  out.hard_negatives = zeros_like(batch.hard_negatives);

  const double inv_b = 1.0 / static_cast<double>(B);
  for (Eigen::Index i = 0; i < B; ++i)
    for (Eigen::Index j = 0; j < B; ++j) {
      accumulate_pair_grad(batch.anchors[i], batch.positives[j], pos_align[i][j],
                           w_pos(i, j) * inv_b, out.anchors[i], out.positives[j]);
      if (has_neg)
        accumulate_pair_grad(batch.anchors[i], batch.hard_negatives[j], neg_align[i][j],
                             w_neg(i, j) * inv_b, out.anchors[i], out.hard_negatives[j]);
    }
  return out;
}

TokenMatrix ToyModel::encode(const std::vector<int>& type_ids,
                             const std::string& sentence_id) const {
  TokenMatrix m;
  m.sentence_id = sentence_id;
  const Eigen::Index L = static_cast<Eigen::Index>(type_ids.size());
  const Eigen::Index D = table.cols();
  m.vectors.resize(L, D);
  Vector mean = Vector::Zero(D);
  for (int t : type_ids) mean += table.row(t).transpose();
  mean /= static_cast<double>(L);
  for (Eigen::Index k = 0; k < L; ++k) {
    m.vectors.row(k) =
        (1.0 - context_mix) * table.row(type_ids[static_cast<std::size_t>(k)]) +
        context_mix * mean.transpose();
    m.tokens.push_back(vocabulary.empty() ? std::to_string(type_ids[k])
                                          : vocabulary[type_ids[k]]);
  }
  return m;
}

void ToyModel::accumulate_table_grad(const std::vector<int>& type_ids, const Matrix& token_grads,
                                     Matrix& table_grad) const {
  const double L = static_cast<double>(type_ids.size());
  const Vector total = token_grads.colwise().sum().transpose();
  for (std::size_t k = 0; k < type_ids.size(); ++k) {
    table_grad.row(type_ids[k]) +=
        (1.0 - context_mix) * token_grads.row(static_cast<Eigen::Index>(k)) +
        (context_mix / L) * total.transpose();
  }
}

ToyModel ToyModel::random_init(int vocab_size, int dim, std::uint64_t seed, double scale,
                               double context_mix) {
  ToyModel m;
  m.context_mix = context_mix;
  m.table.resize(vocab_size, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  for (Eigen::Index i = 0; i < m.table.rows(); ++i)
    for (Eigen::Index j = 0; j < m.table.cols(); ++j) m.table(i, j) = gauss(rng);
  for (int i = 0; i < vocab_size; ++i) m.vocabulary.push_back("w" + std::to_string(i));
  return m;
}

ToyModel ToyModel::synonym_geometry_init(int groups, int group_size, int dim, std::uint64_t seed,
                                         double noise, double context_mix) {
  ToyModel m;
  m.context_mix = context_mix;
  m.table.resize(groups * group_size, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int g = 0; g < groups; ++g) {
    Vector centroid(dim);
    for (Eigen::Index j = 0; j < dim; ++j) centroid(j) = gauss(rng);
    centroid.normalize();
    for (int k = 0; k < group_size; ++k) {
      const int row = g * group_size + k;
      for (Eigen::Index j = 0; j < dim; ++j)
        m.table(row, j) = centroid(j) + noise * gauss(rng);
      m.vocabulary.push_back("g" + std::to_string(g) + "_" + std::to_string(k));
    }
  }
  return m;
}

SynonymPairGenerator::SynonymPairGenerator(int n_groups, int group_size, int min_len,
                                           int max_len, std::uint64_t seed)
    : n_groups(n_groups), group_size(group_size), min_len(min_len), max_len(max_len), rng(seed) {
  if (n_groups < 2 * max_len)
    throw Error("need at least 2*max_len synonym groups for disjoint hard negatives");
}

SynonymPairGenerator::Triple SynonymPairGenerator::sample() {
  std::uniform_int_distribution<int> len_dist(min_len, max_len);
  const int len = len_dist(rng);

  std::vector<int> group_ids(n_groups);
  std::iota(group_ids.begin(), group_ids.end(), 0);
  std::shuffle(group_ids.begin(), group_ids.end(), rng);

  std::uniform_int_distribution<int> member(0, group_size - 1);
  Triple t;
  for (int k = 0; k < len; ++k)
    t.anchor.push_back(group_ids[k] * group_size + member(rng));

  // Positive: synonym substitution of each anchor token, then shuffle.
  std::vector<int> perm(len);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  t.positive.resize(len);
  for (int k = 0; k < len; ++k) {
    t.positive[perm[k]] = group_ids[k] * group_size + member(rng);
    t.gold.push_back({k, perm[k]});
  }

  // Hard negative: same length, groups disjoint from the anchor's.
  for (int k = 0; k < len; ++k)
    t.hard_negative.push_back(group_ids[len + k] * group_size + member(rng));
  return t;
}

double planted_alignment_f1(const ToyModel& model,
                            const std::vector<SynonymPairGenerator::Triple>& pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  int idx = 0;
  for (const auto& t : pairs) {
    const TokenMatrix a = model.encode(t.anchor, "a" + std::to_string(idx));
    const TokenMatrix b = model.encode(t.positive, "b" + std::to_string(idx));
    ++idx;
    const Matrix cost = cmd_cost(a, b);
    const TransportPlan plan = rcmd_bidirectional_plan(cost);
    const Matrix c = chunk_scores(plan, cost, ChunkMap::singletons(a.length()),
                                  ChunkMap::singletons(b.length()));
    const ChunkAlignment pred = extract_alignment(c);
    ChunkAlignment gold;
    for (const auto& [i, j] : t.gold)
      gold.pairs.insert({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    total += alignment_f1(pred, gold).f1;
  }
  return total / static_cast<double>(pairs.size());
}

double mean_positive_similarity(const ToyModel& model,
                                const std::vector<SynonymPairGenerator::Triple>& pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  int idx = 0;
  for (const auto& t : pairs) {
    const TokenMatrix a = model.encode(t.anchor, "a" + std::to_string(idx));
    const TokenMatrix b = model.encode(t.positive, "b" + std::to_string(idx));
    ++idx;
    total += sim_rcmd(a, b).value;
  }
  return total / static_cast<double>(pairs.size());
}

TrainTrace train_toy(SynonymPairGenerator& gen, ToyModel& model, const TrainConfig& cfg) {
  TrainTrace trace;
  if (cfg.steps == 0) return trace;

  std::vector<SynonymPairGenerator::Triple> validation;
  for (int i = 0; i < cfg.validation_pairs; ++i) validation.push_back(gen.sample());

  Matrix adam_m = Matrix::Zero(model.table.rows(), model.table.cols());
  Matrix adam_v = Matrix::Zero(model.table.rows(), model.table.cols());

  for (int step = 1; step <= cfg.steps; ++step) {
    ContrastiveBatch batch;
    std::vector<std::vector<int>> anchor_ids, pos_ids, neg_ids;
    for (int b = 0; b < cfg.batch_size; ++b) {
      auto t = gen.sample();
      batch.anchors.push_back(model.encode(t.anchor, "a"));
      batch.positives.push_back(model.encode(t.positive, "p"));
      if (cfg.use_hard_negatives)
        batch.hard_negatives.push_back(model.encode(t.hard_negative, "n"));
      anchor_ids.push_back(std::move(t.anchor));
      pos_ids.push_back(std::move(t.positive));
      neg_ids.push_back(std::move(t.hard_negative));
    }

    const LossReport report = contrastive_loss(batch, cfg.tau);
    if (!std::isfinite(report.total_loss))
      throw NonFiniteLoss("non-finite loss at step " + std::to_string(step));

    const BatchGradients grads = contrastive_grad(batch, cfg.tau);
    Matrix table_grad = Matrix::Zero(model.table.rows(), model.table.cols());
    for (int b = 0; b < cfg.batch_size; ++b) {
      model.accumulate_table_grad(anchor_ids[b], grads.anchors[b], table_grad);
      model.accumulate_table_grad(pos_ids[b], grads.positives[b], table_grad);
      if (cfg.use_hard_negatives)
        model.accumulate_table_grad(neg_ids[b], grads.hard_negatives[b], table_grad);
    }

    adam_m = cfg.beta1 * adam_m + (1.0 - cfg.beta1) * table_grad;
    adam_v = (cfg.beta2 * adam_v.array() +
              (1.0 - cfg.beta2) * table_grad.array().square()).matrix();
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    model.table.array() -=
        cfg.lr * (adam_m.array() / bc1) / ((adam_v.array() / bc2).sqrt() + cfg.eps);

    TrainStep ts;
    ts.step = step;
    ts.loss = report.total_loss;
    ts.mean_pos_sim = mean_positive_similarity(model, validation);
    ts.alignment_f1 = planted_alignment_f1(model, validation);
    trace.steps.push_back(ts);
  }
  return trace;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& out) {
  out << "step,loss,mean_pos_sim,alignment_acc\n";
  out.precision(17);
  for (const auto& s : trace.steps)
    out << s.step << ',' << s.loss << ',' << s.mean_pos_sim << ',' << s.alignment_f1 << '\n';
}

}  // namespace tokmov
