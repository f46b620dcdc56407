#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tokmov/alignment.hpp"

using namespace tokmov;

namespace {

TransportPlan random_plan(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  TransportPlan plan;
  plan.rows = rows;
  plan.cols = cols;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  plan.dense.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) plan.dense(i, j) = unit(rng);
  plan.dense /= plan.dense.sum();
  return plan;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unit(rng);
  return m;
}

ChunkAlignment make_alignment(std::initializer_list<std::pair<std::size_t, std::size_t>> ps) {
  ChunkAlignment a;
  for (const auto& [i, j] : ps) a.pairs.insert({i, j});
  return a;
}

}  // namespace

TEST_CASE("token_contributions basics") {
  TransportPlan plan;
  plan.rows = 1;
  plan.cols = 1;
  plan.is_sparse = true;
  plan.entries = {{0, 0, 1.0}};
  Matrix cost = Matrix::Zero(1, 1);
  const Matrix c = token_contributions(plan, cost);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(token_contributions(plan, Matrix::Zero(2, 2)), ShapeMismatch);
}

TEST_CASE("rcmd1 contributions land only on argmin cells") {
  std::mt19937_64 rng(51);
  const auto a = oracles::random_sentence(rng, 4, 3);
  const auto b = oracles::random_sentence(rng, 5, 3);
  const Matrix cost = cmd_cost(a, b);
  const auto r = rcmd1(a, b);
  const Matrix contrib = token_contributions(r.plan, cost);
  std::size_t nonzeros = 0;
  for (Eigen::Index i = 0; i < contrib.rows(); ++i)
    for (Eigen::Index j = 0; j < contrib.cols(); ++j)
      if (contrib(i, j) != 0.0) ++nonzeros;
  CHECK(nonzeros <= 4);
  // Each contribution re-derives as (1 - cost) * mass.
  for (const auto& e : r.plan.entries)
    CHECK(contrib(e.i, e.j) == doctest::Approx((1.0 - cost(e.i, e.j)) * e.mass));
}

TEST_CASE("chunk_scores with one chunk per sentence is the block mean") {
  std::mt19937_64 rng(52);
  const auto plan = random_plan(rng, 3, 4);
  const Matrix cost = random_matrix(rng, 3, 4);
  const ChunkMap all1 = ChunkMap::from_spans({{0, 3}});
  const ChunkMap all2 = ChunkMap::from_spans({{0, 4}});
  const Matrix c = chunk_scores(plan, cost, all1, all2);
  const double want = ((1.0 - cost.array()) * plan.dense.array()).sum() / 12.0;
  REQUIRE(c.rows() == 1);
  REQUIRE(c.cols() == 1);
  CHECK(c(0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("chunk_scores with singleton chunks is the identity aggregation") {
  std::mt19937_64 rng(53);
  const auto plan = random_plan(rng, 4, 3);
  const Matrix cost = random_matrix(rng, 4, 3);
  const Matrix c = chunk_scores(plan, cost, ChunkMap::singletons(4), ChunkMap::singletons(3));
  const Matrix token = token_contributions(plan, cost);
  CHECK((c - token).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("chunk_scores matches the quadruple-loop oracle in both variants") {
  std::mt19937_64 rng(54);
  const auto plan = random_plan(rng, 5, 6);
  const Matrix cost = random_matrix(rng, 5, 6);
  const ChunkMap c1 = ChunkMap::from_spans({{0, 2}, {2, 5}});
  const ChunkMap c2 = ChunkMap::from_spans({{0, 1}, {1, 4}, {4, 6}});
  for (const auto quantity : {ChunkQuantity::CONTRIBUTION, ChunkQuantity::TRANSPORT_COST}) {
    const Matrix c = chunk_scores(plan, cost, c1, c2, quantity);
    for (std::size_t i = 0; i < c1.size(); ++i)
      for (std::size_t j = 0; j < c2.size(); ++j) {
        double sum = 0.0;
        for (Eigen::Index k : c1.chunks[i])
          for (Eigen::Index l : c2.chunks[j])
            sum += quantity == ChunkQuantity::CONTRIBUTION
                       ? (1.0 - cost(k, l)) * plan.dense(k, l)
                       : plan.dense(k, l) * cost(k, l);
        const double want =
            sum / static_cast<double>(c1.chunks[i].size() * c2.chunks[j].size());
        CHECK(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
              doctest::Approx(want).epsilon(1e-12));
      }
  }
}

TEST_CASE("chunk_scores validates chunk indices") {
  std::mt19937_64 rng(55);
  const auto plan = random_plan(rng, 3, 3);
  const Matrix cost = random_matrix(rng, 3, 3);
  CHECK_THROWS_AS(
      chunk_scores(plan, cost, ChunkMap::from_spans({{0, 4}}), ChunkMap::singletons(3)),
      IndexOutOfRange);
}

TEST_CASE("extract_alignment picks mutual argmax pairs") {
  Matrix c(3, 3);
  c << 5.0, 1.0, 0.0, 1.0, 6.0, 2.0, 0.0, 2.0, 7.0;
  const auto a = extract_alignment(c);
  CHECK(a.pairs == make_alignment({{0, 0}, {1, 1}, {2, 2}}).pairs);

  // Constant matrix: smallest-index tie-breaking leaves only (0, 0).
  const auto tie = extract_alignment(Matrix::Constant(2, 2, 3.0));
  CHECK(tie.pairs == make_alignment({{0, 0}}).pairs);
}

TEST_CASE("extract_alignment matches the brute-force scan") {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix c = random_matrix(rng, 4, 5);
    const auto got = extract_alignment(c);
    std::set<std::pair<std::size_t, std::size_t>> got_pairs;
    for (const auto& p : got.pairs) got_pairs.insert({p.i, p.j});
    CHECK(got_pairs == oracles::naive_mutual_argmax(c));
    CHECK(got.pairs.size() <= 4);
  }
}

TEST_CASE("alignment_f1 hand-counted examples") {
  const auto gold = make_alignment({{0, 0}, {1, 2}});
  const auto pred = make_alignment({{0, 0}, {1, 1}});
  const auto r = alignment_f1(pred, gold);
  CHECK(r.precision == doctest::Approx(0.5));
  CHECK(r.recall == doctest::Approx(0.5));
  CHECK(r.f1 == doctest::Approx(0.5));

  const auto perfect = alignment_f1(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const auto disjoint = alignment_f1(make_alignment({{2, 2}}), gold);
  CHECK(disjoint.precision == 0.0);
  CHECK(disjoint.recall == 0.0);
  CHECK(disjoint.f1 == 0.0);
}

TEST_CASE("alignment_f1 empty-set conventions and swap symmetry") {
  const ChunkAlignment empty;
  const auto gold = make_alignment({{0, 0}});
  CHECK(alignment_f1(empty, empty).precision == 1.0);
  CHECK(alignment_f1(empty, empty).recall == 1.0);
  CHECK(alignment_f1(empty, gold).precision == 0.0);
  CHECK(alignment_f1(gold, empty).recall == 0.0);

  const auto pred = make_alignment({{0, 0}, {1, 1}, {2, 0}});
  const auto g2 = make_alignment({{0, 0}, {1, 2}});
  const auto fwd = alignment_f1(pred, g2);
  const auto rev = alignment_f1(g2, pred);
  CHECK(fwd.precision == doctest::Approx(rev.recall));
  CHECK(fwd.recall == doctest::Approx(rev.precision));
  CHECK(fwd.f1 == doctest::Approx(rev.f1));
}
