#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tokmov/similarity.hpp"

using namespace tokmov;

namespace {

std::vector<TokenMatrix> random_batch(std::mt19937_64& rng, int b, int dim) {
  std::vector<TokenMatrix> out;
  for (int i = 0; i < b; ++i)
    out.push_back(oracles::random_sentence(rng, 2 + static_cast<int>(rng() % 5), dim));
  return out;
}

}  // namespace

TEST_CASE("directional similarities complement their distances") {
  std::mt19937_64 rng(31);
  const auto a = oracles::random_sentence(rng, 3, 4);
  const auto b = oracles::random_sentence(rng, 5, 4);
  const Matrix cost = oracles::naive_cmd_cost(a, b);
  CHECK(sim_rcmd1(a, b).value ==
        doctest::Approx(1.0 - oracles::naive_row_min_distance(cost)).epsilon(1e-12));
  CHECK(sim_rcmd2(a, b).value ==
        doctest::Approx(1.0 - oracles::naive_col_min_distance(cost)).epsilon(1e-12));
  CHECK(sim_rcmd(a, b).value ==
        doctest::Approx((sim_rcmd1(a, b).value + sim_rcmd2(a, b).value) / 2.0)
            .epsilon(1e-12));
}

TEST_CASE("self and orthogonal similarities") {
  std::mt19937_64 rng(32);
  const auto a = oracles::random_sentence(rng, 4, 3);
  CHECK(sim_rcmd1(a, a).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim_rcmd(a, a).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim_avg(a, a).value == doctest::Approx(1.0).epsilon(1e-12));

  TokenMatrix e1, e2;
  e1.vectors = Matrix::Zero(1, 2);
  e1.vectors(0, 0) = 1.0;
  e2.vectors = Matrix::Zero(1, 2);
  e2.vectors(0, 1) = 1.0;
  CHECK(sim_rcmd1(e1, e2).value == doctest::Approx(0.0));
  TokenMatrix neg = e1;
  neg.vectors = -e1.vectors;
  CHECK(sim_avg(e1, neg).value == doctest::Approx(-1.0));
}

TEST_CASE("sim_rcmd is symmetric") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracles::random_sentence(rng, 1 + trial % 5, 3);
    const auto b = oracles::random_sentence(rng, 1 + (trial + 2) % 5, 3);
    CHECK(std::abs(sim_rcmd(a, b).value - sim_rcmd(b, a).value) <= 1e-12);
    CHECK(sim_rcmd(a, b).value >= -1.0 - 1e-12);
    CHECK(sim_rcmd(a, b).value <= 1.0 + 1e-12);
  }
}

TEST_CASE("sim_avg matches the pooled cosine oracle") {
  std::mt19937_64 rng(34);
  const auto a = oracles::random_sentence(rng, 3, 6);
  const auto b = oracles::random_sentence(rng, 4, 6);
  const double want =
      oracles::naive_cosine(a.vectors.colwise().mean().transpose(),
                            b.vectors.colwise().mean().transpose());
  CHECK(sim_avg(a, b).value == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("batch_similarity trivial 1x1") {
  std::mt19937_64 rng(35);
  const auto a = oracles::random_sentence(rng, 3, 4);
  const auto res = batch_similarity({a}, {a}, nullptr, SimMethod::RCMD, PlanStorage::DENSE);
  REQUIRE(res.values.rows() == 1);
  REQUIRE(res.values.cols() == 1);
  CHECK(res.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batch_similarity dense and sparse storage agree") {
  std::mt19937_64 rng(36);
  const auto anchors = random_batch(rng, 2, 4);
  const auto positives = random_batch(rng, 2, 4);
  const auto dense =
      batch_similarity(anchors, positives, nullptr, SimMethod::RCMD, PlanStorage::DENSE);
  const auto sparse =
      batch_similarity(anchors, positives, nullptr, SimMethod::RCMD, PlanStorage::SPARSE);
  CHECK((dense.values - sparse.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sparse.stored_cost_entries <= dense.stored_cost_entries);
}

TEST_CASE("batch_similarity entries re-derive from pairwise calls") {
  std::mt19937_64 rng(37);
  const auto anchors = random_batch(rng, 3, 4);
  const auto positives = random_batch(rng, 3, 4);
  const auto negatives = random_batch(rng, 3, 4);
  const auto res =
      batch_similarity(anchors, positives, &negatives, SimMethod::RCMD, PlanStorage::SPARSE);
  REQUIRE(res.values.rows() == 3);
  REQUIRE(res.values.cols() == 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) {
      const TokenMatrix& cand = j < 3 ? positives[j] : negatives[j - 3];
      CHECK(res.values(i, j) ==
            doctest::Approx(sim_rcmd(anchors[i], cand).value).epsilon(1e-12));
    }
}

TEST_CASE("sparse accounting stays within the per-pair budget") {
  std::mt19937_64 rng(38);
  const auto anchors = random_batch(rng, 4, 3);
  const auto positives = random_batch(rng, 4, 3);
  const auto sparse =
      batch_similarity(anchors, positives, nullptr, SimMethod::RCMD, PlanStorage::SPARSE);
  std::size_t budget = 0, dense_total = 0;
  for (const auto& a : anchors)
    for (const auto& p : positives) {
      budget += static_cast<std::size_t>(a.length() + p.length());
      dense_total += static_cast<std::size_t>(a.length() * p.length());
    }
  CHECK(sparse.stored_cost_entries <= budget);
  CHECK(sparse.dense_equivalent_entries == dense_total);
}

TEST_CASE("batch_similarity rejects ragged batches") {
  std::mt19937_64 rng(39);
  const auto anchors = random_batch(rng, 2, 3);
  const auto positives = random_batch(rng, 3, 3);
  CHECK_THROWS_AS(
      batch_similarity(anchors, positives, nullptr, SimMethod::RCMD, PlanStorage::DENSE),
      BatchShapeMismatch);
}
