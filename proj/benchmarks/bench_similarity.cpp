// Microbenchmarks for the per-pair similarity paths and plan construction.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tokmov/similarity.hpp"
#include "tokmov/transport.hpp"

using namespace tokmov;

namespace {

TokenMatrix random_sentence(std::mt19937_64& rng, int len, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  TokenMatrix m;
  m.sentence_id = "b";
  m.vectors.resize(len, dim);
  for (Eigen::Index i = 0; i < len; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m.vectors(i, j) = gauss(rng);
  return m;
}

std::vector<std::pair<TokenMatrix, TokenMatrix>> make_pairs(int n, int len, int dim) {
  std::mt19937_64 rng(1234);
  std::vector<std::pair<TokenMatrix, TokenMatrix>> pairs;
  pairs.reserve(n);
  for (int i = 0; i < n; ++i)
    pairs.emplace_back(random_sentence(rng, len, dim), random_sentence(rng, len, dim));
  return pairs;
}

void BM_SimAvg(benchmark::State& state) {
  const auto pairs = make_pairs(64, static_cast<int>(state.range(0)), 16);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[k++ % pairs.size()];
    benchmark::DoNotOptimize(sim_avg(a, b).value);
  }
}

void BM_SimRcmd(benchmark::State& state) {
  const auto pairs = make_pairs(64, static_cast<int>(state.range(0)), 16);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[k++ % pairs.size()];
    benchmark::DoNotOptimize(sim_rcmd(a, b).value);
  }
}

void BM_ExactEmd(benchmark::State& state) {
  const auto pairs = make_pairs(16, static_cast<int>(state.range(0)), 16);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[k++ % pairs.size()];
    benchmark::DoNotOptimize(sim_emd(a, b).value);
  }
}

void BM_BidirectionalPlan(benchmark::State& state) {
  const auto pairs = make_pairs(64, static_cast<int>(state.range(0)), 16);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[k++ % pairs.size()];
    const auto plan = rcmd_bidirectional_plan(cmd_cost(a, b));
    benchmark::DoNotOptimize(plan.stored_entries());
  }
}

BENCHMARK(BM_SimAvg)->Arg(8)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(BM_SimRcmd)->Arg(8)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(BM_ExactEmd)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK(BM_BidirectionalPlan)->Arg(8)->Arg(16)->Arg(32)->Arg(48);

}  // namespace

BENCHMARK_MAIN();
