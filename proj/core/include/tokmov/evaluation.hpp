#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tokmov/embedding.hpp"
#include "tokmov/similarity.hpp"

namespace tokmov {

struct ScoredPair {
  std::string id;
  std::string sid1;
  std::string sid2;
  std::optional<double> gold_score;
};

std::vector<ScoredPair> load_pairs_tsv(const std::filesystem::path& path);

/// Pearson correlation of mean-rank-transformed vectors. Returns nullopt when
/// either side has zero rank variance (the correlation is undefined there).
std::optional<double> spearman(const std::vector<double>& pred, const std::vector<double>& gold);

struct StsResult {
  std::vector<double> scores;  // one per pair, in input order
  std::optional<double> spearman_gold;
};

StsResult evaluate_sts(const EmbeddingCorpus& corpus, const std::vector<ScoredPair>& pairs,
                       SimMethod method);

struct BenchRow {
  std::string method;  // e.g. "avg", "rcmd_dense", "rcmd_sparse"
  int pairs = 0;
  int seq_len = 0;
  int repeats = 0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  std::size_t dense_entries = 0;   // L1*L2 per pair, summed
  std::size_t sparse_entries = 0;  // actually stored cost entries, summed
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

struct BenchConfig {
  std::vector<std::string> methods = {"avg", "rcmd_dense", "rcmd_sparse"};
  std::vector<int> seq_lens = {8, 16, 32, 48};
  int pairs = 512;
  int repeats = 10;
  int dim = 16;
  std::uint64_t seed = 0;
};

/// Times similarity prediction over `pairs` random sentence pairs per cell,
/// single-threaded, one warm-up iteration excluded, monotonic clock. Entry
/// counts come from the plans actually built and are checked against the
/// closed forms by the caller's tests.
BenchReport bench(const BenchConfig& cfg);

void write_bench_csv(const BenchReport& report, std::ostream& out);

}  // namespace tokmov
