#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tokmov/types.hpp"

namespace tokmov {

enum class CorpusFormat { JSONL, BINARY };

/// Immutable after load; all member matrices share one embedding dimension.
struct EmbeddingCorpus {
  std::map<std::string, TokenMatrix> sentences;
  Eigen::Index dim = 0;

  const TokenMatrix& at(const std::string& id) const;
  bool contains(const std::string& id) const { return sentences.count(id) > 0; }
  std::size_t size() const { return sentences.size(); }

  void insert(TokenMatrix m);
};

EmbeddingCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
void write_corpus(const EmbeddingCorpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format);

/// Row mean of the token matrix: s = (1/L) sum_i x_i.
SentenceEmbedding avg_pool(const TokenMatrix& m);

}  // namespace tokmov
