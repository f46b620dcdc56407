#include "tokmov/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace tokmov {

void TokenMatrix::validate() const {
  if (vectors.rows() < 1 || vectors.cols() < 1)
    throw DimensionMismatch("sentence '" + sentence_id + "': empty token matrix");
  if (!tokens.empty() && static_cast<Eigen::Index>(tokens.size()) != vectors.rows())
    throw DimensionMismatch("sentence '" + sentence_id + "': token count " +
                            std::to_string(tokens.size()) + " != row count " +
                            std::to_string(vectors.rows()));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    if (!vectors.row(i).allFinite())
      throw ParseError("sentence '" + sentence_id + "': non-finite entry in row " +
                       std::to_string(i));
    if (vectors.row(i).isZero(0.0))
      throw ZeroVectorError("sentence '" + sentence_id + "': all-zero vector at row " +
                            std::to_string(i));
  }
}

const TokenMatrix& EmbeddingCorpus::at(const std::string& id) const {
  auto it = sentences.find(id);
  if (it == sentences.end()) throw MissingSentence("unknown sentence id '" + id + "'");
  return it->second;
}

void EmbeddingCorpus::insert(TokenMatrix m) {
  m.validate();
  if (dim == 0)
    dim = m.dim();
  else if (m.dim() != dim)
    throw DimensionMismatch("sentence '" + m.sentence_id + "': dimension " +
                            std::to_string(m.dim()) + " != corpus dimension " +
                            std::to_string(dim));
  if (sentences.count(m.sentence_id))
    throw ParseError("duplicate sentence id '" + m.sentence_id + "'");
  sentences.emplace(m.sentence_id, std::move(m));
}

SentenceEmbedding avg_pool(const TokenMatrix& m) {
  return SentenceEmbedding{m.vectors.colwise().mean().transpose()};
}

namespace {

EmbeddingCorpus load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  EmbeddingCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      TokenMatrix m;
      m.sentence_id = rec.at("id").get<std::string>();
      m.tokens = rec.at("tokens").get<std::vector<std::string>>();
      auto rows = rec.at("vectors").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw ParseError("empty vectors");
      m.vectors.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
          throw DimensionMismatch("ragged vector rows in sentence '" + m.sentence_id + "'");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
          m.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
      corpus.insert(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

constexpr char kMagic[4] = {'T', 'M', 'V', '1'};

template <typename T>
T read_raw(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError(std::string("truncated binary corpus while reading ") + what);
  return v;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

EmbeddingCorpus load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("'" + path.string() + "': bad magic, not a TMV1 corpus");
  const auto dim = read_raw<std::uint32_t>(in, "dimension");
  if (dim == 0) throw ParseError("corpus dimension is zero");
  EmbeddingCorpus corpus;
  while (in.peek() != EOF) {
    TokenMatrix m;
    const auto id_len = read_raw<std::uint32_t>(in, "id length");
    m.sentence_id.resize(id_len);
    in.read(m.sentence_id.data(), id_len);
    if (!in) throw ParseError("truncated sentence id");
    const auto n_tokens = read_raw<std::uint32_t>(in, "token count");
    m.tokens.resize(n_tokens);
    for (auto& tok : m.tokens) {
      const auto tok_len = read_raw<std::uint32_t>(in, "token length");
      tok.resize(tok_len);
      in.read(tok.data(), tok_len);
      if (!in) throw ParseError("truncated token string");
    }
    m.vectors.resize(n_tokens, dim);
    for (std::uint32_t i = 0; i < n_tokens; ++i)
      for (std::uint32_t j = 0; j < dim; ++j)
        m.vectors(i, j) = read_raw<double>(in, "embedding value");
    corpus.insert(std::move(m));
  }
  return corpus;
}

void write_jsonl(const EmbeddingCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& [id, m] : corpus.sentences) {
    nlohmann::json rec;
    rec["id"] = id;
    rec["tokens"] = m.tokens;
    std::vector<std::vector<double>> rows(m.length());
    for (Eigen::Index i = 0; i < m.length(); ++i)
      rows[i].assign(m.vectors.row(i).begin(), m.vectors.row(i).end());
    rec["vectors"] = rows;
    out << rec.dump() << '\n';
  }
}

void write_binary(const EmbeddingCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(kMagic, 4);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(corpus.dim));
  for (const auto& [id, m] : corpus.sentences) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(m.length()));
    for (const auto& tok : m.tokens) {
      write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(tok.size()));
      out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
    }
    for (Eigen::Index i = 0; i < m.length(); ++i)
      for (Eigen::Index j = 0; j < m.dim(); ++j) write_raw<double>(out, m.vectors(i, j));
  }
}

}  // namespace

EmbeddingCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return format == CorpusFormat::JSONL ? load_jsonl(path) : load_binary(path);
}

void write_corpus(const EmbeddingCorpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format) {
  if (format == CorpusFormat::JSONL)
    write_jsonl(corpus, path);
  else
    write_binary(corpus, path);
}

}  // namespace tokmov
