#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace tokmov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class ZeroVectorError : public Error {
public:
  using Error::Error;
};

class DegeneratePooledEmbedding : public Error {
public:
  using Error::Error;
};

class ScaleExceeded : public Error {
public:
  using Error::Error;
};

class CycleSuspected : public Error {
public:
  using Error::Error;
};

class BatchShapeMismatch : public Error {
public:
  using Error::Error;
};

class DegenerateBatch : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class MissingSentence : public Error {
public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
public:
  using Error::Error;
};

/// Contextualized token embeddings for one sentence: L tokens, D dims.
/// Token strings are carried for display only.
struct TokenMatrix {
  std::string sentence_id;
  std::vector<std::string> tokens;
  Matrix vectors;  // L x D

  Eigen::Index length() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }

  // Throws unless L >= 1, D >= 1, every entry finite and no all-zero row.
  void validate() const;
};

struct SentenceEmbedding {
  Vector vector;
};

}  // namespace tokmov
