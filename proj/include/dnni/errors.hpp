#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dnni {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed integrand text. `offset` is the byte position of the failure.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the real domain (log of non-positive, sqrt of negative,
/// division by zero, non-finite intermediate) or referenced an unbound name.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensions: network shapes, stale tapes, training-set widths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  long epoch() const noexcept { return epoch_; }

 private:
  long epoch_;
};

/// Tridiagonal elimination hit an exactly zero pivot.
class ZeroPivotError : public Error {
 public:
  ZeroPivotError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Quadrature did not reach its tolerance within its budget.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Model file does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dnni
