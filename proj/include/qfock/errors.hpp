#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfock {

enum class ErrorKind {
  invalid_input,
  resource_limit,
  numeric_failure,
  verification_failure,
};

/// Base of every error raised by the library. The kind maps onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

class ResourceLimit : public Error {
 public:
  ResourceLimit(const std::string& what, std::size_t limit)
      : Error(ErrorKind::resource_limit, what + " (limit " + std::to_string(limit) + ")"),
        limit_(limit) {}
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t limit_;
};

class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, double residual)
      : Error(ErrorKind::numeric_failure, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Cholesky breakdown: the Gram matrix lost positive definiteness at `pivot`.
class PositivityLost : public NumericFailure {
 public:
  PositivityLost(std::size_t pivot, double value)
      : NumericFailure("Cholesky breakdown at pivot " + std::to_string(pivot) + " (value " +
                           std::to_string(value) + ")",
                       value),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// A moment query needs more Fock levels than the truncation provides.
class TruncationInsufficient : public InvalidInput {
 public:
  TruncationInsufficient(std::size_t order, std::size_t required_levels)
      : InvalidInput("moment of order " + std::to_string(order) + " requires truncation N >= " +
                     std::to_string(required_levels)),
        required_levels_(required_levels) {}
  std::size_t required_levels() const noexcept { return required_levels_; }

 private:
  std::size_t required_levels_;
};

class CacheCorrupt : public Error {
 public:
  explicit CacheCorrupt(const std::string& what) : Error(ErrorKind::numeric_failure, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::verification_failure: return 1;
    case ErrorKind::numeric_failure: return 2;
    case ErrorKind::invalid_input: return 3;
    case ErrorKind::resource_limit: return 4;
  }
  return 2;
}

/// Deformation parameters must lie strictly inside (-1, 1).
inline double validate_q(double q) {
  if (!(q > -1.0 && q < 1.0)) {
    throw InvalidInput("q must lie strictly inside (-1, 1), got " + std::to_string(q));
  }
  return q;
}

}  // namespace qfock
