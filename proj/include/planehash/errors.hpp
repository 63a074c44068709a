#pragma once

#include <stdexcept>
#include <string>

namespace planehash {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad vectors or out-of-range arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// LSH parameter combinations with p2 <= 0 or p1 <= p2.
class InvalidParameters : public Error {
 public:
  using Error::Error;
};

/// Threshold selection produced t2 >= t1 or left (0, 1).
class ThresholdDegeneracy : public Error {
 public:
  using Error::Error;
};

class OptimizationDiverged : public Error {
 public:
  using Error::Error;
};

class InvalidConfiguration : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Dataset parse failures. `row` and `column` are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  enum class Kind { EmptyDataset, MalformedRow, DimensionMismatch, NonFinite, BadHeader, Io };

  ParseError(Kind kind, std::size_t row, std::size_t column, const std::string& what)
      : Error(what), kind_(kind), row_(row), column_(column) {}

  Kind kind() const { return kind_; }
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::size_t column_;
};

}  // namespace planehash
