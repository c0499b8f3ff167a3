#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgs {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside a declared validity window (e.g. Sellmeier range).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Mathematically invalid input (nonpositive width, impossible conjugate, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Root finding found no sign change on the search interval.
class NoSolutionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration, detected before any simulation work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid numerical parameter for a filter or estimator.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Value violates a record invariant (e.g. negative line intensity).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Tabular input does not match the expected header or has no rows.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Operation produced no usable output (e.g. every bin masked).
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known (0 otherwise).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A fixed-width field could not be decoded; names the 1-based column span.
class FieldError : public FormatError {
 public:
  FieldError(const std::string& field, std::size_t first_col, std::size_t last_col,
             const std::string& text)
      : FormatError("field '" + field + "' (columns " + std::to_string(first_col) + "-" +
                    std::to_string(last_col) + ") is not numeric: '" + text + "'") {}
};

}  // namespace qgs
