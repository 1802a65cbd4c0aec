#pragma once

#include <stdexcept>
#include <string>

namespace bfopt {

/// Base type for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid problem definition, configuration, or contract violation.
class SpecError : public Error {
 public:
  explicit SpecError(const std::string& what) : Error(what) {}
};

/// Expression or file syntax error with source position.
class ParseError : public SpecError {
 public:
  ParseError(const std::string& what, int line, int column)
      : SpecError(what + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// A rollout produced a non-finite or absurdly large state.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, long step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}

  long step() const { return step_; }

 private:
  long step_;
};

/// The objective is non-finite at the expansion point.
class BasePointError : public Error {
 public:
  explicit BasePointError(const std::string& what) : Error(what) {}
};

/// Gradient estimation failed (rank deficiency, too many dropped samples).
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error(what) {}
};

}  // namespace bfopt
