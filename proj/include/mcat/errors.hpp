#ifndef MCAT_ERRORS_HPP
#define MCAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcat {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Input-validation failures (bad tables, labels, counts).
struct ValidationError : Error {
  using Error::Error;
};

struct NegativeCountError : ValidationError {
  using ValidationError::ValidationError;
};

struct LabelMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

struct EmptyControlRowError : ValidationError {
  using ValidationError::ValidationError;
};

struct EmptyCaseBlockError : ValidationError {
  using ValidationError::ValidationError;
};

struct DimensionMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidScenarioError : ValidationError {
  using ValidationError::ValidationError;
};

struct EmptyStratumError : ValidationError {
  using ValidationError::ValidationError;
};

// Numeric-domain failures (parameters outside the mathematical domain).
struct DomainError : Error {
  using Error::Error;
};

struct ZeroDenominatorError : DomainError {
  using DomainError::DomainError;
};

// Malformed input files.
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

// File-system failures (open/read/write).
struct IoError : Error {
  using Error::Error;
};

}  // namespace mcat

#endif  // MCAT_ERRORS_HPP
