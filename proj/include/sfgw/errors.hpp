#pragma once

#include <stdexcept>
#include <string>

namespace sfgw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument values (negative concentration, weights not summing to one, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class SizeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A numerical procedure failed: quadrature did not converge, a rejection
/// sampler exhausted its budget, a vector could not be normalized.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Iterates became non-finite during an optimization or flow.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, long step)
      : NumericError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Malformed input files.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, long line, long column = 0)
      : Error(what), line_(line), column_(column) {}
  long line() const noexcept { return line_; }
  long column() const noexcept { return column_; }

 private:
  long line_;
  long column_;
};

/// A cell that is not a finite decimal number.
class ParseError : public FormatError {
 public:
  using FormatError::FormatError;
};

class EmptyInputError : public FormatError {
 public:
  explicit EmptyInputError(const std::string& what) : FormatError(what, 0) {}
};

}  // namespace sfgw
