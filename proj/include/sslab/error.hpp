#pragma once

#include <stdexcept>
#include <string>

namespace sslab {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared where finite input or output is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested operation (zero variance, one class).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Perplexity calibration failed for a specific affinity row.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::size_t row)
      : Error(what), row_(row) {}
  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// An iterative procedure produced a non-finite iterate.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : NumericError(what), step_(step) {}
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A configuration file or value failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sslab
