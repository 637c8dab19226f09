#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace alignlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid sizes, ranges or mismatched dimensions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A state-dependent quantity is undefined for the given state (for example
/// a block with zero energy).
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

/// The noise profile does not support the requested quantity (s_min = 0).
class UnsupportedNoiseError : public Error {
 public:
  using Error::Error;
};

/// Step size outside the range where a closed form is valid.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A trajectory left the finite range. `step()` is the first offending step.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace alignlab
