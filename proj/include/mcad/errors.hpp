#pragma once

#include <stdexcept>
#include <string>

namespace mcad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid network or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Parameters for which a closed form does not exist (e.g. beta <= 20 dB/decade).
class UnsupportedParameter : public Error {
 public:
  using Error::Error;
};

/// Inconsistent matrix or vector dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// AMP produced non-finite values.
class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : Error("AMP diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace mcad
