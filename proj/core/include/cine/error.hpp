#pragma once

#include <stdexcept>
#include <string>

namespace cine {

// Base of every error raised by the library. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Extents of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or parameter value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Merge precondition: some phase-encode line was never sampled.
class CoverageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// FFT extent that is not a power of two.
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered, divergence, or solver failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of an API contract (e.g. backward from a non-scalar node).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cine
