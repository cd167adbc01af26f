#pragma once

#include <stdexcept>
#include <string>

namespace tiode {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer extents do not line up.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Invalid configuration value (bad enum, non-positive step, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

// API misuse (non-scalar loss, missing precondition).
class UsageError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Non-finite state encountered while integrating or training.
class NumericError : public Error {
public:
  using Error::Error;
};

class DivergenceError : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace tiode
