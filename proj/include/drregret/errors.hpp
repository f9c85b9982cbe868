#pragma once

#include <stdexcept>
#include <string>

namespace drr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or sequence lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A numeric precondition failed (non-PSD covariance, alpha out of range, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An iterative routine did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected; `field()` holds the dotted path, e.g. "cost.R".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace drr
