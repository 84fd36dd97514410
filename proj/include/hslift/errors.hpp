#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hslift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: invalid sizes, unknown names, malformed configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two objects live on incompatible bases or regularity tags.
class TagMismatch : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A stepping scheme tripped its blow-up guard at a given step.
class GuardTripped : public NumericalError {
 public:
  GuardTripped(const std::string& what, std::size_t step)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace hslift
