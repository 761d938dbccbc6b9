#pragma once

#include <stdexcept>
#include <string>

namespace hetnet {

/// A linear-algebra step failed (e.g. a covariance that is not positive
/// definite). Mapped to exit code 1 by the CLI.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed configuration or scenario input. Mapped to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hetnet
