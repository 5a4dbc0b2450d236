#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace millopt {

/// Invalid input to a library call (bad dimensions, non-finite data, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear solve failed to reach its residual target.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> residual_history = {})
      : std::runtime_error(what), history_(std::move(residual_history)) {}

  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace millopt
