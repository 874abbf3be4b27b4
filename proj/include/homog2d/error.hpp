#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homog2d {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Krylov iteration fails to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}

  /// Relative residual after each iteration.
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Raised by the config reader. `line` is 0 for semantic errors.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace homog2d
