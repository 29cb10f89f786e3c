#pragma once

#include <stdexcept>
#include <string>

namespace susyq {

/// Process exit codes used by the command-line runner.
enum class ExitCode : int {
  success = 0,
  config_error = 2,
  truncation_insufficient = 3,
  combinatorial_cap = 4,
  numerical_failure = 5,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Argument outside the mathematical domain of an operation (bad index, x at a wall, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// The final basis is too small to represent the initial states to the requested accuracy.
class TruncationError : public Error {
 public:
  explicit TruncationError(const std::string& what)
      : Error(what, ExitCode::truncation_insufficient) {}
};

class CombinatorialCapError : public Error {
 public:
  explicit CombinatorialCapError(const std::string& what)
      : Error(what, ExitCode::combinatorial_cap) {}
};

/// Non-finite values, failed root brackets, singular matrices, broken internal invariants.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::numerical_failure) {}
};

}  // namespace susyq
