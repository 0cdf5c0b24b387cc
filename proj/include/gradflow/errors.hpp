#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gradflow {

/// Argument outside the mathematical domain of an operation (non-finite
/// input, asymmetric matrix, non-C1 potential, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation called with the wrong shape or an unsupported configuration.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite value produced during time integration or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file failed schema or consistency checks. Carries every
/// problem found, each formatted as "<json path>: <expectation>".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace gradflow
