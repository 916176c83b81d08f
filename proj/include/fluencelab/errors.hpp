#pragma once

#include <stdexcept>
#include <string>

namespace fluencelab {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Numerical failure: singular evaluation, non-convergence, degenerate statistic.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fluencelab
