#pragma once

#include <stdexcept>
#include <string>

namespace trapsim {

// Argument outside the mathematical domain of an operation, or a value that
// violates a type invariant.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The data shows no observable decay, so the decay constant is not bounded
// from above.
class UnboundedFitError : public FitError {
 public:
  using FitError::FitError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trapsim
