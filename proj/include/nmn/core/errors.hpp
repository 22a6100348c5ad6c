#pragma once

#include <stdexcept>
#include <string>

namespace nmn {

/// Shape or length mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or infinity appeared where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown kind, bad hyper-parameter, malformed file.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An object was used in a state that does not permit the call.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An internal invariant that the algorithm guarantees did not hold.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The operation needs a different network variant (e.g. z on an RNN).
class VariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace nmn
