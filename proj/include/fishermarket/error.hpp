#pragma once

#include <stdexcept>
#include <string>

namespace fishermarket {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario data violates a structural invariant (budgets, capacities, demands).
class InvalidScenario : public Error {
 public:
  using Error::Error;
};

/// Input outside the alpha range an operation is defined for.
class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

/// KL divergence requested where the reference measure vanishes.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Linear (alpha = 0) best response has no unique closed form.
class DegenerateLinear : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch or other misuse of an operation's arguments.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace fishermarket
