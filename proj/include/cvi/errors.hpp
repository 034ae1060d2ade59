#pragma once

#include <stdexcept>
#include <string>

namespace cvi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Environment data that cannot describe a valid MDP.
struct InvalidEnv : Error {
  using Error::Error;
};

// Iterative solver hit its iteration cap before meeting the stopping rule.
struct NonConvergence : Error {
  using Error::Error;
};

// Loss of positive definiteness or a non-positive determinant ratio.
struct NumericalBreakdown : Error {
  using Error::Error;
};

struct InvalidHorizon : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Oracle failure surfaced by the experiment harness.
struct SolverError : Error {
  using Error::Error;
};

// An algorithmic invariant was broken; always a bug, never a data problem.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace cvi
