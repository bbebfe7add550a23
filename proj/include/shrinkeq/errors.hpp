#pragma once

#include <stdexcept>
#include <string>

namespace shrinkeq {

// Thrown when an algorithm breaks down numerically: failed factorizations,
// near-singular denominators, violated stability conditions, non-convergence.
// Precondition violations (bad shapes, out-of-range parameters) use
// std::invalid_argument instead; the CLI maps the two to distinct exit codes.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A denominator that must stay away from zero got within tolerance of it.
class singularity_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

}  // namespace shrinkeq
