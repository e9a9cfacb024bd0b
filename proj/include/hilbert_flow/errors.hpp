#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hflow {

// Invalid caller input: dimension mismatch, out-of-range label, bad size.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A function evaluation produced NaN or Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requested on a target variant that does not support it
// (e.g. empirical loss of an analytic density).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Ensemble too small or collapsed for the requested statistic.
class DegenerateEnsemble : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t particle, std::size_t step)
      : std::runtime_error("non-finite update for particle " + std::to_string(particle) +
                           " at step " + std::to_string(step)),
        particle_(particle),
        step_(step) {}

  std::size_t particle() const noexcept { return particle_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t particle_;
  std::size_t step_;
};

}  // namespace hflow
