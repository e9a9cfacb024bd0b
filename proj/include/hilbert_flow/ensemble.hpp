#pragma once

#include <cstddef>
#include <vector>

#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

// The particle set transported by the samplers, plus its step counter.
struct Ensemble {
  std::vector<ParamVector> particles;
  std::size_t step = 0;

  std::size_t size() const noexcept { return particles.size(); }
  std::size_t dim() const noexcept { return particles.empty() ? 0 : particles.front().size(); }

  void validate() const {
    if (particles.empty()) throw ArgumentError("ensemble: needs at least one particle");
    for (const auto& p : particles) {
      if (p.size() != dim()) throw ArgumentError("ensemble: particles differ in dimension");
      if (!all_finite(p)) throw ArgumentError("ensemble: non-finite particle");
    }
  }
};

inline bool operator==(const Ensemble& a, const Ensemble& b) {
  return a.step == b.step && a.particles == b.particles;
}

}  // namespace hflow
