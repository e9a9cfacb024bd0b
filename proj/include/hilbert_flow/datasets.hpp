#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "hilbert_flow/dataset.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/rng.hpp"

namespace hflow {

// Isotropic Gaussian clusters, one per class.
struct GaussianBlobs {
  std::vector<std::vector<double>> centers;
  double spread = 1.0;
  std::size_t per_class = 50;
};

// Two interleaving half-circles ("moons") with Gaussian jitter.
struct TwoArcs {
  double noise = 0.1;
  std::size_t per_class = 50;
};

struct DatasetSpec {
  std::variant<GaussianBlobs, TwoArcs> generator;
  std::uint64_t seed = 0;

  void validate() const {
    if (const auto* b = std::get_if<GaussianBlobs>(&generator)) {
      if (b->centers.size() < 2) throw ArgumentError("blobs: need at least two centers");
      for (const auto& c : b->centers) {
        if (c.empty() || c.size() != b->centers.front().size()) {
          throw ArgumentError("blobs: centers must share a nonzero dimension");
        }
      }
      if (!(b->spread > 0.0)) throw ArgumentError("blobs: spread must be positive");
      if (b->per_class < 1) throw ArgumentError("blobs: per_class must be >= 1");
    } else {
      const auto& a = std::get<TwoArcs>(generator);
      if (!(a.noise > 0.0)) throw ArgumentError("arcs: noise must be positive");
      if (a.per_class < 1) throw ArgumentError("arcs: per_class must be >= 1");
    }
  }
};

// Deterministic in (spec, stream_id). Samples are emitted round-robin over
// classes, so every prefix of length k*C is balanced. Stream 0 is the
// training split by convention, stream 1 the holdout split.
inline LabeledDataset make_dataset(const DatasetSpec& spec, std::uint64_t stream_id = 0) {
  spec.validate();
  RngStream rng(spec.seed, stream_id);
  LabeledDataset out;
  if (const auto* b = std::get_if<GaussianBlobs>(&spec.generator)) {
    out.class_count = b->centers.size();
    for (std::size_t i = 0; i < b->per_class; ++i) {
      for (std::size_t c = 0; c < b->centers.size(); ++c) {
        std::vector<double> x(b->centers[c].size());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = b->centers[c][j] + b->spread * rng.normal();
        out.inputs.push_back(std::move(x));
        out.labels.push_back(c);
      }
    }
  } else {
    const auto& a = std::get<TwoArcs>(spec.generator);
    out.class_count = 2;
    for (std::size_t i = 0; i < a.per_class; ++i) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double t = std::numbers::pi * rng.uniform();
        double x0 = std::cos(t);
        double x1 = std::sin(t);
        if (c == 1) {
          x0 = 1.0 - x0;
          x1 = 0.5 - x1;
        }
        out.inputs.push_back({x0 + a.noise * rng.normal(), x1 + a.noise * rng.normal()});
        out.labels.push_back(c);
      }
    }
  }
  return out;
}

}  // namespace hflow
