#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "hilbert_flow/ensemble.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

enum class KernelFamily { RBF, Polynomial };
enum class BandwidthPolicy { Fixed, MedianHeuristic };

struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double sigma = 1.0;  // RBF length scale
  int degree = 10;     // polynomial degree
  double offset = 1.0;
  BandwidthPolicy bandwidth_policy = BandwidthPolicy::Fixed;

  void validate() const {
    if (family == KernelFamily::RBF && !(sigma > 0.0)) throw ArgumentError("kernel: sigma must be positive");
    if (family == KernelFamily::Polynomial && degree < 1) throw ArgumentError("kernel: degree must be >= 1");
  }

  static KernelSpec rbf(double sigma) { return KernelSpec{KernelFamily::RBF, sigma}; }
  static KernelSpec polynomial(int degree, double offset = 1.0) {
    KernelSpec k;
    k.family = KernelFamily::Polynomial;
    k.degree = degree;
    k.offset = offset;
    return k;
  }
};

// RBF:        exp(-|a-b|^2 / (2 sigma^2))
// Polynomial: (a.b / d + offset)^degree, d = vector length
inline double kernel_eval(const KernelSpec& spec, const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "kernel_eval");
  switch (spec.family) {
    case KernelFamily::RBF:
      return std::exp(-squared_distance(a, b) / (2.0 * spec.sigma * spec.sigma));
    case KernelFamily::Polynomial: {
      const double scale = a.empty() ? 1.0 : static_cast<double>(a.size());
      return std::pow(dot(a, b) / scale + spec.offset, spec.degree);
    }
  }
  return 0.0;
}

// Gradient of kernel_eval(a, b) with respect to b.
inline ParamVector kernel_grad_second(const KernelSpec& spec, const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "kernel_grad_second");
  switch (spec.family) {
    case KernelFamily::RBF: {
      const double s2 = spec.sigma * spec.sigma;
      const double k = std::exp(-squared_distance(a, b) / (2.0 * s2));
      ParamVector g(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) g[i] = (a[i] - b[i]) / s2 * k;
      return g;
    }
    case KernelFamily::Polynomial: {
      const double scale = a.empty() ? 1.0 : static_cast<double>(a.size());
      const double base = dot(a, b) / scale + spec.offset;
      const double coeff = spec.degree * std::pow(base, spec.degree - 1) / scale;
      return scaled(a, coeff);
    }
  }
  return {};
}

inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Ensemble& ensemble) {
  const std::size_t m = ensemble.size();
  Eigen::MatrixXd g(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double k = kernel_eval(spec, ensemble.particles[i], ensemble.particles[j]);
      g(i, j) = k;
      g(j, i) = k;
    }
  }
  return g;
}

// sigma with sigma^2 = med^2 / (2 ln(m + 1)), med the median pairwise distance.
inline double median_bandwidth(const Ensemble& ensemble) {
  const std::size_t m = ensemble.size();
  if (m < 2) throw DegenerateEnsemble("median_bandwidth: needs at least two particles");
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      dist.push_back(std::sqrt(squared_distance(ensemble.particles[i], ensemble.particles[j])));
    }
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t n = dist.size();
  const double med = (n % 2 == 1) ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  if (!(med > 0.0)) throw DegenerateEnsemble("median_bandwidth: particles collapsed");
  return med / std::sqrt(2.0 * std::log(static_cast<double>(m) + 1.0));
}

// The kernel actually used for one step. Median policy re-derives sigma from
// the current ensemble and keeps the configured sigma if the ensemble is degenerate.
inline KernelSpec resolve_kernel(const KernelSpec& spec, const Ensemble& ensemble) {
  if (spec.family != KernelFamily::RBF || spec.bandwidth_policy != BandwidthPolicy::MedianHeuristic) {
    return spec;
  }
  KernelSpec out = spec;
  try {
    out.sigma = median_bandwidth(ensemble);
  } catch (const DegenerateEnsemble&) {
  }
  return out;
}

}  // namespace hflow
