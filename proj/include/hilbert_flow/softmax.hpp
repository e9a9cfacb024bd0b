#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hilbert_flow/errors.hpp"

namespace hflow {

inline std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - top);
    z += p[c];
  }
  for (double& v : p) v /= z;
  return p;
}

// -log softmax(logits)[label], evaluated with the max subtracted.
inline double softmax_cross_entropy(const std::vector<double>& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  return std::log(z) - (logits[label] - top);
}

}  // namespace hflow
