#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h, one coordinate at a time.
template <typename ScalarField>
ParamVector finite_difference_gradient(ScalarField&& f, const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite_difference_gradient: step must be positive");
  ParamVector probe = theta;
  ParamVector grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = f(static_cast<const ParamVector&>(probe));
    probe[i] = theta[i] - h;
    const double down = f(static_cast<const ParamVector&>(probe));
    probe[i] = theta[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_difference_gradient: non-finite evaluation at coordinate " +
                           std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace hflow
