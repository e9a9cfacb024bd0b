#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hilbert_flow/dataset.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/softmax.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

namespace detail {

inline void check_batch(const LabeledDataset& batch, std::size_t input_dim, std::size_t classes) {
  if (batch.size() == 0) throw ArgumentError("empty batch");
  if (batch.inputs.size() != batch.labels.size()) throw ArgumentError("batch inputs/labels mismatch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.inputs[i].size() != input_dim) {
      throw ArgumentError("batch feature dimension " + std::to_string(batch.inputs[i].size()) +
                          " does not match model input " + std::to_string(input_dim));
    }
    if (batch.labels[i] >= classes) throw ArgumentError("batch label out of range");
  }
}

inline void check_params(const ParamVector& params, std::size_t expected) {
  if (params.size() != expected) {
    throw ArgumentError("parameter vector has length " + std::to_string(params.size()) +
                        ", model expects " + std::to_string(expected));
  }
}

}  // namespace detail

// Multinomial logistic regression: logits = W x + b.
// Layout: W (class_count x input_dim, row-major), then b.
struct LinearSoftmaxSpec {
  std::size_t input_dim = 0;
  std::size_t class_count = 0;

  std::size_t parameter_count() const noexcept { return class_count * (input_dim + 1); }

  std::vector<double> logits(const ParamVector& params, const std::vector<double>& x) const {
    std::vector<double> out(class_count);
    const std::size_t bias = class_count * input_dim;
    for (std::size_t c = 0; c < class_count; ++c) {
      double s = params[bias + c];
      for (std::size_t j = 0; j < input_dim; ++j) s += params[c * input_dim + j] * x[j];
      out[c] = s;
    }
    return out;
  }

  LossAndGrad loss_and_grad(const ParamVector& params, const LabeledDataset& batch) const {
    detail::check_params(params, parameter_count());
    detail::check_batch(batch, input_dim, class_count);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const std::size_t bias = class_count * input_dim;
    LossAndGrad out{0.0, ParamVector(parameter_count(), 0.0)};
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& x = batch.inputs[i];
      const auto z = logits(params, x);
      out.loss += softmax_cross_entropy(z, batch.labels[i]);
      auto p = softmax(z);
      p[batch.labels[i]] -= 1.0;
      for (std::size_t c = 0; c < class_count; ++c) {
        const double delta = p[c] * inv_n;
        for (std::size_t j = 0; j < input_dim; ++j) out.grad[c * input_dim + j] += delta * x[j];
        out.grad[bias + c] += delta;
      }
    }
    out.loss *= inv_n;
    return out;
  }
};

// One tanh hidden layer followed by a linear softmax head.
// Layout: W1 (hidden x input), b1 (hidden), W2 (classes x hidden), b2 (classes).
struct MLPSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t class_count = 0;

  std::size_t parameter_count() const noexcept {
    return hidden_dim * (input_dim + 1) + class_count * (hidden_dim + 1);
  }

  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept { return hidden_dim * input_dim; }
  std::size_t w2_offset() const noexcept { return hidden_dim * (input_dim + 1); }
  std::size_t b2_offset() const noexcept { return w2_offset() + class_count * hidden_dim; }

  std::vector<double> hidden(const ParamVector& params, const std::vector<double>& x) const {
    std::vector<double> h(hidden_dim);
    for (std::size_t k = 0; k < hidden_dim; ++k) {
      double a = params[b1_offset() + k];
      for (std::size_t j = 0; j < input_dim; ++j) a += params[w1_offset() + k * input_dim + j] * x[j];
      h[k] = std::tanh(a);
    }
    return h;
  }

  std::vector<double> logits_from_hidden(const ParamVector& params, const std::vector<double>& h) const {
    std::vector<double> out(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
      double s = params[b2_offset() + c];
      for (std::size_t k = 0; k < hidden_dim; ++k) s += params[w2_offset() + c * hidden_dim + k] * h[k];
      out[c] = s;
    }
    return out;
  }

  std::vector<double> logits(const ParamVector& params, const std::vector<double>& x) const {
    return logits_from_hidden(params, hidden(params, x));
  }

  LossAndGrad loss_and_grad(const ParamVector& params, const LabeledDataset& batch) const {
    detail::check_params(params, parameter_count());
    detail::check_batch(batch, input_dim, class_count);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    LossAndGrad out{0.0, ParamVector(parameter_count(), 0.0)};
    std::vector<double> dh(hidden_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& x = batch.inputs[i];
      const auto h = hidden(params, x);
      const auto z = logits_from_hidden(params, h);
      out.loss += softmax_cross_entropy(z, batch.labels[i]);

      auto dz = softmax(z);
      dz[batch.labels[i]] -= 1.0;
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t c = 0; c < class_count; ++c) {
        const double delta = dz[c] * inv_n;
        for (std::size_t k = 0; k < hidden_dim; ++k) {
          out.grad[w2_offset() + c * hidden_dim + k] += delta * h[k];
          dh[k] += delta * params[w2_offset() + c * hidden_dim + k];
        }
        out.grad[b2_offset() + c] += delta;
      }
      for (std::size_t k = 0; k < hidden_dim; ++k) {
        const double da = dh[k] * (1.0 - h[k] * h[k]);
        for (std::size_t j = 0; j < input_dim; ++j) out.grad[w1_offset() + k * input_dim + j] += da * x[j];
        out.grad[b1_offset() + k] += da;
      }
    }
    out.loss *= inv_n;
    return out;
  }
};

inline LossAndGrad mlp_loss_and_grad(const MLPSpec& spec, const ParamVector& params,
                                     const LabeledDataset& batch) {
  return spec.loss_and_grad(params, batch);
}

}  // namespace hflow
