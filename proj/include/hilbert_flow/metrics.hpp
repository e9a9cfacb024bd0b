#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hilbert_flow/ensemble.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/targets.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

// One row of a run's trajectory. Metrics that are undefined for the run
// (e.g. ECE on an analytic target, angular similarity with one particle) are empty.
struct MetricsRecord {
  std::size_t step = 0;
  std::optional<double> train_loss;
  std::optional<double> holdout_loss;
  std::vector<double> sharpness_per_particle;
  std::optional<double> mean_angular_similarity;
  std::optional<double> grad_cov_frobenius;
  std::optional<double> ece;
  std::optional<double> accuracy;
  std::optional<double> moment_error;

  std::optional<double> sharpness_mean() const {
    if (sharpness_per_particle.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : sharpness_per_particle) s += v;
    return s / static_cast<double>(sharpness_per_particle.size());
  }

  std::optional<double> sharpness_max() const {
    if (sharpness_per_particle.empty()) return std::nullopt;
    return *std::max_element(sharpness_per_particle.begin(), sharpness_per_particle.end());
  }
};

inline bool operator==(const MetricsRecord& a, const MetricsRecord& b) {
  return a.step == b.step && a.train_loss == b.train_loss && a.holdout_loss == b.holdout_loss &&
         a.sharpness_per_particle == b.sharpness_per_particle &&
         a.mean_angular_similarity == b.mean_angular_similarity && a.grad_cov_frobenius == b.grad_cov_frobenius &&
         a.ece == b.ece && a.accuracy == b.accuracy && a.moment_error == b.moment_error;
}

// One-ascent-step estimate of max_{|e|<=rho} L(theta + e) - L(theta) for any
// loss exposed as theta -> LossAndGrad.
template <typename LossFn>
double sam_sharpness_of(LossFn&& loss_and_grad, const ParamVector& theta, double rho) {
  if (!(rho > 0.0)) throw ArgumentError("sam_sharpness: rho must be positive");
  const LossAndGrad base = loss_and_grad(theta);
  const double gnorm = norm(base.grad);
  if (gnorm < 1e-12) return 0.0;
  ParamVector probe = theta;
  axpy(rho / gnorm, base.grad, probe);
  return loss_and_grad(static_cast<const ParamVector&>(probe)).loss - base.loss;
}

inline double sam_sharpness(const Target& target, const ParamVector& theta, double rho, Split which) {
  if (target.is_analytic()) throw UnsupportedOperation("sharpness is defined on data targets only");
  require_dim(target, theta);
  const LabeledDataset& data = target.split(which);
  return sam_sharpness_of([&](const ParamVector& p) { return target.data_loss_and_grad(p, data); }, theta, rho);
}

// Mean cosine over unordered pairs; zero gradients are left out of every pair.
inline double angular_similarity(const std::vector<ParamVector>& gradients) {
  if (gradients.size() < 2) throw ArgumentError("angular_similarity: needs at least two gradients");
  std::vector<double> norms(gradients.size());
  for (std::size_t i = 0; i < gradients.size(); ++i) norms[i] = norm(gradients[i]);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    if (norms[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < gradients.size(); ++j) {
      if (norms[j] == 0.0) continue;
      total += dot(gradients[i], gradients[j]) / (norms[i] * norms[j]);
      ++pairs;
    }
  }
  if (pairs == 0) throw ArgumentError("angular_similarity: fewer than two nonzero gradients");
  return total / static_cast<double>(pairs);
}

// Frobenius norm of the d x d sample covariance (divisor m-1). Computed through
// the m x m centered Gram matrix, since |X^T X|_F = |X X^T|_F.
inline double grad_cov_frobenius(const std::vector<ParamVector>& gradients) {
  const std::size_t m = gradients.size();
  if (m < 2) throw ArgumentError("grad_cov_frobenius: needs at least two gradients");
  const std::size_t d = gradients.front().size();
  ParamVector mean(d, 0.0);
  for (const auto& g : gradients) {
    require_same_size(g, mean, "grad_cov_frobenius");
    axpy(1.0, g, mean);
  }
  for (double& v : mean) v /= static_cast<double>(m);
  std::vector<ParamVector> centered;
  centered.reserve(m);
  for (const auto& g : gradients) centered.push_back(subtract(g, mean));
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dot(centered[i], centered[j]);
      sum_sq += g * g;
    }
  }
  return std::sqrt(sum_sq) / static_cast<double>(m - 1);
}

using ProbabilityMatrix = std::vector<std::vector<double>>;

// Average of the particles' softmax outputs.
inline ProbabilityMatrix ensemble_predict(const Ensemble& ensemble, const Target& target,
                                          const std::vector<std::vector<double>>& inputs) {
  if (target.is_analytic()) throw UnsupportedOperation("prediction is undefined for analytic targets");
  ensemble.validate();
  ProbabilityMatrix out;
  out.reserve(inputs.size());
  const double inv_m = 1.0 / static_cast<double>(ensemble.size());
  for (const auto& x : inputs) {
    std::vector<double> avg;
    for (const auto& theta : ensemble.particles) {
      const auto p = target.predict_proba(theta, x);
      if (avg.empty()) avg.assign(p.size(), 0.0);
      for (std::size_t c = 0; c < p.size(); ++c) avg[c] += p[c];
    }
    for (double& v : avg) v *= inv_m;
    out.push_back(std::move(avg));
  }
  return out;
}

inline std::size_t argmax(const std::vector<double>& row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

inline double accuracy(const ProbabilityMatrix& probabilities, const std::vector<std::size_t>& labels) {
  if (probabilities.empty() || probabilities.size() != labels.size()) {
    throw ArgumentError("accuracy: need one nonempty row per label");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += (argmax(probabilities[i]) == labels[i]);
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

enum class CalibrationReduction { Expected, Maximum };

// Binned calibration error over (confidence, correct) pairs. Bins split [0, 1]
// into equal widths; confidence 1 lands in the top bin. Expected weights each
// bin's |acc - conf| gap by its share of samples, Maximum takes the largest gap.
inline double calibration_error(const std::vector<double>& confidences, const std::vector<bool>& correct,
                                std::size_t bins, CalibrationReduction reduction = CalibrationReduction::Expected) {
  if (confidences.empty()) throw ArgumentError("ece: empty input");
  if (confidences.size() != correct.size()) throw ArgumentError("ece: confidence/correctness size mismatch");
  if (bins < 1) throw ArgumentError("ece: bins must be >= 1");
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> hit_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("ece: confidence outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)));
    conf_sum[b] += c;
    hit_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(confidences.size());
  double result = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    const double gap = std::abs(hit_sum[b] / nb - conf_sum[b] / nb);
    if (reduction == CalibrationReduction::Expected) {
      result += (nb / n) * gap;
    } else {
      result = std::max(result, gap);
    }
  }
  return result;
}

// Confidence is the max class probability, correctness compares its argmax with the label.
inline double ece(const ProbabilityMatrix& probabilities, const std::vector<std::size_t>& labels, std::size_t bins,
                  CalibrationReduction reduction = CalibrationReduction::Expected) {
  if (probabilities.empty()) throw ArgumentError("ece: empty input");
  if (probabilities.size() != labels.size()) throw ArgumentError("ece: one label per row required");
  std::vector<double> conf(probabilities.size());
  std::vector<bool> correct(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const auto& row = probabilities[i];
    double total = 0.0;
    for (double v : row) total += v;
    if (std::abs(total - 1.0) > 1e-6) throw ArgumentError("ece: row does not sum to 1");
    const std::size_t k = argmax(row);
    conf[i] = row[k];
    correct[i] = (k == labels[i]);
  }
  return calibration_error(conf, correct, bins, reduction);
}

// |mean_hat - mu| + |cov_hat - Sigma|_F; a single particle has zero covariance.
inline double moment_error(const Ensemble& ensemble, const Target& target) {
  if (!target.is_analytic()) throw UnsupportedOperation("moment error needs an analytic target");
  ensemble.validate();
  const std::size_t m = ensemble.size();
  const std::size_t d = target.dim();
  if (ensemble.dim() != d) throw ArgumentError("moment_error: dimension mismatch");
  ParamVector mean(d, 0.0);
  for (const auto& p : ensemble.particles) axpy(1.0, p, mean);
  for (double& v : mean) v /= static_cast<double>(m);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  if (m >= 2) {
    for (const auto& p : ensemble.particles) {
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += (p[r] - mean[r]) * (p[c] - mean[c]);
        }
      }
    }
    cov /= static_cast<double>(m - 1);
  }
  const double mean_err = std::sqrt(squared_distance(mean, target.analytic_mean()));
  return mean_err + (cov - target.analytic_covariance()).norm();
}

}  // namespace hflow
