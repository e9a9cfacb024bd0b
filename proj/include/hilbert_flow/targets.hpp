#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hilbert_flow/dataset.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/models.hpp"
#include "hilbert_flow/rng.hpp"
#include "hilbert_flow/softmax.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

class GaussianDensity {
 public:
  GaussianDensity(ParamVector mean, const Eigen::MatrixXd& covariance) : mean_(std::move(mean)) {
    const auto d = static_cast<Eigen::Index>(mean_.size());
    if (d == 0) throw ArgumentError("gaussian: empty mean");
    if (covariance.rows() != d || covariance.cols() != d) throw ArgumentError("gaussian: covariance shape mismatch");
    if (!covariance.isApprox(covariance.transpose(), 1e-12)) throw ArgumentError("gaussian: covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) throw ArgumentError("gaussian: covariance not positive definite");
    covariance_ = covariance;
    cholesky_ = llt.matrixL();
    precision_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
    log_det_ = 2.0 * cholesky_.diagonal().array().log().sum();
  }

  std::size_t dim() const noexcept { return mean_.size(); }
  const ParamVector& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  const Eigen::MatrixXd& cholesky() const noexcept { return cholesky_; }

  // -P (theta - mu), accumulated row by row in index order.
  ParamVector score(const ParamVector& theta) const {
    require_same_size(theta, mean_, "gaussian score");
    const std::size_t d = dim();
    ParamVector g(d);
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += precision_(r, c) * (theta[c] - mean_[c]);
      g[r] = -s;
    }
    return g;
  }

  double log_density(const ParamVector& theta) const {
    require_same_size(theta, mean_, "gaussian log_density");
    const std::size_t d = dim();
    double q = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += precision_(r, c) * (theta[c] - mean_[c]);
      q += (theta[r] - mean_[r]) * s;
    }
    return -0.5 * q - 0.5 * log_det_ - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  }

  ParamVector sample(RngStream& rng) const {
    const std::size_t d = dim();
    std::vector<double> z(d);
    for (double& v : z) v = rng.normal();
    ParamVector x = mean_;
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c <= r; ++c) x[r] += cholesky_(r, c) * z[c];
    }
    return x;
  }

 private:
  ParamVector mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd cholesky_;
  Eigen::MatrixXd precision_;
  double log_det_ = 0.0;
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<GaussianDensity> components;

  // Log of weight_k * N_k(theta) per component.
  std::vector<double> component_log_terms(const ParamVector& theta) const {
    std::vector<double> l(components.size());
    for (std::size_t k = 0; k < components.size(); ++k) {
      l[k] = std::log(weights[k]) + components[k].log_density(theta);
    }
    return l;
  }
};

struct LogisticPosterior {
  LinearSoftmaxSpec model;
  LabeledDataset train;
  LabeledDataset holdout;
  double prior_precision = 1e-2;
};

struct MLPPosterior {
  MLPSpec model;
  LabeledDataset train;
  LabeledDataset holdout;
  double prior_precision = 1e-2;
};

enum class Split { Train, Holdout };

// Log-posterior oracle. Analytic variants (Gaussian, mixture) expose an exact
// score; data variants expose grad log p(theta|S) = -lambda theta - grad L_batch(theta)
// with L_batch the mean cross-entropy over the batch.
class Target {
 public:
  using Variant = std::variant<GaussianDensity, GaussianMixture, LogisticPosterior, MLPPosterior>;

  static Target gaussian(ParamVector mean, const Eigen::MatrixXd& covariance) {
    return Target(GaussianDensity(std::move(mean), covariance));
  }

  static Target mixture(std::vector<double> weights, std::vector<GaussianDensity> components) {
    if (weights.empty() || weights.size() != components.size()) {
      throw ArgumentError("mixture: weights and components must be nonempty and aligned");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw ArgumentError("mixture: weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture: weights must sum to 1");
    for (const auto& c : components) {
      if (c.dim() != components.front().dim()) throw ArgumentError("mixture: components differ in dimension");
    }
    return Target(GaussianMixture{std::move(weights), std::move(components)});
  }

  static Target logistic(LabeledDataset train, LabeledDataset holdout, double prior_precision) {
    check_data(train, holdout, prior_precision);
    LinearSoftmaxSpec spec{train.feature_dim(), train.class_count};
    return Target(LogisticPosterior{spec, std::move(train), std::move(holdout), prior_precision});
  }

  static Target mlp(std::size_t hidden_dim, LabeledDataset train, LabeledDataset holdout, double prior_precision) {
    check_data(train, holdout, prior_precision);
    if (hidden_dim < 1) throw ArgumentError("mlp: hidden_dim must be >= 1");
    MLPSpec spec{train.feature_dim(), hidden_dim, train.class_count};
    return Target(MLPPosterior{spec, std::move(train), std::move(holdout), prior_precision});
  }

  const Variant& variant() const noexcept { return variant_; }

  bool is_analytic() const noexcept {
    return std::holds_alternative<GaussianDensity>(variant_) || std::holds_alternative<GaussianMixture>(variant_);
  }

  std::size_t dim() const {
    return std::visit(
        [](const auto& t) -> std::size_t {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, GaussianDensity>) return t.dim();
          else if constexpr (std::is_same_v<T, GaussianMixture>) return t.components.front().dim();
          else return t.model.parameter_count();
        },
        variant_);
  }

  const LabeledDataset& split(Split which) const {
    return std::visit(
        [which](const auto& t) -> const LabeledDataset& {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, LogisticPosterior> || std::is_same_v<T, MLPPosterior>) {
            return which == Split::Train ? t.train : t.holdout;
          } else {
            throw UnsupportedOperation("analytic target has no data split");
          }
        },
        variant_);
  }

  const LabeledDataset& train() const { return split(Split::Train); }

  double prior_precision() const {
    if (const auto* t = std::get_if<LogisticPosterior>(&variant_)) return t->prior_precision;
    if (const auto* t = std::get_if<MLPPosterior>(&variant_)) return t->prior_precision;
    throw UnsupportedOperation("analytic target has no prior precision");
  }

  // Mean loss and its gradient over a batch (data targets only).
  LossAndGrad data_loss_and_grad(const ParamVector& theta, const LabeledDataset& batch) const {
    return std::visit(
        [&](const auto& t) -> LossAndGrad {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, LogisticPosterior> || std::is_same_v<T, MLPPosterior>) {
            return t.model.loss_and_grad(theta, batch);
          } else {
            throw UnsupportedOperation("empirical loss is undefined for analytic targets");
          }
        },
        variant_);
  }

  // Class probabilities of the model at theta (data targets only).
  std::vector<double> predict_proba(const ParamVector& theta, const std::vector<double>& x) const {
    return std::visit(
        [&](const auto& t) -> std::vector<double> {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, LogisticPosterior> || std::is_same_v<T, MLPPosterior>) {
            detail::check_params(theta, t.model.parameter_count());
            if (x.size() != t.model.input_dim) throw ArgumentError("predict: input dimension mismatch");
            return softmax(t.model.logits(theta, x));
          } else {
            throw UnsupportedOperation("prediction is undefined for analytic targets");
          }
        },
        variant_);
  }

  // Exact log density (analytic targets only).
  double log_density(const ParamVector& theta) const {
    if (const auto* g = std::get_if<GaussianDensity>(&variant_)) return g->log_density(theta);
    if (const auto* mix = std::get_if<GaussianMixture>(&variant_)) {
      const auto l = mix->component_log_terms(theta);
      const double top = *std::max_element(l.begin(), l.end());
      double s = 0.0;
      for (double v : l) s += std::exp(v - top);
      return top + std::log(s);
    }
    throw UnsupportedOperation("log density is only available for analytic targets");
  }

  ParamVector analytic_mean() const {
    if (const auto* g = std::get_if<GaussianDensity>(&variant_)) return g->mean();
    if (const auto* mix = std::get_if<GaussianMixture>(&variant_)) {
      ParamVector mu(dim(), 0.0);
      for (std::size_t k = 0; k < mix->components.size(); ++k) axpy(mix->weights[k], mix->components[k].mean(), mu);
      return mu;
    }
    throw UnsupportedOperation("moments are only available for analytic targets");
  }

  Eigen::MatrixXd analytic_covariance() const {
    if (const auto* g = std::get_if<GaussianDensity>(&variant_)) return g->covariance();
    if (const auto* mix = std::get_if<GaussianMixture>(&variant_)) {
      const auto d = static_cast<Eigen::Index>(dim());
      const ParamVector mu = analytic_mean();
      const Eigen::Map<const Eigen::VectorXd> mu_v(mu.data(), d);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t k = 0; k < mix->components.size(); ++k) {
        const auto& c = mix->components[k];
        const Eigen::Map<const Eigen::VectorXd> mk(c.mean().data(), d);
        cov += mix->weights[k] * (c.covariance() + mk * mk.transpose());
      }
      cov -= mu_v * mu_v.transpose();
      return cov;
    }
    throw UnsupportedOperation("moments are only available for analytic targets");
  }

 private:
  explicit Target(Variant v) : variant_(std::move(v)) {}

  static void check_data(const LabeledDataset& train, const LabeledDataset& holdout, double prior_precision) {
    train.validate();
    holdout.validate();
    if (train.feature_dim() != holdout.feature_dim()) throw ArgumentError("train/holdout feature mismatch");
    if (holdout.class_count > train.class_count) throw ArgumentError("holdout has more classes than train");
    if (!(prior_precision >= 0.0)) throw ArgumentError("prior_precision must be nonnegative");
  }

  Variant variant_;
};

inline void require_dim(const Target& target, const ParamVector& theta) {
  if (theta.size() != target.dim()) {
    throw ArgumentError("parameter dimension " + std::to_string(theta.size()) + " does not match target dimension " +
                        std::to_string(target.dim()));
  }
}

// grad log p(theta | S). The batch is ignored for analytic targets.
inline ParamVector log_posterior_grad(const Target& target, const ParamVector& theta, const LabeledDataset& batch) {
  require_dim(target, theta);
  if (const auto* g = std::get_if<GaussianDensity>(&target.variant())) return g->score(theta);
  if (const auto* mix = std::get_if<GaussianMixture>(&target.variant())) {
    const auto r = softmax(mix->component_log_terms(theta));
    ParamVector s(theta.size(), 0.0);
    for (std::size_t k = 0; k < r.size(); ++k) axpy(r[k], mix->components[k].score(theta), s);
    return s;
  }
  const double lambda = target.prior_precision();
  const auto lg = target.data_loss_and_grad(theta, batch);
  ParamVector out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = -lambda * theta[i] - lg.grad[i];
  return out;
}

// Full-batch variant (whole training split for data targets).
inline ParamVector log_posterior_grad(const Target& target, const ParamVector& theta) {
  if (target.is_analytic()) return log_posterior_grad(target, theta, LabeledDataset{});
  return log_posterior_grad(target, theta, target.train());
}

// Gradient of the quantity SAM and plain descent minimize: the batch loss for
// data targets (no prior), the negative log density for analytic targets.
inline ParamVector loss_grad(const Target& target, const ParamVector& theta, const LabeledDataset& batch) {
  require_dim(target, theta);
  if (target.is_analytic()) return scaled(log_posterior_grad(target, theta, batch), -1.0);
  return target.data_loss_and_grad(theta, batch).grad;
}

inline double empirical_loss(const Target& target, const ParamVector& theta, Split which) {
  if (target.is_analytic()) throw UnsupportedOperation("empirical loss is undefined for analytic targets");
  require_dim(target, theta);
  return target.data_loss_and_grad(theta, target.split(which)).loss;
}

inline std::vector<ParamVector> reference_sample(const Target& target, std::size_t count, RngStream& rng,
                                                 std::vector<std::size_t>* components = nullptr) {
  if (!target.is_analytic()) throw UnsupportedOperation("reference samples exist only for analytic targets");
  std::vector<ParamVector> out;
  out.reserve(count);
  if (components) components->clear();
  if (const auto* g = std::get_if<GaussianDensity>(&target.variant())) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(g->sample(rng));
    return out;
  }
  const auto& mix = std::get<GaussianMixture>(target.variant());
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double cumulative = mix.weights[0];
    while (u >= cumulative && k + 1 < mix.weights.size()) cumulative += mix.weights[++k];
    if (components) components->push_back(k);
    out.push_back(mix.components[k].sample(rng));
  }
  return out;
}

}  // namespace hflow
