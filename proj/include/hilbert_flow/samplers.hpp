#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hilbert_flow/ensemble.hpp"
#include "hilbert_flow/errors.hpp"
#include "hilbert_flow/kernels.hpp"
#include "hilbert_flow/parallel.hpp"
#include "hilbert_flow/rng.hpp"
#include "hilbert_flow/targets.hpp"
#include "hilbert_flow/vector_ops.hpp"

namespace hflow {

enum class Algorithm { FHBI, SVGD, SGLD, SAM, Ensemble };
enum class LrSchedule { Constant, CosineAnnealing };

struct SamplerConfig {
  Algorithm algo = Algorithm::FHBI;
  std::size_t m = 4;
  double rho = 0.03;
  double lr = 0.1;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  KernelSpec kernel{};
  std::uint64_t seed = 0;
  LrSchedule lr_schedule = LrSchedule::Constant;
  std::size_t warmup_epochs = 0;
  // Std of the isotropic Gaussian the particles start from.
  double init_std = 2.0;

  void validate() const {
    if (m < 1) throw ArgumentError("sampler: m must be >= 1");
    if (!(rho >= 0.0)) throw ArgumentError("sampler: rho must be nonnegative");
    if (!(lr > 0.0)) throw ArgumentError("sampler: lr must be positive");
    if (batch_size < 1) throw ArgumentError("sampler: batch_size must be >= 1");
    if (!(init_std > 0.0)) throw ArgumentError("sampler: init_std must be positive");
    kernel.validate();
  }
};

// Threshold below which a direction is treated as zero (no ascent, no SAM perturbation).
inline constexpr double kStationaryNorm = 1e-12;

namespace detail {

// Log-posterior gradients at theta_j + perturbation for every particle j. A null
// perturbation evaluates at the particles themselves.
inline std::vector<ParamVector> particle_scores(const Ensemble& ensemble, const Target& target,
                                                const LabeledDataset& batch, const ParamVector* perturbation,
                                                std::size_t workers) {
  std::vector<ParamVector> scores(ensemble.size());
  parallel_for(
      ensemble.size(),
      [&](std::size_t j) {
        if (perturbation == nullptr) {
          scores[j] = log_posterior_grad(target, ensemble.particles[j], batch);
        } else {
          scores[j] = log_posterior_grad(target, add(ensemble.particles[j], *perturbation), batch);
        }
      },
      workers);
  return scores;
}

// -(1/m) sum_j [k(theta, theta_j) s_j + grad_{theta_j} k(theta, theta_j)], with
// kernel terms always taken at the unperturbed particles.
inline ParamVector stein_direction(const ParamVector& theta, const Ensemble& ensemble, const KernelSpec& kernel,
                                   const std::vector<ParamVector>& scores) {
  ParamVector acc(theta.size(), 0.0);
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const ParamVector& tj = ensemble.particles[j];
    axpy(kernel_eval(kernel, theta, tj), scores[j], acc);
    axpy(1.0, kernel_grad_second(kernel, theta, tj), acc);
  }
  const double c = -1.0 / static_cast<double>(ensemble.size());
  for (double& v : acc) v *= c;
  return acc;
}

inline void check_ensemble(const Ensemble& ensemble, const Target& target) {
  ensemble.validate();
  if (ensemble.dim() != target.dim()) throw ArgumentError("ensemble dimension does not match target");
}

}  // namespace detail

// phi(theta_i) for every particle; the perturbation (if nonzero) is added
// inside every log-posterior gradient.
inline std::vector<ParamVector> phi_direction(const Ensemble& ensemble, const Target& target,
                                              const KernelSpec& kernel, const LabeledDataset& batch,
                                              const ParamVector& perturbation) {
  detail::check_ensemble(ensemble, target);
  if (perturbation.size() != ensemble.dim()) throw ArgumentError("phi_direction: perturbation dimension mismatch");
  const auto scores = detail::particle_scores(ensemble, target, batch, is_zero(perturbation) ? nullptr : &perturbation,
                                              worker_count());
  std::vector<ParamVector> out(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    out[i] = detail::stein_direction(ensemble.particles[i], ensemble, kernel, scores);
  }
  return out;
}

inline std::vector<ParamVector> phi_direction(const Ensemble& ensemble, const Target& target,
                                              const KernelSpec& kernel, const LabeledDataset& batch) {
  return phi_direction(ensemble, target, kernel, batch, ParamVector(ensemble.dim(), 0.0));
}

// eps_i = rho * phi(theta_i) / |phi(theta_i)|, zero for stationary particles.
inline std::vector<ParamVector> fhbi_ascent(const Ensemble& ensemble, const Target& target, const KernelSpec& kernel,
                                            double rho, const LabeledDataset& batch) {
  if (!(rho >= 0.0)) throw ArgumentError("fhbi_ascent: rho must be nonnegative");
  std::vector<ParamVector> eps;
  eps.reserve(ensemble.size());
  if (rho == 0.0) {
    detail::check_ensemble(ensemble, target);
    eps.assign(ensemble.size(), ParamVector(ensemble.dim(), 0.0));
    return eps;
  }
  for (auto& phi : phi_direction(ensemble, target, kernel, batch)) {
    const double n = norm(phi);
    eps.push_back(n < kStationaryNorm ? ParamVector(phi.size(), 0.0) : scaled(phi, rho / n));
  }
  return eps;
}

// theta_i <- theta_i - lr * psi(theta_i, eps_i), all read from the pre-step snapshot.
inline Ensemble fhbi_descent(const Ensemble& ensemble, const std::vector<ParamVector>& perturbations,
                             const Target& target, const KernelSpec& kernel, double lr, const LabeledDataset& batch) {
  detail::check_ensemble(ensemble, target);
  const std::size_t m = ensemble.size();
  if (perturbations.size() != m) throw ArgumentError("fhbi_descent: one perturbation per particle required");
  for (const auto& e : perturbations) {
    if (e.size() != ensemble.dim()) throw ArgumentError("fhbi_descent: perturbation dimension mismatch");
  }

  bool any_zero = false;
  for (const auto& e : perturbations) any_zero = any_zero || is_zero(e);
  std::vector<ParamVector> base_scores;
  if (any_zero) base_scores = detail::particle_scores(ensemble, target, batch, nullptr, worker_count());

  std::vector<ParamVector> psi(m);
  parallel_for(m, [&](std::size_t i) {
    if (is_zero(perturbations[i])) {
      psi[i] = detail::stein_direction(ensemble.particles[i], ensemble, kernel, base_scores);
    } else {
      const auto scores = detail::particle_scores(ensemble, target, batch, &perturbations[i], 1);
      psi[i] = detail::stein_direction(ensemble.particles[i], ensemble, kernel, scores);
    }
  });

  Ensemble next;
  next.step = ensemble.step;
  next.particles.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    next.particles[i] = ensemble.particles[i];
    axpy(-lr, psi[i], next.particles[i]);
    if (!all_finite(next.particles[i])) throw DivergenceError(i, ensemble.step);
  }
  return next;
}

inline Ensemble svgd_step(const Ensemble& ensemble, const Target& target, const KernelSpec& kernel, double lr,
                          const LabeledDataset& batch) {
  const KernelSpec k = resolve_kernel(kernel, ensemble);
  const std::vector<ParamVector> zero(ensemble.size(), ParamVector(ensemble.dim(), 0.0));
  Ensemble next = fhbi_descent(ensemble, zero, target, k, lr, batch);
  next.step = ensemble.step + 1;
  return next;
}

// One ascent + descent on a shared batch, using the config's rho and lr.
inline Ensemble fhbi_step(const Ensemble& ensemble, const Target& target, const SamplerConfig& config,
                          const LabeledDataset& batch) {
  const KernelSpec k = resolve_kernel(config.kernel, ensemble);
  const auto eps = fhbi_ascent(ensemble, target, k, config.rho, batch);
  Ensemble next = fhbi_descent(ensemble, eps, target, k, config.lr, batch);
  next.step = ensemble.step + 1;
  return next;
}

// theta + (lr/2) grad log p(theta|batch) + sqrt(lr) xi. With inject_noise = false
// the step is deterministic half-step gradient ascent.
inline ParamVector sgld_step(const ParamVector& particle, const Target& target, double lr,
                             const LabeledDataset& batch, RngStream& rng, bool inject_noise = true) {
  if (!(lr > 0.0)) throw ArgumentError("sgld_step: lr must be positive");
  const ParamVector g = log_posterior_grad(target, particle, batch);
  ParamVector next = particle;
  const double noise_scale = std::sqrt(lr);
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] += 0.5 * lr * g[i];
    if (inject_noise) next[i] += noise_scale * rng.normal();
  }
  if (!all_finite(next)) throw DivergenceError(0, 0);
  return next;
}

// Sharpness-aware step on the loss alone (no prior term).
inline ParamVector sam_step(const ParamVector& particle, const Target& target, double rho, double lr,
                            const LabeledDataset& batch) {
  if (!(rho >= 0.0)) throw ArgumentError("sam_step: rho must be nonnegative");
  ParamVector probe = particle;
  if (rho > 0.0) {
    const ParamVector g = loss_grad(target, particle, batch);
    const double n = norm(g);
    if (n >= kStationaryNorm) axpy(rho / n, g, probe);
  }
  const ParamVector g_adv = loss_grad(target, probe, batch);
  ParamVector next = particle;
  axpy(-lr, g_adv, next);
  if (!all_finite(next)) throw DivergenceError(0, 0);
  return next;
}

}  // namespace hflow
