#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hilbert_flow/ensemble.hpp"
#include "hilbert_flow/metrics.hpp"
#include "hilbert_flow/parallel.hpp"
#include "hilbert_flow/rng.hpp"
#include "hilbert_flow/samplers.hpp"
#include "hilbert_flow/targets.hpp"

namespace hflow {

struct MetricsOptions {
  std::size_t cadence = 1;
  std::size_t bins = 15;
  bool report_mce = false;
  // Radius of the sharpness probe, shared by every run so that runs differing
  // only in rho remain comparable.
  double sharpness_rho = 0.05;
};

struct Snapshot {
  Ensemble ensemble;
  MetricsRecord metrics;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  bool diverged = false;
  std::string error;
  std::optional<double> final_mce;
};

// Stream ids below the particle count belong to particles; the batch shuffler
// uses a reserved id well above any realistic m.
inline constexpr std::uint64_t kBatchStream = std::uint64_t{1} << 62;

inline double scheduled_lr(const SamplerConfig& config, std::size_t step, std::size_t steps_per_epoch,
                           std::size_t total_steps) {
  double lr = config.lr;
  const std::size_t warmup = config.warmup_epochs * steps_per_epoch;
  if (step < warmup) {
    return lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  if (config.lr_schedule == LrSchedule::CosineAnnealing && total_steps > warmup) {
    const double t = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
    lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  return lr;
}

inline Ensemble initial_ensemble(const SamplerConfig& config, const Target& target) {
  Ensemble e;
  e.particles.resize(config.m);
  for (std::size_t i = 0; i < config.m; ++i) {
    RngStream rng(config.seed, i);
    ParamVector p(target.dim());
    for (double& v : p) v = config.init_std * rng.normal();
    e.particles[i] = std::move(p);
  }
  return e;
}

inline MetricsRecord compute_metrics(const Ensemble& ensemble, const Target& target, const MetricsOptions& options,
                                     std::optional<double>* mce = nullptr) {
  MetricsRecord rec;
  rec.step = ensemble.step;
  const std::size_t m = ensemble.size();
  std::vector<ParamVector> grads(m);

  if (target.is_analytic()) {
    for (std::size_t i = 0; i < m; ++i) grads[i] = loss_grad(target, ensemble.particles[i], LabeledDataset{});
    rec.moment_error = moment_error(ensemble, target);
  } else {
    std::vector<double> train(m), holdout(m), sharp(m);
    const auto& train_set = target.split(Split::Train);
    parallel_for(m, [&](std::size_t i) {
      const auto& theta = ensemble.particles[i];
      const auto lg = target.data_loss_and_grad(theta, train_set);
      train[i] = lg.loss;
      grads[i] = lg.grad;
      holdout[i] = empirical_loss(target, theta, Split::Holdout);
      sharp[i] = sam_sharpness(target, theta, options.sharpness_rho, Split::Train);
    });
    double tl = 0.0, hl = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      tl += train[i];
      hl += holdout[i];
    }
    rec.train_loss = tl / static_cast<double>(m);
    rec.holdout_loss = hl / static_cast<double>(m);
    rec.sharpness_per_particle = std::move(sharp);

    const auto& hold = target.split(Split::Holdout);
    const auto probs = ensemble_predict(ensemble, target, hold.inputs);
    rec.accuracy = accuracy(probs, hold.labels);
    rec.ece = ece(probs, hold.labels, options.bins);
    if (mce && options.report_mce) *mce = ece(probs, hold.labels, options.bins, CalibrationReduction::Maximum);
  }

  if (m >= 2) {
    try {
      rec.mean_angular_similarity = angular_similarity(grads);
    } catch (const ArgumentError&) {
    }
    rec.grad_cov_frobenius = grad_cov_frobenius(grads);
  }
  return rec;
}

// Runs the configured algorithm for epochs x batches steps, recording the
// initial state, every `cadence` steps, and the final state. Divergence stops
// the run and flags the (partial) trajectory.
inline Trajectory run_sampler(const SamplerConfig& config, const Target& target, const MetricsOptions& options = {}) {
  config.validate();
  if (options.cadence < 1) throw ArgumentError("metrics cadence must be >= 1");

  Trajectory traj;
  Ensemble ensemble = initial_ensemble(config, target);
  std::optional<double> mce;
  auto record = [&] { traj.snapshots.push_back({ensemble, compute_metrics(ensemble, target, options, &mce)}); };
  record();

  const bool analytic = target.is_analytic();
  const std::size_t n = analytic ? 1 : target.train().size();
  const std::size_t batch_size = analytic ? 1 : std::min(config.batch_size, n);
  const std::size_t steps_per_epoch = analytic ? 1 : (n + batch_size - 1) / batch_size;
  const std::size_t total = config.epochs * steps_per_epoch;

  // Particle streams continue past the draws used for initialization.
  std::vector<RngStream> particle_rngs;
  particle_rngs.reserve(config.m);
  for (std::size_t i = 0; i < config.m; ++i) {
    RngStream rng(config.seed, i);
    for (std::size_t k = 0; k < target.dim(); ++k) rng.normal();
    particle_rngs.push_back(rng);
  }
  RngStream batch_rng(config.seed, kBatchStream);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  // Applies a single-particle update to every particle, tagging divergence with the index.
  auto per_particle = [&](const std::function<ParamVector(std::size_t)>& update) {
    Ensemble next;
    next.step = ensemble.step + 1;
    next.particles.resize(ensemble.size());
    parallel_for(ensemble.size(), [&](std::size_t i) {
      try {
        next.particles[i] = update(i);
      } catch (const DivergenceError&) {
        throw DivergenceError(i, ensemble.step);
      }
    });
    return next;
  };

  try {
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      if (!analytic) batch_rng.shuffle(order);
      for (std::size_t b = 0; b < steps_per_epoch; ++b) {
        LabeledDataset batch;
        if (!analytic) {
          const std::size_t begin = b * batch_size;
          const std::size_t end = std::min(n, begin + batch_size);
          batch = target.train().subset(std::vector<std::size_t>(order.begin() + begin, order.begin() + end));
        }
        const double lr = scheduled_lr(config, ensemble.step, steps_per_epoch, total);
        switch (config.algo) {
          case Algorithm::FHBI: {
            SamplerConfig step_cfg = config;
            step_cfg.lr = lr;
            ensemble = fhbi_step(ensemble, target, step_cfg, batch);
            break;
          }
          case Algorithm::SVGD:
            ensemble = svgd_step(ensemble, target, config.kernel, lr, batch);
            break;
          case Algorithm::SGLD:
            ensemble = per_particle([&](std::size_t i) {
              return sgld_step(ensemble.particles[i], target, lr, batch, particle_rngs[i]);
            });
            break;
          case Algorithm::SAM:
            ensemble = per_particle(
                [&](std::size_t i) { return sam_step(ensemble.particles[i], target, config.rho, lr, batch); });
            break;
          case Algorithm::Ensemble:
            ensemble = per_particle(
                [&](std::size_t i) { return sam_step(ensemble.particles[i], target, 0.0, lr, batch); });
            break;
        }
        if (ensemble.step % options.cadence == 0 || ensemble.step == total) record();
      }
    }
  } catch (const DivergenceError& e) {
    traj.diverged = true;
    traj.error = e.what();
  }
  traj.final_mce = mce;
  return traj;
}

}  // namespace hflow
