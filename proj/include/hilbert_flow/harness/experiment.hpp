#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilbert_flow/dataset.hpp"
#include "hilbert_flow/harness/config.hpp"
#include "hilbert_flow/runner.hpp"

#ifndef HILBERT_FLOW_VERSION
#define HILBERT_FLOW_VERSION "0.1.0"
#endif

namespace hflow::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitDivergence = 2;

inline const char* version_string() { return HILBERT_FLOW_VERSION; }

inline constexpr const char* kMetricsHeader =
    "step,train_loss,holdout_loss,sharpness_mean,sharpness_max,angular_similarity,grad_cov_frobenius,ece,accuracy,"
    "moment_error";

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline nlohmann::json json_or_null(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline std::string metrics_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const auto& snap : traj.snapshots) {
    const auto& r = snap.metrics;
    os << r.step << ',' << detail::cell(r.train_loss) << ',' << detail::cell(r.holdout_loss) << ','
       << detail::cell(r.sharpness_mean()) << ',' << detail::cell(r.sharpness_max()) << ','
       << detail::cell(r.mean_angular_similarity) << ',' << detail::cell(r.grad_cov_frobenius) << ','
       << detail::cell(r.ece) << ',' << detail::cell(r.accuracy) << ',' << detail::cell(r.moment_error) << '\n';
  }
  return os.str();
}

inline nlohmann::json record_json(const MetricsRecord& r) {
  return {
      {"step", r.step},
      {"train_loss", detail::json_or_null(r.train_loss)},
      {"holdout_loss", detail::json_or_null(r.holdout_loss)},
      {"sharpness_mean", detail::json_or_null(r.sharpness_mean())},
      {"sharpness_max", detail::json_or_null(r.sharpness_max())},
      {"angular_similarity", detail::json_or_null(r.mean_angular_similarity)},
      {"grad_cov_frobenius", detail::json_or_null(r.grad_cov_frobenius)},
      {"ece", detail::json_or_null(r.ece)},
      {"accuracy", detail::json_or_null(r.accuracy)},
      {"moment_error", detail::json_or_null(r.moment_error)},
  };
}

struct ExperimentResult {
  int exit_code = kExitOk;
  Trajectory trajectory;
  nlohmann::json summary;
  std::string csv;
};

// Runs one experiment in memory; nothing touches the filesystem.
inline ExperimentResult execute_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Target target = build_target(config.target);
  ExperimentResult res;
  res.trajectory = run_sampler(config.sampler, target, config.metrics);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.csv = metrics_csv(res.trajectory);
  res.exit_code = res.trajectory.diverged ? kExitDivergence : kExitOk;

  const auto& snaps = res.trajectory.snapshots;
  const MetricsRecord& last = snaps.back().metrics;
  std::optional<double> best_holdout;
  for (const auto& s : snaps) {
    if (s.metrics.holdout_loss && (!best_holdout || *s.metrics.holdout_loss < *best_holdout)) {
      best_holdout = s.metrics.holdout_loss;
    }
  }
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [k, v] : config.values) echo[k] = v;

  res.summary = {
      {"status", res.trajectory.diverged ? "diverged" : "ok"},
      {"error", res.trajectory.error},
      {"version", version_string()},
      {"steps", last.step},
      {"records", snaps.size()},
      {"final", record_json(last)},
      {"holdout_accuracy", detail::json_or_null(last.accuracy)},
      {"best_holdout_loss", detail::json_or_null(best_holdout)},
      {"mce", detail::json_or_null(res.trajectory.final_mce)},
      {"wall_time_seconds", wall},
      {"config", echo},
  };
  return res;
}

// Writes <output_dir>/metrics.csv and <output_dir>/summary.json. The CSV is
// written even for diverged runs; the summary flags them.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult res = execute_experiment(config);
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("output_dir", "cannot create '" + dir.string() + "': " + ec.message());
  std::ofstream csv(dir / "metrics.csv", std::ios::binary);
  std::ofstream json(dir / "summary.json", std::ios::binary);
  if (!csv || !json) throw ValidationError("output_dir", "'" + dir.string() + "' is not writable");
  csv << res.csv;
  json << res.summary.dump(2) << '\n';
  return res;
}

}  // namespace hflow::harness
