#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hilbert_flow/harness/config.hpp"
#include "hilbert_flow/harness/experiment.hpp"

namespace hflow::harness {

// Scalars distilled from one trajectory for cross-run comparison.
struct RunDigest {
  MetricsRecord final_record;
  std::optional<double> angular_similarity_time_avg;
  // Std of the per-record mean sharpness over the last half of the steps.
  std::optional<double> sharpness_late_std;
};

inline RunDigest digest(const Trajectory& traj) {
  RunDigest d;
  d.final_record = traj.snapshots.back().metrics;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : traj.snapshots) {
    if (s.metrics.mean_angular_similarity) {
      sum += *s.metrics.mean_angular_similarity;
      ++count;
    }
  }
  if (count > 0) d.angular_similarity_time_avg = sum / static_cast<double>(count);

  const std::size_t last_step = d.final_record.step;
  std::vector<double> late;
  for (const auto& s : traj.snapshots) {
    if (2 * s.metrics.step >= last_step) {
      if (auto v = s.metrics.sharpness_mean()) late.push_back(*v);
    }
  }
  if (late.size() >= 2) {
    double mean = 0.0;
    for (double v : late) mean += v;
    mean /= static_cast<double>(late.size());
    double ss = 0.0;
    for (double v : late) ss += (v - mean) * (v - mean);
    d.sharpness_late_std = std::sqrt(ss / static_cast<double>(late.size() - 1));
  }
  return d;
}

inline const std::vector<std::string>& compared_metrics() {
  static const std::vector<std::string> names = {
      "train_loss", "holdout_loss", "sharpness_mean", "sharpness_max", "angular_similarity",
      "grad_cov_frobenius", "ece", "accuracy", "moment_error", "angular_similarity_time_avg",
      "sharpness_late_std"};
  return names;
}

inline std::optional<double> digest_metric(const RunDigest& d, const std::string& name) {
  const auto& r = d.final_record;
  if (name == "train_loss") return r.train_loss;
  if (name == "holdout_loss") return r.holdout_loss;
  if (name == "sharpness_mean") return r.sharpness_mean();
  if (name == "sharpness_max") return r.sharpness_max();
  if (name == "angular_similarity") return r.mean_angular_similarity;
  if (name == "grad_cov_frobenius") return r.grad_cov_frobenius;
  if (name == "ece") return r.ece;
  if (name == "accuracy") return r.accuracy;
  if (name == "moment_error") return r.moment_error;
  if (name == "angular_similarity_time_avg") return d.angular_similarity_time_avg;
  if (name == "sharpness_late_std") return d.sharpness_late_std;
  return std::nullopt;
}

struct Comparison {
  std::vector<std::string> labels;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<RunDigest>> runs;  // [config][seed]
  std::vector<int> exit_codes;               // worst exit code per config
  std::string table_csv;                     // config,metric,mean,std,n
  std::string paired_csv;                    // config,seed,metric,difference (vs config 0)
};

// Runs each config over the shared seed list first_seed, first_seed+1, ...
// When run_root is set, every run's metrics.csv/summary.json lands in
// run_root/cfg<i>_seed<s>/.
inline Comparison compare(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                          std::size_t paired_seeds, std::optional<std::filesystem::path> run_root = std::nullopt) {
  if (configs.empty()) throw ValidationError("compare", "needs at least one config");
  if (paired_seeds < 1) throw ValidationError("--seeds", "must be >= 1");
  Comparison out;
  const std::uint64_t first_seed = configs.front().second.sampler.seed;
  for (std::size_t k = 0; k < paired_seeds; ++k) out.seeds.push_back(first_seed + k);

  for (std::size_t c = 0; c < configs.size(); ++c) {
    out.labels.push_back(configs[c].first);
    out.runs.emplace_back();
    int worst = kExitOk;
    for (auto seed : out.seeds) {
      auto cfg = with_value(configs[c].second, "sampler.seed", std::to_string(seed));
      ExperimentResult res;
      if (run_root) {
        cfg = with_value(cfg, "output_dir",
                         (*run_root / ("cfg" + std::to_string(c) + "_seed" + std::to_string(seed))).string());
        res = run_experiment(cfg);
      } else {
        res = execute_experiment(cfg);
      }
      worst = std::max(worst, res.exit_code);
      out.runs.back().push_back(digest(res.trajectory));
    }
    out.exit_codes.push_back(worst);
  }

  std::ostringstream table;
  table << "config,metric,mean,std,n\n";
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (const auto& name : compared_metrics()) {
      std::vector<double> xs;
      for (const auto& d : out.runs[c]) {
        if (auto v = digest_metric(d, name)) xs.push_back(*v);
      }
      if (xs.empty()) continue;
      double mean = 0.0;
      for (double v : xs) mean += v;
      mean /= static_cast<double>(xs.size());
      double ss = 0.0;
      for (double v : xs) ss += (v - mean) * (v - mean);
      const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      table << c << ',' << name << ',' << format_double(mean) << ',' << format_double(sd) << ',' << xs.size() << '\n';
    }
  }
  out.table_csv = table.str();

  std::ostringstream paired;
  paired << "config,seed,metric,difference\n";
  for (std::size_t c = 1; c < configs.size(); ++c) {
    for (std::size_t k = 0; k < out.seeds.size(); ++k) {
      for (const char* name : {"sharpness_mean", "angular_similarity_time_avg"}) {
        const auto a = digest_metric(out.runs[c][k], name);
        const auto b = digest_metric(out.runs[0][k], name);
        if (a && b) paired << c << ',' << out.seeds[k] << ',' << name << ',' << format_double(*a - *b) << '\n';
      }
    }
  }
  out.paired_csv = paired.str();
  return out;
}

}  // namespace hflow::harness
