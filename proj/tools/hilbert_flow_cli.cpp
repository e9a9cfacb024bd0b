#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hilbert_flow/harness/compare.hpp"
#include "hilbert_flow/harness/config.hpp"
#include "hilbert_flow/harness/experiment.hpp"
#include "hilbert_flow/harness/export.hpp"

namespace fs = std::filesystem;
using namespace hflow::harness;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path, const std::string& output_dir, const std::string& seed) {
  auto cfg = parse_config(read_file(path));
  if (!output_dir.empty()) cfg = with_value(cfg, "output_dir", output_dir);
  if (!seed.empty()) cfg = with_value(cfg, "sampler.seed", seed);
  return cfg;
}

void report(const std::string& dir, const ExperimentResult& res) {
  const auto& fin = res.summary["final"];
  std::cout << dir << ": " << res.summary["status"].get<std::string>() << ", step " << fin["step"];
  if (!fin["accuracy"].is_null()) std::cout << ", holdout accuracy " << fin["accuracy"];
  if (!fin["moment_error"].is_null()) std::cout << ", moment error " << fin["moment_error"];
  std::cout << '\n';
  if (res.exit_code == kExitDivergence) std::cerr << "diverged: " << res.summary["error"].get<std::string>() << '\n';
}

int cmd_run(const std::string& path, const std::string& output_dir, const std::string& seed) {
  const auto cfg = load_config(path, output_dir, seed);
  if (!cfg.sweep.empty()) throw ValidationError("sweep", "config declares a sweep; use the sweep command");
  const auto res = run_experiment(cfg);
  report(cfg.output_dir, res);
  return res.exit_code;
}

int cmd_sweep(const std::string& path, const std::string& output_dir, const std::string& seed) {
  const auto base = load_config(path, output_dir, seed);
  const auto points = expand_sweep(base);
  fs::create_directories(base.output_dir);
  std::ofstream index(fs::path(base.output_dir) / "sweep_index.csv", std::ios::binary);
  index << "run";
  for (const auto& [key, _] : base.sweep) index << ',' << key;
  index << ",status,accuracy,holdout_loss,moment_error\n";
  int code = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", i);
    const auto cfg = with_value(points[i], "output_dir", (fs::path(base.output_dir) / name).string());
    const auto res = run_experiment(cfg);
    report(cfg.output_dir, res);
    code = std::max(code, res.exit_code);
    index << name;
    for (const auto& [key, _] : base.sweep) index << ',' << cfg.values.at(key);
    const auto& fin = res.trajectory.snapshots.back().metrics;
    index << ',' << res.summary["status"].get<std::string>() << ',' << hflow::harness::detail::cell(fin.accuracy)
          << ',' << hflow::harness::detail::cell(fin.holdout_loss) << ','
          << hflow::harness::detail::cell(fin.moment_error) << '\n';
  }
  return code;
}

int cmd_compare(const std::vector<std::string>& paths, std::size_t seeds, const std::string& output_dir,
                const std::string& seed) {
  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  for (const auto& p : paths) configs.emplace_back(p, load_config(p, "", seed));
  const fs::path root = output_dir.empty() ? fs::path(configs.front().second.output_dir) : fs::path(output_dir);
  fs::create_directories(root);
  const auto cmp = compare(configs, seeds, root);
  std::ofstream(root / "comparison.csv", std::ios::binary) << cmp.table_csv;
  std::ofstream(root / "paired_differences.csv", std::ios::binary) << cmp.paired_csv;
  for (std::size_t c = 0; c < cmp.labels.size(); ++c) std::cout << "config " << c << ": " << cmp.labels[c] << '\n';
  std::cout << cmp.table_csv;
  int code = kExitOk;
  for (int e : cmp.exit_codes) code = std::max(code, e);
  return code;
}

int cmd_export(const std::vector<std::string>& paths, const std::string& metric, const std::string& output) {
  std::vector<std::pair<std::string, std::string>> runs;
  for (const auto& p : paths) runs.emplace_back(p, read_file(p));
  const auto text = export_plot_data(runs, metric);
  if (output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) throw ValidationError(output, "cannot write file");
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle-based Bayesian inference experiments (FHBI, SVGD, SGLD, SAM, ensembles)"};
  app.set_version_flag("--version", std::string("hilbert_flow ") + version_string());
  app.require_subcommand(1);

  std::string config_path, output_dir, seed, metric, output;
  std::vector<std::string> paths;
  std::size_t seeds = 5;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Config file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of a config's sweep axes");
  sweep->add_option("config", config_path, "Config file")->required();
  auto* cmp = app.add_subcommand("compare", "Run configs over shared seeds and tabulate metrics");
  cmp->add_option("configs", paths, "Config files")->required();
  cmp->add_option("--seeds", seeds, "Number of paired seeds")->check(CLI::PositiveNumber);
  for (auto* sub : {run, sweep, cmp}) {
    sub->add_option("--output-dir", output_dir, "Override output_dir");
    sub->add_option("--seed", seed, "Override sampler.seed");
  }
  auto* exp = app.add_subcommand("export", "Export one metric from metrics CSVs in long format");
  exp->add_option("csvs", paths, "metrics.csv files")->required();
  exp->add_option("--metric", metric, "Metric column")->required();
  exp->add_option("--output", output, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, output_dir, seed);
    if (*sweep) return cmd_sweep(config_path, output_dir, seed);
    if (*cmp) return cmd_compare(paths, seeds, output_dir, seed);
    if (*exp) return cmd_export(paths, metric, output);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}
