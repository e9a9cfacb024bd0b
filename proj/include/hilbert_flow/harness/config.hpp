#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hilbert_flow/datasets.hpp"
#include "hilbert_flow/kernels.hpp"
#include "hilbert_flow/runner.hpp"
#include "hilbert_flow/samplers.hpp"
#include "hilbert_flow/targets.hpp"

namespace hflow::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& what)
      : ConfigError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class TargetModel { Gaussian, Mixture, Logistic, MLP };
enum class DatasetKind { Blobs, Arcs };

struct TargetDescriptor {
  TargetModel model = TargetModel::Logistic;
  std::size_t dim = 1;
  std::vector<double> mean;
  std::vector<double> covariance;  // row-major dim x dim; empty means identity
  std::vector<double> mixture_centers;
  std::vector<double> mixture_weights;
  double mixture_variance = 1.0;
  DatasetKind dataset = DatasetKind::Blobs;
  std::vector<double> blob_centers;
  std::size_t features = 2;
  double spread = 1.0;
  double noise = 0.1;
  std::size_t per_class = 50;
  std::size_t holdout_per_class = 100;
  std::uint64_t data_seed = 0;
  std::size_t hidden = 16;
  double prior_precision = 1e-2;

  bool analytic() const noexcept { return model == TargetModel::Gaussian || model == TargetModel::Mixture; }
};

// Resolved, validated experiment. `values` holds every key with defaults
// applied; it is the canonical form echoed into summaries and re-parsed when
// overrides or sweep values are substituted.
struct ExperimentConfig {
  TargetDescriptor target;
  SamplerConfig sampler;
  MetricsOptions metrics;
  std::string output_dir;
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
  std::map<std::string, std::string> values;
};

struct KeySpec {
  const char* key;
  const char* fallback;  // empty string: derived or required
};

inline const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"target.model", ""},
      {"target.dim", "1"},
      {"target.mean", ""},
      {"target.covariance", ""},
      {"target.mixture.centers", "[-3, 3]"},
      {"target.mixture.weights", ""},
      {"target.mixture.variance", "1"},
      {"target.dataset", "blobs"},
      {"target.data.centers", "[-2, -2, 2, 2]"},
      {"target.data.features", "2"},
      {"target.data.spread", "1"},
      {"target.data.noise", "0.1"},
      {"target.data.per_class", "50"},
      {"target.data.holdout_per_class", "100"},
      {"target.data.seed", "0"},
      {"target.hidden", "16"},
      {"target.prior_precision", "0.01"},
      {"sampler.algo", ""},
      {"sampler.m", "4"},
      {"sampler.rho", "0.03"},
      {"sampler.lr", "0.1"},
      {"sampler.epochs", "50"},
      {"sampler.batch_size", "32"},
      {"sampler.seed", "0"},
      {"sampler.lr_schedule", "constant"},
      {"sampler.warmup_epochs", "0"},
      {"sampler.init_std", "auto"},
      {"kernel.family", "rbf"},
      {"kernel.sigma", "1.0"},
      {"kernel.degree", "10"},
      {"kernel.offset", "1"},
      {"kernel.bandwidth", "fixed"},
      {"metrics.cadence", "1"},
      {"metrics.bins", "15"},
      {"metrics.mce", "false"},
      {"metrics.sharpness_rho", "auto"},
      {"output_dir", "out"},
  };
  return keys;
}

inline bool is_known_key(const std::string& key) {
  for (const auto& k : known_keys()) {
    if (key == k.key) return true;
  }
  return false;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool is_list(const std::string& v) { return v.size() >= 2 && v.front() == '[' && v.back() == ']'; }

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  const std::string inner = trim(v.substr(1, v.size() - 2));
  if (inner.empty()) return items;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

inline double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError(field, "expected a number, got '" + v + "'");
  }
  return out;
}

inline std::uint64_t to_uint(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ValidationError(field, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

inline bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(field, "expected true or false, got '" + v + "'");
}

inline std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  if (v.empty()) return {};
  if (!is_list(v)) return {to_double(field, v)};
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(field, item));
  return out;
}

template <typename Enum>
Enum to_enum(const std::string& field, const std::string& v, const std::vector<std::pair<const char*, Enum>>& table) {
  std::string options;
  for (const auto& [name, value] : table) {
    if (v == name) return value;
    options += options.empty() ? name : std::string("|") + name;
  }
  throw ValidationError(field, "expected one of " + options + ", got '" + v + "'");
}

}  // namespace detail

// Builds a typed config from a complete key -> value map.
inline ExperimentConfig config_from_values(std::map<std::string, std::string> values,
                                           std::vector<std::pair<std::string, std::vector<std::string>>> sweep = {}) {
  using namespace detail;
  for (const auto& k : known_keys()) {
    if (!values.count(k.key)) values[k.key] = k.fallback;
  }
  auto get = [&](const char* key) -> const std::string& { return values.at(key); };
  auto required = [&](const char* key) -> const std::string& {
    if (get(key).empty()) throw ValidationError(key, "is required");
    return get(key);
  };

  ExperimentConfig cfg;
  auto& t = cfg.target;
  t.model = to_enum<TargetModel>("target.model", required("target.model"),
                                 {{"gaussian", TargetModel::Gaussian},
                                  {"mixture", TargetModel::Mixture},
                                  {"logistic", TargetModel::Logistic},
                                  {"mlp", TargetModel::MLP}});
  t.dim = to_uint("target.dim", get("target.dim"));
  if (t.dim < 1) throw ValidationError("target.dim", "must be >= 1");
  t.mean = to_doubles("target.mean", get("target.mean"));
  if (t.mean.empty()) t.mean.assign(t.dim, 0.0);
  if (t.model == TargetModel::Gaussian && t.mean.size() != t.dim) {
    throw ValidationError("target.mean", "needs target.dim entries");
  }
  t.covariance = to_doubles("target.covariance", get("target.covariance"));
  if (!t.covariance.empty() && t.covariance.size() != t.dim * t.dim) {
    throw ValidationError("target.covariance", "needs target.dim^2 entries (row-major)");
  }
  t.mixture_centers = to_doubles("target.mixture.centers", get("target.mixture.centers"));
  if (t.model == TargetModel::Mixture && (t.mixture_centers.empty() || t.mixture_centers.size() % t.dim != 0)) {
    throw ValidationError("target.mixture.centers", "needs a multiple of target.dim entries");
  }
  const std::size_t components = t.mixture_centers.size() / t.dim;
  t.mixture_weights = to_doubles("target.mixture.weights", get("target.mixture.weights"));
  if (t.mixture_weights.empty() && components > 0) t.mixture_weights.assign(components, 1.0 / components);
  if (t.model == TargetModel::Mixture && t.mixture_weights.size() != components) {
    throw ValidationError("target.mixture.weights", "needs one weight per component");
  }
  t.mixture_variance = to_double("target.mixture.variance", get("target.mixture.variance"));
  if (!(t.mixture_variance > 0.0)) throw ValidationError("target.mixture.variance", "must be positive");
  t.dataset = to_enum<DatasetKind>("target.dataset", get("target.dataset"),
                                   {{"blobs", DatasetKind::Blobs}, {"arcs", DatasetKind::Arcs}});
  t.features = to_uint("target.data.features", get("target.data.features"));
  if (t.features < 1) throw ValidationError("target.data.features", "must be >= 1");
  t.blob_centers = to_doubles("target.data.centers", get("target.data.centers"));
  if (t.blob_centers.size() % t.features != 0 || t.blob_centers.size() / t.features < 2) {
    throw ValidationError("target.data.centers", "needs at least two centers of target.data.features entries");
  }
  t.spread = to_double("target.data.spread", get("target.data.spread"));
  if (!(t.spread > 0.0)) throw ValidationError("target.data.spread", "must be positive");
  t.noise = to_double("target.data.noise", get("target.data.noise"));
  if (!(t.noise > 0.0)) throw ValidationError("target.data.noise", "must be positive");
  t.per_class = to_uint("target.data.per_class", get("target.data.per_class"));
  if (t.per_class < 1) throw ValidationError("target.data.per_class", "must be >= 1");
  t.holdout_per_class = to_uint("target.data.holdout_per_class", get("target.data.holdout_per_class"));
  if (t.holdout_per_class < 1) throw ValidationError("target.data.holdout_per_class", "must be >= 1");
  t.data_seed = to_uint("target.data.seed", get("target.data.seed"));
  t.hidden = to_uint("target.hidden", get("target.hidden"));
  if (t.hidden < 1) throw ValidationError("target.hidden", "must be >= 1");
  t.prior_precision = to_double("target.prior_precision", get("target.prior_precision"));
  if (!(t.prior_precision >= 0.0)) throw ValidationError("target.prior_precision", "must be nonnegative");

  auto& s = cfg.sampler;
  s.algo = to_enum<Algorithm>("sampler.algo", required("sampler.algo"),
                              {{"fhbi", Algorithm::FHBI},
                               {"svgd", Algorithm::SVGD},
                               {"sgld", Algorithm::SGLD},
                               {"sam", Algorithm::SAM},
                               {"ensemble", Algorithm::Ensemble}});
  s.m = to_uint("sampler.m", get("sampler.m"));
  if (s.m < 1) throw ValidationError("sampler.m", "must be >= 1");
  s.rho = to_double("sampler.rho", get("sampler.rho"));
  if (!(s.rho >= 0.0)) throw ValidationError("sampler.rho", "must be nonnegative");
  s.lr = to_double("sampler.lr", get("sampler.lr"));
  if (!(s.lr > 0.0)) throw ValidationError("sampler.lr", "must be positive");
  s.epochs = to_uint("sampler.epochs", get("sampler.epochs"));
  s.batch_size = to_uint("sampler.batch_size", get("sampler.batch_size"));
  if (s.batch_size < 1) throw ValidationError("sampler.batch_size", "must be >= 1");
  s.seed = to_uint("sampler.seed", get("sampler.seed"));
  s.lr_schedule = to_enum<LrSchedule>("sampler.lr_schedule", get("sampler.lr_schedule"),
                                      {{"constant", LrSchedule::Constant}, {"cosine", LrSchedule::CosineAnnealing}});
  s.warmup_epochs = to_uint("sampler.warmup_epochs", get("sampler.warmup_epochs"));
  if (get("sampler.init_std") == "auto") {
    s.init_std = t.analytic() ? 2.0 : 0.5;
  } else {
    s.init_std = to_double("sampler.init_std", get("sampler.init_std"));
    if (!(s.init_std > 0.0)) throw ValidationError("sampler.init_std", "must be positive");
  }

  auto& k = s.kernel;
  k.family = to_enum<KernelFamily>("kernel.family", get("kernel.family"),
                                   {{"rbf", KernelFamily::RBF}, {"polynomial", KernelFamily::Polynomial}});
  k.sigma = to_double("kernel.sigma", get("kernel.sigma"));
  if (!(k.sigma > 0.0)) throw ValidationError("kernel.sigma", "must be positive");
  const auto degree = to_uint("kernel.degree", get("kernel.degree"));
  if (degree < 1) throw ValidationError("kernel.degree", "must be >= 1");
  k.degree = static_cast<int>(degree);
  k.offset = to_double("kernel.offset", get("kernel.offset"));
  k.bandwidth_policy = to_enum<BandwidthPolicy>(
      "kernel.bandwidth", get("kernel.bandwidth"),
      {{"fixed", BandwidthPolicy::Fixed}, {"median", BandwidthPolicy::MedianHeuristic}});

  auto& mo = cfg.metrics;
  mo.cadence = to_uint("metrics.cadence", get("metrics.cadence"));
  if (mo.cadence < 1) throw ValidationError("metrics.cadence", "must be >= 1");
  mo.bins = to_uint("metrics.bins", get("metrics.bins"));
  if (mo.bins < 1) throw ValidationError("metrics.bins", "must be >= 1");
  mo.report_mce = to_bool("metrics.mce", get("metrics.mce"));
  // auto: probe at the configured sampler radius, 0.05 when the sampler has none
  if (get("metrics.sharpness_rho") == "auto") {
    mo.sharpness_rho = s.rho > 0.0 ? s.rho : 0.05;
  } else {
    mo.sharpness_rho = to_double("metrics.sharpness_rho", get("metrics.sharpness_rho"));
    if (!(mo.sharpness_rho > 0.0)) throw ValidationError("metrics.sharpness_rho", "must be positive");
  }

  cfg.output_dir = get("output_dir");
  if (cfg.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");

  for (const auto& [key, list] : sweep) {
    if (!is_known_key(key)) throw ValidationError("sweep." + key, "unknown key '" + key + "'");
    if (list.empty()) throw ValidationError("sweep." + key, "value list must be nonempty");
  }
  cfg.sweep = std::move(sweep);
  cfg.values = std::move(values);
  return cfg;
}

// Flat "dotted.key = value" text; '#' starts a comment; lists are [a, b, c].
// Keys under "sweep." name another key and a list of values to expand over.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
  std::stringstream ss(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (key.find_first_of(" \t[]") != std::string::npos) throw ParseError(line_no, "malformed key '" + key + "'");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    if ((value.front() == '[') != (value.back() == ']')) throw ParseError(line_no, "unbalanced list brackets");

    if (key.rfind("sweep.", 0) == 0) {
      const std::string target_key = key.substr(6);
      for (const auto& [k, _] : sweep) {
        if (k == target_key) throw ParseError(line_no, "duplicate key '" + key + "'");
      }
      sweep.emplace_back(target_key, is_list(value) ? split_list(value) : std::vector<std::string>{value});
      continue;
    }
    if (!is_known_key(key)) throw ValidationError(key, "unknown key '" + key + "'");
    if (values.count(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    values[key] = value;
  }
  return config_from_values(std::move(values), std::move(sweep));
}

// Same config with one key replaced (CLI overrides, sweep points, seeds).
inline ExperimentConfig with_value(const ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ValidationError(key, "unknown key '" + key + "'");
  auto values = cfg.values;
  values[key] = value;
  return config_from_values(std::move(values), cfg.sweep);
}

// Cartesian product over the sweep axes, first axis varying slowest. The
// expanded configs carry no sweep of their own.
inline std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& cfg) {
  std::vector<std::map<std::string, std::string>> points = {cfg.values};
  for (const auto& [key, list] : cfg.sweep) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : list) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::vector<ExperimentConfig> out;
  out.reserve(points.size());
  for (auto& p : points) out.push_back(config_from_values(std::move(p)));
  return out;
}

inline DatasetSpec dataset_spec(const TargetDescriptor& t, std::size_t per_class) {
  DatasetSpec spec;
  spec.seed = t.data_seed;
  if (t.dataset == DatasetKind::Blobs) {
    GaussianBlobs blobs;
    for (std::size_t c = 0; c < t.blob_centers.size() / t.features; ++c) {
      blobs.centers.emplace_back(t.blob_centers.begin() + static_cast<std::ptrdiff_t>(c * t.features),
                                 t.blob_centers.begin() + static_cast<std::ptrdiff_t>((c + 1) * t.features));
    }
    blobs.spread = t.spread;
    blobs.per_class = per_class;
    spec.generator = blobs;
  } else {
    spec.generator = TwoArcs{t.noise, per_class};
  }
  return spec;
}

inline Target build_target(const TargetDescriptor& t) {
  const auto d = static_cast<Eigen::Index>(t.dim);
  auto covariance = [&]() -> Eigen::MatrixXd {
    if (t.covariance.empty()) return Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd c(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index col = 0; col < d; ++col) c(r, col) = t.covariance[static_cast<std::size_t>(r * d + col)];
    }
    return c;
  };
  try {
    switch (t.model) {
      case TargetModel::Gaussian:
        return Target::gaussian(t.mean, covariance());
      case TargetModel::Mixture: {
        std::vector<GaussianDensity> comps;
        const Eigen::MatrixXd cov = t.mixture_variance * Eigen::MatrixXd::Identity(d, d);
        for (std::size_t c = 0; c < t.mixture_centers.size() / t.dim; ++c) {
          ParamVector mu(t.mixture_centers.begin() + static_cast<std::ptrdiff_t>(c * t.dim),
                         t.mixture_centers.begin() + static_cast<std::ptrdiff_t>((c + 1) * t.dim));
          comps.emplace_back(std::move(mu), cov);
        }
        return Target::mixture(t.mixture_weights, std::move(comps));
      }
      case TargetModel::Logistic:
      case TargetModel::MLP: {
        auto train = make_dataset(dataset_spec(t, t.per_class), 0);
        auto holdout = make_dataset(dataset_spec(t, t.holdout_per_class), 1);
        if (t.model == TargetModel::Logistic) {
          return Target::logistic(std::move(train), std::move(holdout), t.prior_precision);
        }
        return Target::mlp(t.hidden, std::move(train), std::move(holdout), t.prior_precision);
      }
    }
  } catch (const ArgumentError& e) {
    throw ValidationError("target", e.what());
  }
  throw ValidationError("target.model", "unsupported");
}

}  // namespace hflow::harness
