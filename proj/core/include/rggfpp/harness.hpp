#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rggfpp/augmented.hpp"
#include "rggfpp/runner.hpp"

namespace rggfpp {

/// Everything an experiment run needs. Unset optionals take values derived
/// from the model (see the README for the defaults).
struct ExperimentConfig {
  // [model]
  int dim = 2;
  double intensity = 1.0;
  double radius = 2.0;
  double side = 600.0;
  std::string distribution = "exponential(1)";

  // [run]
  std::uint64_t seed = 1;
  std::size_t replicas = 10;
  std::size_t first_replica = 0;
  std::size_t jobs = 1;
  std::string output = "rggfpp-out";

  // [tiers] pair separations ||y - x|| for phi, variance, tails and wander.
  std::vector<double> tiers{40, 80, 120, 160, 200};
  std::size_t directions = 1;

  // [phi]
  std::size_t bootstrap = 1000;

  // [shape]
  std::vector<double> extents{50, 100, 150};
  std::optional<double> phi;
  std::size_t phi_replicas = 100;
  std::optional<double> phi_tier;

  // [tails]
  std::optional<double> tail_tier;
  double tail_low_quantile = 0.1;
  double tail_high_quantile = 0.95;
  std::size_t tail_min_replicas = 1000;

  // [wander]
  double wander_exponent = 0.85;
  std::optional<double> wander_pitch;
  std::size_t wander_min_replicas = 1;

  // [tree]
  double cone_epsilon = 0.05;
  std::optional<double> cone_min_radius;
  std::vector<double> scan_radii;

  // [rays]
  std::vector<double> band_radii;
  std::optional<double> band_width;

  // [holes]
  std::vector<double> hole_sides{200, 400, 800};
  double hole_resolution = 0.5;
  std::optional<double> hole_margin;

  // [perc-scan]
  std::vector<double> scan_r{1.0, 1.2, 1.4, 1.6, 1.8, 2.0};

  // [augmented]
  std::vector<double> spacings{1, 2, 4};
  std::optional<double> kappa;
  double delta = 0.1;
  std::vector<double> aug_norms{8, 16, 32};
  std::optional<std::size_t> fixed_budget;

  ModelSpec model() const;
  double effective_kappa() const { return kappa.value_or(100.0 * dim); }
  std::vector<double> effective_scan_radii() const;
  std::vector<double> effective_band_radii() const;
};

struct ConfigError {
  std::string field;
  std::string message;
};

class ConfigInvalid : public std::invalid_argument {
 public:
  explicit ConfigInvalid(std::vector<ConfigError> errors);
  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  std::vector<ConfigError> errors_;
};

/// Experiments accepted by run().
const std::vector<std::string>& experiment_names();

/// Parses INI text ("[section]" headers, "key = value" lines, lists as
/// comma-separated values) or JSON (objects keyed by section). Throws
/// ConfigInvalid on unknown keys or malformed values.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Field-level checks for the given experiment, including distribution
/// admissibility. Empty means valid.
std::vector<ConfigError> validate(const ExperimentConfig& config, std::string_view experiment);

/// Canonical JSON echo of a config; equal configs give equal strings.
std::string config_to_json(const ExperimentConfig& config);
/// FNV-1a of config_to_json.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Scalar and series results of one experiment, as written to the summary JSON.
struct Summary {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, std::string> labels;

  double at(const std::string& key) const;
};

struct RunResult {
  std::string experiment;
  std::filesystem::path data_csv;
  std::filesystem::path summary_json;
  std::filesystem::path manifest_json;
  std::size_t records = 0;
  std::size_t failed_replicas = 0;
  Summary summary;
  /// 0 success, 3 when some replica failed.
  int exit_code = 0;
};

/// Validates, runs all replicas and writes <experiment>.csv,
/// <experiment>_summary.json, manifest.json (and errors.csv on failures)
/// into config.output. Throws ConfigInvalid before doing any work.
RunResult run(const ExperimentConfig& config, std::string_view experiment);

/// Writes `contents` to a temporary sibling, then renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

}  // namespace rggfpp
