#pragma once

#include "spq/field_sim.hpp"
#include "spq/predictor.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spq {

/// Ten held-out interior sites of the 21x21 observed block; no target lies
/// in another target's {-2,-1,1,2}^2 vicinity.
std::vector<Site> default_targets();

struct NamedVicinity {
  std::string name;
  VicinityShape shape;
};

/// One JSON document shared by every command; each command reads the
/// sections it needs. Unknown keys anywhere are rejected.
struct RunConfig {
  GridRegion grid{61, 61};
  MaskSpec mask;
  GrfSpec covariate_field = default_covariate_spec();
  std::uint64_t covariate_seed = 1000;
  GrfSpec noise_field = default_noise_spec();
  std::uint64_t noise_seed = 5000;

  std::vector<Site> targets = default_targets();
  std::vector<NamedVicinity> vicinities{{"small", VicinityShape::small()},
                                        {"large", VicinityShape::large()}};
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  IntervalSpec interval{IntervalSpec::Kind::predictive};

  KernelFamily kernel_x = KernelFamily::gaussian;
  KernelFamily kernel_y = KernelFamily::epanechnikov;
  double root_tol = 1e-8;
  std::optional<double> mass_threshold;
  BandwidthPlan bandwidth;

  std::size_t seeds = 1;

  PredictConfig predict_config(unsigned threads) const;
  PredictionTask task(const VicinityShape& shape) const;
  /// Throws ConfigError when no vicinity has this name.
  const NamedVicinity& vicinity(const std::string& name) const;
};

/// Parses and validates a configuration document; ConfigError on any problem.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// `--bandwidth auto|<value>`
void apply_bandwidth_flag(RunConfig& cfg, const std::string& value);
/// `--bw-grid lo:hi:count`
void apply_bw_grid_flag(RunConfig& cfg, const std::string& value);
/// `--seed s`: covariate seed s, noise seed mix_seed(s).
void apply_seed_flag(RunConfig& cfg, std::uint64_t seed);

}  // namespace spq
