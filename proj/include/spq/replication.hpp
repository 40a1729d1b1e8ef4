#pragma once

#include "spq/config.hpp"
#include "spq/predictor.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spq {

/// Copy of `field` with the targets removed from the observation mask.
FieldOnGrid hold_out(FieldOnGrid field, const std::vector<Site>& targets);

struct ReplicationOptions {
  std::optional<std::size_t> seeds;      // overrides RunConfig::seeds
  std::vector<std::string> vicinities;   // empty = every configured vicinity
  unsigned threads = 1;
};

struct VicinityRun {
  std::string name;
  ExperimentReport report;
  Coverage coverage;
};

struct SeedRun {
  std::uint64_t seed_x = 0;
  std::uint64_t seed_z = 0;
  std::vector<VicinityRun> vicinities;
};

struct VicinitySummary {
  std::string name;
  std::size_t dimension = 0;
  std::vector<std::optional<double>> median_mae;  // per quantile
  double median_contained = 0.0;
  double median_average_length = 0.0;
};

struct ReplicationResult {
  RunConfig config;
  std::vector<std::string> vicinity_names;
  std::vector<SeedRun> runs;
  std::vector<VicinitySummary> summary;
  FieldOnGrid first_field;  // held-out response field of the first seed
  double covariate_jitter = 0.0;
  double noise_jitter = 0.0;
};

/// Seed k of a sweep uses (covariate_seed + k, noise_seed + k).
ReplicationResult run_replication(const RunConfig& cfg, const ReplicationOptions& options);

double median(std::vector<double> values);

nlohmann::json to_json(const ReplicationResult& result);
void write_sweep_csv(std::ostream& out, const ReplicationResult& result);

}  // namespace spq
