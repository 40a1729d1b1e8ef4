#include "spq/replication.hpp"

#include "spq/errors.hpp"
#include "spq/io.hpp"
#include "spq/parallel.hpp"

#include <algorithm>
#include <ostream>

namespace spq {

using nlohmann::json;

FieldOnGrid hold_out(FieldOnGrid field, const std::vector<Site>& targets) {
  for (const Site& t : targets) field.mask[field.region.index(t)] = false;
  return field;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ReplicationResult run_replication(const RunConfig& cfg, const ReplicationOptions& options) {
  if (cfg.targets.empty()) throw ConfigError("replication needs at least one target");
  std::vector<const NamedVicinity*> selected;
  if (options.vicinities.empty()) {
    for (const auto& v : cfg.vicinities) selected.push_back(&v);
  } else {
    for (const auto& name : options.vicinities) selected.push_back(&cfg.vicinity(name));
  }

  const ModelSimulator simulator(cfg.grid, cfg.covariate_field, cfg.noise_field, cfg.mask);
  const std::size_t seeds = options.seeds.value_or(cfg.seeds);
  if (seeds == 0) throw ConfigError("seed count must be positive");

  ReplicationResult result{cfg, {}, std::vector<SeedRun>(seeds), {},
                           FieldOnGrid(cfg.grid, std::vector<double>(cfg.grid.size()),
                                       std::vector<bool>(cfg.grid.size())),
                           simulator.covariate_sampler().applied_jitter(),
                           simulator.noise_sampler().applied_jitter()};
  for (const auto* v : selected) result.vicinity_names.push_back(v->name);

  // Parallel over seeds when sweeping, over targets/grid points otherwise.
  const unsigned inner_threads = seeds > 1 ? 1u : options.threads;
  const PredictConfig pcfg = cfg.predict_config(inner_threads);
  parallel_for(seeds, options.threads, [&](std::size_t k) {
    SeedRun& run = result.runs[k];
    run.seed_x = cfg.covariate_seed + k;
    run.seed_z = cfg.noise_seed + k;
    const ModelField model = simulator.simulate(run.seed_x, run.seed_z);
    const FieldOnGrid field = hold_out(model.response, cfg.targets);
    for (const NamedVicinity* v : selected) {
      ExperimentReport report = predict(field, cfg.task(v->shape), pcfg);
      const Coverage cov = coverage_report(report);
      run.vicinities.push_back({v->name, std::move(report), cov});
    }
    if (k == 0) result.first_field = field;
  });

  for (std::size_t v = 0; v < selected.size(); ++v) {
    VicinitySummary s;
    s.name = selected[v]->name;
    s.dimension = selected[v]->shape.size();
    std::vector<double> contained;
    std::vector<double> lengths;
    for (std::size_t q = 0; q < cfg.quantiles.size(); ++q) {
      std::vector<double> maes;
      for (const SeedRun& run : result.runs) {
        if (const auto& m = run.vicinities[v].report.mae[q]) maes.push_back(*m);
      }
      s.median_mae.push_back(maes.empty() ? std::nullopt : std::optional<double>(median(maes)));
    }
    for (const SeedRun& run : result.runs) {
      const Coverage& c = run.vicinities[v].coverage;
      if (c.intervals == 0) continue;
      contained.push_back(static_cast<double>(c.contained));
      lengths.push_back(c.average_length);
    }
    if (!contained.empty()) {
      s.median_contained = median(contained);
      s.median_average_length = median(lengths);
    }
    result.summary.push_back(std::move(s));
  }
  return result;
}

json to_json(const ReplicationResult& result) {
  json runs = json::array();
  for (const SeedRun& run : result.runs) {
    json vics = json::object();
    for (const VicinityRun& v : run.vicinities) vics[v.name] = to_json(v.report);
    runs.push_back({{"seed_x", run.seed_x}, {"seed_z", run.seed_z}, {"vicinities", vics}});
  }
  json summary = json::array();
  for (const VicinitySummary& s : result.summary) {
    json mae = json::array();
    for (std::size_t q = 0; q < s.median_mae.size(); ++q) {
      mae.push_back({{"p", result.config.quantiles[q]},
                     {"median_mae", s.median_mae[q] ? json(*s.median_mae[q]) : json()}});
    }
    summary.push_back({{"vicinity", s.name},
                       {"dimension", s.dimension},
                       {"median_mae", mae},
                       {"median_contained", s.median_contained},
                       {"median_average_length", s.median_average_length}});
  }
  json dims = json::object();
  for (const VicinitySummary& s : result.summary) dims[s.name] = s.dimension;
  return {{"config", to_json(result.config)},
          {"metadata",
           {{"seeds", result.runs.size()},
            {"vicinities", result.vicinity_names},
            {"dimension", dims},
            {"observed_sites", result.first_field.observed_count()},
            {"held_out_targets", result.config.targets.size()},
            {"covariate_jitter", result.covariate_jitter},
            {"noise_jitter", result.noise_jitter},
            {"kernel_x_compact_support", KernelSpec{result.config.kernel_x, 1}.compact_support()},
            {"kernel_y_compact_support", KernelSpec{result.config.kernel_y, 1}.compact_support()}}},
          {"summary", summary},
          {"runs", runs}};
}

void write_sweep_csv(std::ostream& out, const ReplicationResult& result) {
  out << "seed_x,seed_z,vicinity";
  for (double p : result.config.quantiles) out << ",mae_p=" << format_double(p);
  out << ",contained,intervals,average_length\n";
  for (const SeedRun& run : result.runs) {
    for (const VicinityRun& v : run.vicinities) {
      out << run.seed_x << ',' << run.seed_z << ',' << v.name;
      for (const auto& m : v.report.mae) out << ',' << (m ? format_double(*m) : "NA");
      out << ',' << v.coverage.contained << ',' << v.coverage.intervals << ','
          << format_double(v.coverage.average_length) << '\n';
    }
  }
}

}  // namespace spq
