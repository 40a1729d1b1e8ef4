#include "spq/bandwidth.hpp"
#include "spq/config.hpp"
#include "spq/errors.hpp"
#include "spq/io.hpp"
#include "spq/parallel.hpp"
#include "spq/predictor.hpp"
#include "spq/replication.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 0;
  std::string bandwidth;
  std::string bw_grid;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "base seed (covariate field; noise field derived)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
  cmd->add_option("--bandwidth", o.bandwidth, "auto or a fixed h_mean");
  cmd->add_option("--bw-grid", o.bw_grid, "CV grid lo:hi:count");
}

spq::RunConfig resolve_config(const CommonOptions& o) {
  spq::RunConfig cfg = o.config.empty() ? spq::RunConfig{} : spq::load_run_config(o.config);
  if (o.seed) spq::apply_seed_flag(cfg, *o.seed);
  if (!o.bandwidth.empty()) spq::apply_bandwidth_flag(cfg, o.bandwidth);
  if (!o.bw_grid.empty()) spq::apply_bw_grid_flag(cfg, o.bw_grid);
  return cfg;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw spq::ArgumentError("cannot create output directory " + dir.string());
  return dir;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

template <class Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  spq::write_text_file(path, buf.str());
}

void write_error(const std::string& out, int exit_code, const std::string& code,
                 const std::string& message) {
  const json doc{{"exit_code", exit_code}, {"error", code}, {"message", message}};
  std::cerr << doc.dump() << '\n';
  std::error_code ec;
  fs::create_directories(out, ec);
  if (!ec) {
    try {
      spq::write_text_file(fs::path(out) / "error.json", dump(doc));
    } catch (const std::exception&) {
    }
  }
}

int guarded(const std::string& out, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const spq::ConfigError& e) {
    write_error(out, kExitConfig, "config_error", e.what());
    return kExitConfig;
  } catch (const spq::ArgumentError& e) {
    write_error(out, kExitConfig, "argument_error", e.what());
    return kExitConfig;
  } catch (const json::exception& e) {
    write_error(out, kExitConfig, "config_error", e.what());
    return kExitConfig;
  } catch (const spq::NumericalError& e) {
    write_error(out, kExitNumerical, e.code(), e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    write_error(out, kExitNumerical, "numerical_error", e.what());
    return kExitNumerical;
  }
}

json grf_metadata(const spq::GrfSpec& spec, std::uint64_t seed, double jitter) {
  return {{"mean", spec.mean},         {"variance", spec.variance}, {"scale", spec.scale},
          {"jitter", spec.jitter},     {"seed", seed},              {"applied_jitter", jitter}};
}

void cmd_simulate(const CommonOptions& o) {
  const spq::RunConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o.out);
  const spq::ModelSimulator sim(cfg.grid, cfg.covariate_field, cfg.noise_field, cfg.mask);
  const spq::ModelField model = sim.simulate(cfg.covariate_seed, cfg.noise_seed);
  const spq::FieldOnGrid field = spq::hold_out(model.response, cfg.targets);

  write_with(dir / "field.csv", [&](std::ostream& s) { spq::write_plot_csv(s, field, cfg.targets); });
  write_with(dir / "covariate.csv", [&](std::ostream& s) { spq::write_field_csv(s, model.covariate); });

  json targets = json::array();
  for (const spq::Site& t : cfg.targets) targets.push_back({t.i, t.j});
  const json meta{
      {"grid", {{"n1", cfg.grid.n1()}, {"n2", cfg.grid.n2()}, {"sites", cfg.grid.size()}}},
      {"covariate_field",
       grf_metadata(cfg.covariate_field, cfg.covariate_seed, sim.covariate_sampler().applied_jitter())},
      {"noise_field", grf_metadata(cfg.noise_field, cfg.noise_seed, sim.noise_sampler().applied_jitter())},
      {"mask",
       {{"block", cfg.mask.block},
        {"tail", cfg.mask.tail},
        {"mask_observed_count", model.response.observed_count()},
        {"held_out", cfg.targets.size()},
        {"observed_count", field.observed_count()}}},
      {"targets", targets}};
  spq::write_text_file(dir / "metadata.json", dump(meta));
}

struct EstimateOptions {
  std::string sample;
  std::string field;
  std::string queries;
  std::string vicinity;
};

void cmd_estimate(const CommonOptions& o, const EstimateOptions& e) {
  const spq::RunConfig cfg = resolve_config(o);
  if (e.sample.empty() == e.field.empty()) {
    throw spq::ArgumentError("estimate needs exactly one of --sample or --field");
  }
  const fs::path dir = prepare_out(o.out);

  std::optional<spq::Sample> sample;
  if (!e.sample.empty()) {
    sample = spq::read_sample_csv(fs::path(e.sample));
  } else {
    const spq::NamedVicinity& v =
        e.vicinity.empty() ? cfg.vicinities.front() : cfg.vicinity(e.vicinity);
    sample = spq::build_training(spq::read_field_csv(fs::path(e.field)).field, v.shape);
  }
  const auto queries = spq::read_query_csv(fs::path(e.queries));

  const spq::PredictConfig pc = cfg.predict_config(spq::resolve_threads(o.threads));
  spq::BandwidthReport bw;
  if (cfg.bandwidth.mode == spq::BandwidthPlan::Mode::fixed) {
    bw = spq::make_bandwidth_report(cfg.bandwidth.h_mean, cfg.quantiles);
  } else {
    const std::vector<double> grid =
        cfg.bandwidth.grid.empty() ? spq::default_bandwidth_grid(*sample) : cfg.bandwidth.grid;
    bw = spq::select_bandwidths(*sample, grid, cfg.quantiles, pc.estimator(1.0, sample->dim()),
                                pc.threads);
  }
  const spq::EstimatorConfig ecfg = pc.estimator(bw.h_mean, sample->dim());
  const auto rows = spq::evaluate_queries(*sample, queries, ecfg, cfg.interval.alpha);

  write_with(dir / "results.csv", [&](std::ostream& s) { spq::write_results_csv(s, rows); });
  spq::write_text_file(dir / "bandwidth.json", dump(spq::to_json(bw)));
}

std::vector<std::string> select_vicinities(const spq::RunConfig& cfg, const std::string& flag) {
  if (flag.empty() || flag == "all" || flag == "both") return {};
  cfg.vicinity(flag);
  return {flag};
}

void cmd_predict(const CommonOptions& o, const EstimateOptions& e) {
  spq::RunConfig cfg = resolve_config(o);
  if (e.field.empty()) throw spq::ArgumentError("predict needs --field");
  const fs::path dir = prepare_out(o.out);
  spq::FieldCsv input = spq::read_field_csv(fs::path(e.field));
  if (!(input.field.region == cfg.grid)) {
    throw spq::ArgumentError("field CSV grid does not match the configured grid");
  }
  if (!input.targets.empty() && o.config.empty()) cfg.targets = input.targets;

  std::vector<std::string> names = select_vicinities(cfg, e.vicinity);
  if (names.empty())
    for (const auto& v : cfg.vicinities) names.push_back(v.name);

  const spq::PredictConfig pc = cfg.predict_config(spq::resolve_threads(o.threads));
  std::vector<spq::ExperimentReport> reports;
  for (const auto& name : names) reports.push_back(spq::predict(input.field, cfg.task(cfg.vicinity(name).shape), pc));

  json vics = json::object();
  std::vector<const spq::ExperimentReport*> ptrs;
  for (std::size_t k = 0; k < names.size(); ++k) {
    vics[names[k]] = spq::to_json(reports[k]);
    ptrs.push_back(&reports[k]);
  }
  spq::write_text_file(dir / "report.json", dump({{"config", spq::to_json(cfg)}, {"vicinities", vics}}));
  write_with(dir / "table.csv", [&](std::ostream& s) { spq::write_table_csv(s, names, ptrs); });
}

void cmd_replicate(const CommonOptions& o, const std::optional<std::size_t>& seeds,
                   const std::string& vicinity) {
  const spq::RunConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o.out);
  spq::ReplicationOptions opts;
  opts.seeds = seeds;
  opts.vicinities = select_vicinities(cfg, vicinity);
  opts.threads = spq::resolve_threads(o.threads);
  const spq::ReplicationResult result = spq::run_replication(cfg, opts);

  spq::write_text_file(dir / "report.json", dump(spq::to_json(result)));
  std::vector<const spq::ExperimentReport*> first;
  for (const auto& v : result.runs.front().vicinities) first.push_back(&v.report);
  write_with(dir / "table.csv",
             [&](std::ostream& s) { spq::write_table_csv(s, result.vicinity_names, first); });
  write_with(dir / "plot_data.csv",
             [&](std::ostream& s) { spq::write_plot_csv(s, result.first_field, cfg.targets); });
  write_with(dir / "sweep.csv", [&](std::ostream& s) { spq::write_sweep_csv(s, result); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel conditional-quantile prediction for spatial random fields"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "simulate the model field and write field CSV + metadata");
  add_common(sim, sim_opts);

  CommonOptions est_opts;
  EstimateOptions est_in;
  auto* est = app.add_subcommand("estimate", "evaluate CDF/density/quantile/interval queries");
  add_common(est, est_opts);
  est->add_option("--sample", est_in.sample, "sample CSV x_1..x_d,y")->check(CLI::ExistingFile);
  est->add_option("--field", est_in.field, "field CSV; the sample is built from a vicinity")
      ->check(CLI::ExistingFile);
  est->add_option("--vicinity", est_in.vicinity, "vicinity name used with --field");
  est->add_option("--queries", est_in.queries, "query CSV x_1..x_d[,y][,p]")
      ->required()
      ->check(CLI::ExistingFile);

  CommonOptions pred_opts;
  EstimateOptions pred_in;
  auto* pred = app.add_subcommand("predict", "predict conditional quantiles at the target sites");
  add_common(pred, pred_opts);
  pred->add_option("--field", pred_in.field, "field CSV")->required()->check(CLI::ExistingFile);
  pred->add_option("--vicinity", pred_in.vicinity, "vicinity name, or all");

  CommonOptions rep_opts;
  std::optional<std::size_t> rep_seeds;
  std::string rep_vicinity;
  auto* rep = app.add_subcommand("replicate", "simulate, predict and summarise over seeds");
  add_common(rep, rep_opts);
  rep->add_option("--seeds", rep_seeds, "number of paired seeds")->check(CLI::PositiveNumber);
  rep->add_option("--vicinity", rep_vicinity, "vicinity name, both or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (sim->parsed()) return guarded(sim_opts.out, [&] { cmd_simulate(sim_opts); });
  if (est->parsed()) return guarded(est_opts.out, [&] { cmd_estimate(est_opts, est_in); });
  if (pred->parsed()) return guarded(pred_opts.out, [&] { cmd_predict(pred_opts, pred_in); });
  return guarded(rep_opts.out, [&] { cmd_replicate(rep_opts, rep_seeds, rep_vicinity); });
}
