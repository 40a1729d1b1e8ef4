#include "spq/config.hpp"

#include "spq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

namespace spq {

using nlohmann::json;

namespace {

std::string join(std::string_view path, std::string_view key) {
  return path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
}

void require_object(const json& node, std::string_view path) {
  if (!node.is_object()) throw ConfigError(std::string(path) + ": expected an object");
}

void check_keys(const json& node, std::string_view path,
                std::initializer_list<std::string_view> allowed) {
  require_object(node, path.empty() ? "<root>" : path);
  for (const auto& [key, value] : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + join(path, key) + "'");
    }
  }
}

double number(const json& node, std::string_view path) {
  if (!node.is_number()) throw ConfigError(std::string(path) + ": expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ConfigError(std::string(path) + ": must be finite");
  return v;
}

double positive(const json& node, std::string_view path) {
  const double v = number(node, path);
  if (!(v > 0.0)) throw ConfigError(std::string(path) + ": must be positive");
  return v;
}

int positive_int(const json& node, std::string_view path) {
  if (!node.is_number_integer() || node.get<long long>() < 1 ||
      node.get<long long>() > std::numeric_limits<int>::max()) {
    throw ConfigError(std::string(path) + ": expected a positive integer");
  }
  return node.get<int>();
}

std::uint64_t seed_value(const json& node, std::string_view path) {
  if (!node.is_number_unsigned() && !(node.is_number_integer() && node.get<long long>() >= 0)) {
    throw ConfigError(std::string(path) + ": expected a nonnegative integer seed");
  }
  return node.get<std::uint64_t>();
}

double probability(const json& node, std::string_view path) {
  const double v = number(node, path);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(path) + ": must lie in (0,1)");
  return v;
}

Site site_value(const json& node, std::string_view path) {
  if (!node.is_array() || node.size() != 2 || !node[0].is_number_integer() ||
      !node[1].is_number_integer()) {
    throw ConfigError(std::string(path) + ": expected [i, j] integer pair");
  }
  return {node[0].get<int>(), node[1].get<int>()};
}

KernelFamily kernel_value(const json& node, std::string_view path) {
  if (!node.is_string()) throw ConfigError(std::string(path) + ": expected a kernel name");
  try {
    return parse_kernel_family(node.get<std::string>());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string(path) + ": " + e.what());
  }
}

void parse_grf(const json& node, std::string_view path, GrfSpec& spec, std::uint64_t& seed) {
  check_keys(node, path, {"mean", "variance", "scale", "jitter", "seed"});
  if (node.contains("mean")) spec.mean = number(node["mean"], join(path, "mean"));
  if (node.contains("variance")) spec.variance = positive(node["variance"], join(path, "variance"));
  if (node.contains("scale")) spec.scale = positive(node["scale"], join(path, "scale"));
  if (node.contains("jitter")) {
    spec.jitter = number(node["jitter"], join(path, "jitter"));
    if (spec.jitter < 0.0) throw ConfigError(join(path, "jitter") + ": must be nonnegative");
  }
  if (node.contains("seed")) seed = seed_value(node["seed"], join(path, "seed"));
}

VicinityShape vicinity_value(const json& node, std::string_view path, std::string& name) {
  check_keys(node, path, {"name", "steps", "offsets"});
  if (!node.contains("name") || !node["name"].is_string()) {
    throw ConfigError(join(path, "name") + ": expected a string");
  }
  name = node["name"].get<std::string>();
  const bool has_steps = node.contains("steps");
  if (has_steps == node.contains("offsets")) {
    throw ConfigError(std::string(path) + ": give exactly one of 'steps' or 'offsets'");
  }
  try {
    if (has_steps) {
      const json& steps = node["steps"];
      if (!steps.is_array() || steps.empty()) {
        throw ConfigError(join(path, "steps") + ": expected a nonempty integer array");
      }
      std::vector<int> values;
      for (const json& s : steps) {
        if (!s.is_number_integer()) throw ConfigError(join(path, "steps") + ": expected integers");
        values.push_back(s.get<int>());
      }
      return VicinityShape::product(values);
    }
    const json& offsets = node["offsets"];
    if (!offsets.is_array()) throw ConfigError(join(path, "offsets") + ": expected an array");
    std::vector<Site> values;
    for (const json& o : offsets) values.push_back(site_value(o, join(path, "offsets")));
    return VicinityShape(std::move(values));
  } catch (const ConfigError&) {
    throw;
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string(path) + ": " + e.what());
  }
}

}  // namespace

std::vector<Site> default_targets() {
  return {{5, 5}, {5, 11}, {5, 17}, {9, 8}, {9, 14}, {13, 8}, {13, 14}, {17, 5}, {17, 11}, {17, 17}};
}

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, "", {"grid", "mask", "covariate_field", "noise_field", "targets", "vicinities",
                       "quantiles", "interval", "estimator", "bandwidth", "seeds"});
  RunConfig cfg;

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_keys(g, "grid", {"n1", "n2"});
    int n1 = cfg.grid.n1();
    int n2 = cfg.grid.n2();
    if (g.contains("n1")) n1 = positive_int(g["n1"], "grid.n1");
    if (g.contains("n2")) n2 = positive_int(g["n2"], "grid.n2");
    cfg.grid = GridRegion(n1, n2);
  }
  if (doc.contains("mask")) {
    const json& m = doc["mask"];
    check_keys(m, "mask", {"block", "tail"});
    if (m.contains("block")) cfg.mask.block = positive_int(m["block"], "mask.block");
    if (m.contains("tail")) {
      if (!m["tail"].is_number_integer() || m["tail"].get<int>() < 0) {
        throw ConfigError("mask.tail: expected a nonnegative integer");
      }
      cfg.mask.tail = m["tail"].get<int>();
    }
  }
  try {
    observation_mask(cfg.grid, cfg.mask);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("mask: ") + e.what());
  }
  if (doc.contains("covariate_field")) {
    parse_grf(doc["covariate_field"], "covariate_field", cfg.covariate_field, cfg.covariate_seed);
  }
  if (doc.contains("noise_field")) {
    parse_grf(doc["noise_field"], "noise_field", cfg.noise_field, cfg.noise_seed);
  }

  if (doc.contains("targets")) {
    const json& t = doc["targets"];
    if (!t.is_array()) throw ConfigError("targets: expected an array of [i, j] pairs");
    cfg.targets.clear();
    for (const json& s : t) {
      const Site site = site_value(s, "targets");
      if (!cfg.grid.contains(site)) {
        throw ConfigError("targets: site (" + std::to_string(site.i) + "," +
                          std::to_string(site.j) + ") outside the grid");
      }
      cfg.targets.push_back(site);
    }
  }
  if (doc.contains("vicinities")) {
    const json& v = doc["vicinities"];
    if (!v.is_array() || v.empty()) throw ConfigError("vicinities: expected a nonempty array");
    cfg.vicinities.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
      std::string name;
      VicinityShape shape = vicinity_value(v[k], "vicinities[" + std::to_string(k) + "]", name);
      for (const auto& existing : cfg.vicinities) {
        if (existing.name == name) throw ConfigError("vicinities: duplicate name '" + name + "'");
      }
      cfg.vicinities.push_back({name, std::move(shape)});
    }
  }
  if (doc.contains("quantiles")) {
    const json& q = doc["quantiles"];
    if (!q.is_array() || q.empty()) throw ConfigError("quantiles: expected a nonempty array");
    cfg.quantiles.clear();
    for (const json& p : q) cfg.quantiles.push_back(probability(p, "quantiles"));
  }
  if (doc.contains("interval")) {
    const json& iv = doc["interval"];
    check_keys(iv, "interval", {"kind", "p1", "p2", "alpha", "center"});
    if (iv.contains("kind")) {
      if (!iv["kind"].is_string()) throw ConfigError("interval.kind: expected a string");
      const std::string kind = iv["kind"].get<std::string>();
      if (kind == "predictive") cfg.interval.kind = IntervalSpec::Kind::predictive;
      else if (kind == "asymptotic") cfg.interval.kind = IntervalSpec::Kind::asymptotic;
      else if (kind == "none") cfg.interval.kind = IntervalSpec::Kind::none;
      else throw ConfigError("interval.kind: expected predictive|asymptotic|none");
    }
    if (iv.contains("p1")) cfg.interval.p1 = probability(iv["p1"], "interval.p1");
    if (iv.contains("p2")) cfg.interval.p2 = probability(iv["p2"], "interval.p2");
    if (iv.contains("center")) cfg.interval.center = probability(iv["center"], "interval.center");
    if (iv.contains("alpha")) {
      cfg.interval.alpha = number(iv["alpha"], "interval.alpha");
      if (!(cfg.interval.alpha > 0.0 && cfg.interval.alpha <= 1.0)) {
        throw ConfigError("interval.alpha: must lie in (0,1]");
      }
    }
    if (!(cfg.interval.p1 < cfg.interval.p2)) throw ConfigError("interval: p1 must be < p2");
  }
  if (doc.contains("estimator")) {
    const json& e = doc["estimator"];
    check_keys(e, "estimator", {"kernel_x", "kernel_y", "root_tol", "mass_threshold"});
    if (e.contains("kernel_x")) cfg.kernel_x = kernel_value(e["kernel_x"], "estimator.kernel_x");
    if (e.contains("kernel_y")) cfg.kernel_y = kernel_value(e["kernel_y"], "estimator.kernel_y");
    if (e.contains("root_tol")) {
      cfg.root_tol = positive(e["root_tol"], "estimator.root_tol");
      if (cfg.root_tol > 1e-3) throw ConfigError("estimator.root_tol: must be <= 1e-3");
    }
    if (e.contains("mass_threshold") && !e["mass_threshold"].is_null()) {
      cfg.mass_threshold = positive(e["mass_threshold"], "estimator.mass_threshold");
    }
  }
  if (doc.contains("bandwidth")) {
    const json& b = doc["bandwidth"];
    check_keys(b, "bandwidth", {"mode", "value", "grid"});
    const std::string mode = b.value("mode", std::string("auto"));
    if (mode == "auto") {
      cfg.bandwidth.mode = BandwidthPlan::Mode::automatic;
      if (b.contains("value")) throw ConfigError("bandwidth.value: only valid with mode 'fixed'");
    } else if (mode == "fixed") {
      cfg.bandwidth.mode = BandwidthPlan::Mode::fixed;
      if (!b.contains("value")) throw ConfigError("bandwidth.value: required with mode 'fixed'");
      cfg.bandwidth.h_mean = positive(b["value"], "bandwidth.value");
    } else {
      throw ConfigError("bandwidth.mode: expected auto|fixed");
    }
    if (b.contains("grid")) {
      const json& g = b["grid"];
      check_keys(g, "bandwidth.grid", {"lo", "hi", "count"});
      if (!g.contains("lo") || !g.contains("hi") || !g.contains("count")) {
        throw ConfigError("bandwidth.grid: needs lo, hi and count");
      }
      const double lo = positive(g["lo"], "bandwidth.grid.lo");
      const double hi = positive(g["hi"], "bandwidth.grid.hi");
      const int count = positive_int(g["count"], "bandwidth.grid.count");
      if (hi < lo || (count > 1 && hi == lo)) {
        throw ConfigError("bandwidth.grid: need lo < hi");
      }
      cfg.bandwidth.grid = log_grid(lo, hi, static_cast<std::size_t>(count));
    }
  }
  if (doc.contains("seeds")) cfg.seeds = static_cast<std::size_t>(positive_int(doc["seeds"], "seeds"));
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

namespace {

json grf_json(const GrfSpec& spec, std::uint64_t seed) {
  return {{"mean", spec.mean},
          {"variance", spec.variance},
          {"scale", spec.scale},
          {"jitter", spec.jitter},
          {"seed", seed}};
}

std::string_view interval_kind_name(IntervalSpec::Kind kind) {
  switch (kind) {
    case IntervalSpec::Kind::predictive: return "predictive";
    case IntervalSpec::Kind::asymptotic: return "asymptotic";
    case IntervalSpec::Kind::none: return "none";
  }
  return "none";
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json doc;
  doc["grid"] = {{"n1", cfg.grid.n1()}, {"n2", cfg.grid.n2()}};
  doc["mask"] = {{"block", cfg.mask.block}, {"tail", cfg.mask.tail}};
  doc["covariate_field"] = grf_json(cfg.covariate_field, cfg.covariate_seed);
  doc["noise_field"] = grf_json(cfg.noise_field, cfg.noise_seed);
  json targets = json::array();
  for (const Site& s : cfg.targets) targets.push_back({s.i, s.j});
  doc["targets"] = targets;
  json vics = json::array();
  for (const auto& v : cfg.vicinities) {
    json offsets = json::array();
    for (const Site& o : v.shape.offsets()) offsets.push_back({o.i, o.j});
    vics.push_back({{"name", v.name}, {"offsets", offsets}});
  }
  doc["vicinities"] = vics;
  doc["quantiles"] = cfg.quantiles;
  doc["interval"] = {{"kind", interval_kind_name(cfg.interval.kind)},
                     {"p1", cfg.interval.p1},
                     {"p2", cfg.interval.p2},
                     {"alpha", cfg.interval.alpha},
                     {"center", cfg.interval.center}};
  doc["estimator"] = {{"kernel_x", to_string(cfg.kernel_x)},
                      {"kernel_y", to_string(cfg.kernel_y)},
                      {"root_tol", cfg.root_tol},
                      {"mass_threshold", cfg.mass_threshold ? json(*cfg.mass_threshold) : json()}};
  if (cfg.bandwidth.mode == BandwidthPlan::Mode::fixed) {
    doc["bandwidth"] = {{"mode", "fixed"}, {"value", cfg.bandwidth.h_mean}};
  } else {
    doc["bandwidth"] = {{"mode", "auto"}};
    if (!cfg.bandwidth.grid.empty()) {
      doc["bandwidth"]["grid"] = {{"lo", cfg.bandwidth.grid.front()},
                                  {"hi", cfg.bandwidth.grid.back()},
                                  {"count", cfg.bandwidth.grid.size()}};
    }
  }
  doc["seeds"] = cfg.seeds;
  return doc;
}

PredictConfig RunConfig::predict_config(unsigned threads) const {
  PredictConfig pc;
  pc.kernel_x = kernel_x;
  pc.kernel_y = kernel_y;
  pc.root_tol = root_tol;
  pc.mass_threshold = mass_threshold;
  pc.bandwidth = bandwidth;
  pc.threads = threads;
  return pc;
}

PredictionTask RunConfig::task(const VicinityShape& shape) const {
  PredictionTask t;
  t.vicinity = shape;
  t.targets = targets;
  t.quantiles = quantiles;
  t.interval = interval;
  return t;
}

const NamedVicinity& RunConfig::vicinity(const std::string& name) const {
  for (const auto& v : vicinities)
    if (v.name == name) return v;
  throw ConfigError("no vicinity named '" + name + "' in the config");
}

void apply_bandwidth_flag(RunConfig& cfg, const std::string& value) {
  if (value == "auto") {
    cfg.bandwidth.mode = BandwidthPlan::Mode::automatic;
    return;
  }
  std::size_t used = 0;
  double h = 0.0;
  try {
    h = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("--bandwidth expects 'auto' or a positive number, got '" + value + "'");
  }
  cfg.bandwidth.mode = BandwidthPlan::Mode::fixed;
  cfg.bandwidth.h_mean = h;
}

void apply_bw_grid_flag(RunConfig& cfg, const std::string& value) {
  std::istringstream in(value);
  double lo = 0.0;
  double hi = 0.0;
  long long count = 0;
  char c1 = 0;
  char c2 = 0;
  if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || !in.eof() ||
      !(lo > 0.0) || !(hi > lo) || count < 1) {
    throw ConfigError("--bw-grid expects lo:hi:count with 0 < lo < hi, got '" + value + "'");
  }
  cfg.bandwidth.grid = log_grid(lo, hi, static_cast<std::size_t>(count));
}

void apply_seed_flag(RunConfig& cfg, std::uint64_t seed) {
  cfg.covariate_seed = seed;
  cfg.noise_seed = mix_seed(seed);
}

}  // namespace spq
