#include "spq/predictor.hpp"

#include "spq/errors.hpp"
#include "spq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spq {

namespace {

std::string site_str(Site s) {
  return "(" + std::to_string(s.i) + "," + std::to_string(s.j) + ")";
}

}  // namespace

VicinityShape::VicinityShape(std::vector<Site> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.empty()) throw ArgumentError("vicinity must be nonempty");
  std::sort(offsets_.begin(), offsets_.end());
  if (std::adjacent_find(offsets_.begin(), offsets_.end()) != offsets_.end()) {
    throw ArgumentError("vicinity offsets must be distinct");
  }
  if (std::binary_search(offsets_.begin(), offsets_.end(), Site{0, 0})) {
    throw ArgumentError("vicinity must not contain the zero offset");
  }
}

VicinityShape VicinityShape::product(std::span<const int> steps) {
  std::vector<Site> offsets;
  for (int a : steps)
    for (int b : steps) offsets.push_back({a, b});
  return VicinityShape(std::move(offsets));
}

VicinityShape VicinityShape::small() {
  constexpr int steps[] = {-1, 1};
  return product(steps);
}

VicinityShape VicinityShape::large() {
  constexpr int steps[] = {-2, -1, 1, 2};
  return product(steps);
}

std::vector<Site> vicinity_sites(Site i0, const VicinityShape& shape) {
  std::vector<Site> out;
  out.reserve(shape.size());
  for (const Site& off : shape.offsets()) out.push_back(i0 + off);
  return out;
}

bool vicinity_observed(const FieldOnGrid& field, Site site, const VicinityShape& shape) {
  return std::all_of(shape.offsets().begin(), shape.offsets().end(),
                     [&](const Site& off) { return field.observed(site + off); });
}

std::vector<double> vicinity_values(const FieldOnGrid& field, Site site,
                                    const VicinityShape& shape) {
  std::vector<double> out;
  out.reserve(shape.size());
  for (const Site& s : vicinity_sites(site, shape)) out.push_back(field.value(s));
  return out;
}

Sample build_training(const FieldOnGrid& field, const VicinityShape& shape) {
  std::vector<double> covariates;
  std::vector<double> responses;
  for (std::size_t k = 0; k < field.region.size(); ++k) {
    if (!field.mask[k]) continue;
    const Site site = field.region.site(k);
    if (!vicinity_observed(field, site, shape)) continue;
    for (const Site& s : vicinity_sites(site, shape)) covariates.push_back(field.value(s));
    responses.push_back(field.values[k]);
  }
  if (responses.empty()) {
    throw ConfigError("no observed site has its whole vicinity observed; training set is empty");
  }
  return Sample(shape.size(), std::move(covariates), std::move(responses));
}

std::vector<double> PredictionTask::required_orders() const {
  std::vector<double> orders = quantiles;
  auto add = [&](double p) {
    if (std::find(orders.begin(), orders.end(), p) == orders.end()) orders.push_back(p);
  };
  if (interval.kind == IntervalSpec::Kind::predictive) {
    add(interval.p1);
    add(interval.p2);
  } else if (interval.kind == IntervalSpec::Kind::asymptotic) {
    add(interval.center);
  }
  return orders;
}

EstimatorConfig PredictConfig::estimator(double h, std::size_t dim) const {
  EstimatorConfig cfg;
  cfg.bandwidth = h;
  cfg.kernel_x = {kernel_x, dim};
  cfg.kernel_y = {kernel_y, 1};
  cfg.mass_threshold = mass_threshold;
  cfg.root_tol = root_tol;
  return cfg;
}

namespace {

void validate_task(const FieldOnGrid& field, const PredictionTask& task) {
  if (task.targets.empty()) throw ConfigError("prediction task has no targets");
  if (task.quantiles.empty()) throw ConfigError("prediction task has no quantile orders");
  for (double p : task.quantiles) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile orders must lie in (0,1)");
  }
  if (task.interval.kind == IntervalSpec::Kind::predictive &&
      !(task.interval.p1 > 0.0 && task.interval.p1 < task.interval.p2 && task.interval.p2 < 1.0)) {
    throw ConfigError("predictive interval needs 0 < p1 < p2 < 1");
  }
  if (task.interval.kind == IntervalSpec::Kind::asymptotic &&
      !(task.interval.alpha > 0.0 && task.interval.alpha <= 1.0)) {
    throw ConfigError("interval alpha must lie in (0,1]");
  }
  for (const Site& t : task.targets) {
    if (!field.region.contains(t)) throw ConfigError("target " + site_str(t) + " outside region");
    if (field.observed(t)) throw ConfigError("target " + site_str(t) + " is an observed site");
    if (!vicinity_observed(field, t, task.vicinity)) {
      throw ConfigError("target " + site_str(t) + " has unobserved vicinity sites");
    }
  }
}

}  // namespace

ExperimentReport predict(const FieldOnGrid& field, const PredictionTask& task,
                         const PredictConfig& cfg) {
  validate_task(field, task);
  const Sample sample = build_training(field, task.vicinity);
  const std::size_t d = sample.dim();
  const std::vector<double> orders = task.required_orders();

  ExperimentReport report;
  report.vicinity = task.vicinity;
  report.dimension = d;
  report.training_size = sample.size();
  report.quantiles = task.quantiles;

  if (cfg.bandwidth.mode == BandwidthPlan::Mode::fixed) {
    report.bandwidths = make_bandwidth_report(cfg.bandwidth.h_mean, orders);
  } else {
    const std::vector<double> grid =
        cfg.bandwidth.grid.empty() ? default_bandwidth_grid(sample) : cfg.bandwidth.grid;
    report.bandwidths =
        select_bandwidths(sample, grid, orders, cfg.estimator(1.0, d), cfg.threads);
  }

  report.rows.resize(task.targets.size());
  parallel_for(task.targets.size(), cfg.threads, [&](std::size_t t) {
    TargetRow& row = report.rows[t];
    row.site = task.targets[t];
    row.truth = field.value(row.site);
    const std::vector<double> x = vicinity_values(field, row.site, task.vicinity);
    for (double p : task.quantiles) {
      try {
        const EstimatorConfig est = cfg.estimator(report.bandwidths.for_quantile(p), d);
        row.predictions.push_back(cond_quantile(sample, x, p, est).value);
        row.failures.emplace_back();
      } catch (const NumericalError& e) {
        row.predictions.push_back(std::nullopt);
        row.failures.emplace_back(e.code());
      }
    }
    const IntervalSpec& spec = task.interval;
    try {
      if (spec.kind == IntervalSpec::Kind::predictive) {
        const double lower =
            cond_quantile(sample, x, spec.p1,
                          cfg.estimator(report.bandwidths.for_quantile(spec.p1), d))
                .value;
        const double upper =
            cond_quantile(sample, x, spec.p2,
                          cfg.estimator(report.bandwidths.for_quantile(spec.p2), d))
                .value;
        row.interval = IntervalResult{lower, upper, spec.p2 - spec.p1, IntervalKind::predictive};
      } else if (spec.kind == IntervalSpec::Kind::asymptotic) {
        row.interval = confidence_interval(
            sample, x, spec.center, spec.alpha,
            cfg.estimator(report.bandwidths.for_quantile(spec.center), d));
      }
    } catch (const NumericalError& e) {
      row.interval_failure = e.code();
    }
  });

  std::size_t any_success = 0;
  for (std::size_t q = 0; q < task.quantiles.size(); ++q) {
    std::vector<double> pred;
    std::vector<double> truth;
    for (const TargetRow& row : report.rows) {
      if (row.predictions[q]) {
        pred.push_back(*row.predictions[q]);
        truth.push_back(row.truth);
      }
    }
    report.failed.push_back(report.rows.size() - pred.size());
    report.mae.push_back(pred.empty() ? std::nullopt : std::optional<double>(mae(pred, truth)));
    any_success += pred.size();
  }
  if (any_success == 0) {
    throw NumericalError("prediction failed at every target");
  }
  return report;
}

double mae(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) {
    throw ArgumentError("mae: prediction and truth lengths differ");
  }
  if (predictions.empty()) throw ArgumentError("mae: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) sum += std::abs(predictions[k] - truth[k]);
  return sum / static_cast<double>(predictions.size());
}

Coverage coverage_report(const ExperimentReport& report) {
  Coverage cov;
  double total = 0.0;
  for (const TargetRow& row : report.rows) {
    if (!row.interval) continue;
    ++cov.intervals;
    total += row.interval->length();
    if (row.interval->contains(row.truth)) ++cov.contained;
  }
  cov.average_length = cov.intervals > 0 ? total / static_cast<double>(cov.intervals) : 0.0;
  return cov;
}

}  // namespace spq
