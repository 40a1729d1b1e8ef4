#pragma once

#include "spq/bandwidth.hpp"
#include "spq/estimator.hpp"
#include "spq/field_sim.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spq {

/// Fixed set of lattice offsets V (0 excluded), kept in row-major order so
/// covariate coordinates line up across sites.
class VicinityShape {
public:
  explicit VicinityShape(std::vector<Site> offsets);

  /// steps x steps, e.g. {-1, 1} gives the four diagonal neighbours.
  static VicinityShape product(std::span<const int> steps);
  static VicinityShape small();  // {-1,1}^2, d = 4
  static VicinityShape large();  // {-2,-1,1,2}^2, d = 16

  const std::vector<Site>& offsets() const { return offsets_; }
  std::size_t size() const { return offsets_.size(); }

  friend bool operator==(const VicinityShape&, const VicinityShape&) = default;

private:
  std::vector<Site> offsets_;
};

std::vector<Site> vicinity_sites(Site i0, const VicinityShape& shape);

/// True when every vicinity site of `site` is inside the region and observed.
bool vicinity_observed(const FieldOnGrid& field, Site site, const VicinityShape& shape);
std::vector<double> vicinity_values(const FieldOnGrid& field, Site site,
                                    const VicinityShape& shape);

/// One pair per observed site whose whole vicinity is observed; throws
/// ConfigError when no site qualifies.
Sample build_training(const FieldOnGrid& field, const VicinityShape& shape);

struct IntervalSpec {
  enum class Kind { none, predictive, asymptotic };
  Kind kind = Kind::none;
  double p1 = 0.05;     // predictive
  double p2 = 0.95;
  double alpha = 0.1;   // asymptotic
  double center = 0.5;  // quantile order the asymptotic interval is centred on
};

struct PredictionTask {
  VicinityShape vicinity = VicinityShape::small();
  std::vector<Site> targets;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  IntervalSpec interval;

  /// Every quantile order the task needs a bandwidth for (quantiles plus interval orders).
  std::vector<double> required_orders() const;
};

struct BandwidthPlan {
  enum class Mode { automatic, fixed };
  Mode mode = Mode::automatic;
  double h_mean = 0.0;       // fixed mode
  std::vector<double> grid;  // automatic mode; empty selects the default grid
};

struct PredictConfig {
  KernelFamily kernel_x = KernelFamily::gaussian;
  KernelFamily kernel_y = KernelFamily::epanechnikov;
  double root_tol = 1e-8;
  std::optional<double> mass_threshold;
  BandwidthPlan bandwidth;
  unsigned threads = 1;

  EstimatorConfig estimator(double h, std::size_t dim) const;
};

struct TargetRow {
  Site site;
  double truth = 0.0;
  std::vector<std::optional<double>> predictions;  // per quantile order
  std::vector<std::string> failures;               // error code per quantile, "" on success
  std::optional<IntervalResult> interval;
  std::string interval_failure;
};

struct ExperimentReport {
  VicinityShape vicinity = VicinityShape::small();
  std::size_t dimension = 0;
  std::size_t training_size = 0;
  std::vector<double> quantiles;
  BandwidthReport bandwidths;
  std::vector<TargetRow> rows;
  std::vector<std::optional<double>> mae;  // per quantile, empty when every target failed
  std::vector<std::size_t> failed;         // per quantile
};

/// Conditional-quantile prediction at every target of the task.
ExperimentReport predict(const FieldOnGrid& field, const PredictionTask& task,
                         const PredictConfig& cfg);

/// Mean absolute deviation between aligned, nonempty vectors.
double mae(std::span<const double> predictions, std::span<const double> truth);

struct Coverage {
  std::size_t contained = 0;
  std::size_t intervals = 0;
  double average_length = 0.0;
};

Coverage coverage_report(const ExperimentReport& report);

}  // namespace spq
