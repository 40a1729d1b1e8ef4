#pragma once

#include "spq/estimator.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace spq {

struct CvPoint {
  double bandwidth = 0.0;
  double score = 0.0;         // mean squared leave-one-out error over points with mass
  std::size_t no_mass = 0;    // leave-one-out points without kernel mass
};

struct CvSelection {
  double h_mean = 0.0;
  std::vector<CvPoint> curve;       // admissible grid points, in grid order
  std::vector<double> excluded;     // grid points dropped for NoMass at >= 50% of points
};

/// Leave-one-out squared error of the Nadaraya-Watson mean at bandwidth h.
CvPoint loo_cv_score(const Sample& sample, double h, const EstimatorConfig& cfg);

/// argmin over the grid of the leave-one-out CV score; ties go to the
/// smallest h. Grid points are scored independently on `threads` workers.
CvSelection h_mean_cv(const Sample& sample, std::span<const double> grid,
                      const EstimatorConfig& cfg, unsigned threads = 1);

/// count points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// Root-mean of the per-coordinate standard deviations of the covariates.
double covariate_scale(const Sample& sample);

/// 25 log-spaced points over [0.05, 2] x covariate_scale.
std::vector<double> default_bandwidth_grid(const Sample& sample);

/// (p(1-p) / phi(Phi^{-1}(p))^2)^{1/5}
double yu_jones_factor(double p);
double yu_jones(double h_mean, double p);

struct BandwidthReport {
  double h_mean = 0.0;
  std::vector<std::pair<double, double>> h_p;  // (p, h_p)
  std::vector<CvPoint> cv_curve;
  std::vector<double> excluded;

  double for_quantile(double p) const;
};

BandwidthReport make_bandwidth_report(double h_mean, std::span<const double> quantiles);
BandwidthReport select_bandwidths(const Sample& sample, std::span<const double> grid,
                                  std::span<const double> quantiles, const EstimatorConfig& cfg,
                                  unsigned threads = 1);

}  // namespace spq
