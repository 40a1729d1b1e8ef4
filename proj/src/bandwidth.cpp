#include "spq/bandwidth.hpp"

#include "spq/errors.hpp"
#include "spq/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace spq {

CvPoint loo_cv_score(const Sample& sample, double h, const EstimatorConfig& cfg) {
  EstimatorConfig local = cfg;
  local.bandwidth = h;
  local.kernel_x.dimension = sample.dim();
  local.validate(sample.dim());

  const std::size_t n = sample.size();
  const std::size_t d = sample.dim();
  // g_{-i} >= threshold  <=>  sum_{j != i} K_ij >= threshold (n-1) h^d
  const double mass_floor =
      n > 1 ? local.effective_mass_threshold(n - 1, d) * static_cast<double>(n - 1) *
                  std::pow(h, static_cast<double>(d))
            : std::numeric_limits<double>::infinity();

  std::vector<double> num(n, 0.0);
  std::vector<double> den(n, 0.0);
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = sample.covariate(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = sample.covariate(j);
      for (std::size_t k = 0; k < d; ++k) u[k] = (xi[k] - xj[k]) / h;
      const double kij = eval_kernel(local.kernel_x, u);
      num[i] += kij * sample.response(j);
      den[i] += kij;
      num[j] += kij * sample.response(i);
      den[j] += kij;
    }
  }

  CvPoint point{h, 0.0, 0};
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(den[i] > 0.0) || den[i] < mass_floor) {
      ++point.no_mass;
      continue;
    }
    const double resid = sample.response(i) - num[i] / den[i];
    sum += resid * resid;
    ++used;
  }
  point.score = used > 0 ? sum / static_cast<double>(used)
                         : std::numeric_limits<double>::infinity();
  return point;
}

CvSelection h_mean_cv(const Sample& sample, std::span<const double> grid,
                      const EstimatorConfig& cfg, unsigned threads) {
  if (grid.empty()) throw ArgumentError("bandwidth grid must be nonempty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0)) throw ArgumentError("bandwidth grid values must be positive");
    if (k > 0 && !(grid[k] > grid[k - 1])) {
      throw ArgumentError("bandwidth grid must be strictly increasing");
    }
  }

  std::vector<CvPoint> scored(grid.size());
  parallel_for(grid.size(), threads,
               [&](std::size_t k) { scored[k] = loo_cv_score(sample, grid[k], cfg); });

  CvSelection out;
  const std::size_t n = sample.size();
  double best = std::numeric_limits<double>::infinity();
  for (const CvPoint& pt : scored) {
    if (2 * pt.no_mass >= n || !std::isfinite(pt.score)) {
      out.excluded.push_back(pt.bandwidth);
      continue;
    }
    out.curve.push_back(pt);
    if (pt.score < best) {  // strict: ties keep the smaller h
      best = pt.score;
      out.h_mean = pt.bandwidth;
    }
  }
  if (out.curve.empty()) {
    throw SelectionError("every bandwidth in the grid lacks kernel mass at >= 50% of the "
                         "leave-one-out points");
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw ArgumentError("log_grid needs 0 < lo <= hi and count >= 1");
  }
  if (count == 1) return {lo};
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) grid[k] = lo * std::exp(step * static_cast<double>(k));
  grid.back() = hi;
  return grid;
}

double covariate_scale(const Sample& sample) {
  const std::size_t n = sample.size();
  const std::size_t d = sample.dim();
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += sample.covariate(i)[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = sample.covariate(i)[k] - mean;
      var += dv * dv;
    }
    acc += n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  }
  const double scale = std::sqrt(acc / static_cast<double>(d));
  return scale > 0.0 ? scale : 1.0;
}

std::vector<double> default_bandwidth_grid(const Sample& sample) {
  const double scale = covariate_scale(sample);
  return log_grid(0.05 * scale, 2.0 * scale, 25);
}

double yu_jones_factor(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("Yu-Jones rule needs p in (0,1)");
  const double phi = normal_pdf(normal_quantile(p));
  return std::pow(p * (1.0 - p) / (phi * phi), 0.2);
}

double yu_jones(double h_mean, double p) {
  if (!(h_mean > 0.0)) throw ArgumentError("h_mean must be positive");
  return h_mean * yu_jones_factor(p);
}

double BandwidthReport::for_quantile(double p) const {
  for (const auto& [q, h] : h_p)
    if (q == p) return h;
  return yu_jones(h_mean, p);
}

BandwidthReport make_bandwidth_report(double h_mean, std::span<const double> quantiles) {
  BandwidthReport report;
  report.h_mean = h_mean;
  for (double p : quantiles) report.h_p.emplace_back(p, yu_jones(h_mean, p));
  return report;
}

BandwidthReport select_bandwidths(const Sample& sample, std::span<const double> grid,
                                  std::span<const double> quantiles, const EstimatorConfig& cfg,
                                  unsigned threads) {
  CvSelection cv = h_mean_cv(sample, grid, cfg, threads);
  BandwidthReport report = make_bandwidth_report(cv.h_mean, quantiles);
  report.cv_curve = std::move(cv.curve);
  report.excluded = std::move(cv.excluded);
  return report;
}

}  // namespace spq
