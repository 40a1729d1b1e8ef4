#include "spq/estimator.hpp"

#include "spq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace spq {

Sample::Sample(std::size_t dim, std::vector<double> covariates, std::vector<double> responses)
    : dim_(dim), covariates_(std::move(covariates)), responses_(std::move(responses)) {
  if (dim_ == 0) throw ArgumentError("sample dimension must be positive");
  if (responses_.empty()) throw ArgumentError("sample must contain at least one pair");
  if (covariates_.size() != responses_.size() * dim_) {
    throw ArgumentError("sample has " + std::to_string(responses_.size()) + " responses but " +
                        std::to_string(covariates_.size()) + " covariate entries for d=" +
                        std::to_string(dim_));
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(covariates_.begin(), covariates_.end(), finite) ||
      !std::all_of(responses_.begin(), responses_.end(), finite)) {
    throw ArgumentError("sample contains non-finite entries");
  }
}

void EstimatorConfig::validate(std::size_t dim) const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ArgumentError("bandwidth must be positive and finite");
  }
  if (!(root_tol > 0.0 && root_tol <= 1e-3)) {
    throw ArgumentError("root_tol must lie in (0, 1e-3]");
  }
  if (mass_threshold && !(*mass_threshold > 0.0)) {
    throw ArgumentError("mass_threshold must be positive");
  }
  if (kernel_x.dimension != dim) {
    throw ArgumentError("kernel K has dimension " + std::to_string(kernel_x.dimension) +
                        " but covariates have dimension " + std::to_string(dim));
  }
  if (kernel_y.dimension != 1) throw ArgumentError("kernel w must be one-dimensional");
}

double EstimatorConfig::effective_mass_threshold(std::size_t n, std::size_t dim) const {
  if (mass_threshold) return *mass_threshold;
  // 1e-12 of the mass a single exact match contributes
  const double peak = eval_kernel({kernel_x.family, dim}, std::vector<double>(dim, 0.0));
  return 1e-12 * peak / (static_cast<double>(n) * std::pow(bandwidth, static_cast<double>(dim)));
}

LocalFit::LocalFit(const Sample& sample, std::span<const double> x, const EstimatorConfig& cfg)
    : sample_(sample), cfg_(cfg) {
  const std::size_t d = sample.dim();
  if (x.size() != d) {
    throw ArgumentError("query has dimension " + std::to_string(x.size()) + ", sample has " +
                        std::to_string(d));
  }
  cfg_.kernel_x.dimension = d;
  cfg_.validate(d);
  const double h = cfg_.bandwidth;
  const std::size_t n = sample.size();

  weights_.resize(n);
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = sample.covariate(i);
    for (std::size_t k = 0; k < d; ++k) u[k] = (x[k] - xi[k]) / h;
    weights_[i] = eval_kernel(cfg_.kernel_x, u);
    weight_sum_ += weights_[i];
  }
  norm_ = 1.0 / (static_cast<double>(n) * std::pow(h, static_cast<double>(d)));
  g_ = norm_ * weight_sum_;
  threshold_ = cfg_.effective_mass_threshold(n, d);
}

void LocalFit::require_mass() const {
  if (!has_mass()) {
    throw NoMassError("kernel mass g_n(x) = " + std::to_string(g_) + " below threshold " +
                      std::to_string(threshold_));
  }
}

double LocalFit::joint(double y) const {
  const double h = cfg_.bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    sum += weights_[i] * eval_kernel_1d(cfg_.kernel_y.family, (y - sample_.response(i)) / h);
  }
  return norm_ * sum / h;
}

double LocalFit::psi(double y) const {
  const double h = cfg_.bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    sum += weights_[i] *
           integrated_kernel_1d(cfg_.kernel_y.family, (y - sample_.response(i)) / h);
  }
  return norm_ * sum;
}

double LocalFit::cdf_unchecked(double y) const {
  const double h = cfg_.bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    sum += weights_[i] *
           integrated_kernel_1d(cfg_.kernel_y.family, (y - sample_.response(i)) / h);
  }
  // each term is <= its weight and rounding is monotone, so the ratio is <= 1
  return sum / weight_sum_;
}

double LocalFit::cdf(double y) const {
  require_mass();
  return cdf_unchecked(y);
}

double LocalFit::density(double y) const {
  require_mass();
  const double h = cfg_.bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    sum += weights_[i] * eval_kernel_1d(cfg_.kernel_y.family, (y - sample_.response(i)) / h);
  }
  return sum / (h * weight_sum_);
}

QuantileResult LocalFit::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile order p must lie in (0,1)");
  require_mass();

  const double h = cfg_.bandwidth;
  const auto [ymin_it, ymax_it] =
      std::minmax_element(sample_.responses().begin(), sample_.responses().end());
  double radius = support_radius(cfg_.kernel_y.family);
  if (!std::isfinite(radius)) {
    // gaussian w: K1 within root_tol of its limits at +-radius
    radius = -normal_quantile(0.5 * cfg_.root_tol);
  }

  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  bool straddles = false;
  for (int attempt = 0; attempt < 2 && !straddles; ++attempt) {
    lo = *ymin_it - h * radius;
    hi = *ymax_it + h * radius;
    f_lo = cdf_unchecked(lo);
    f_hi = cdf_unchecked(hi);
    straddles = f_lo < p && f_hi >= p;
    radius *= 2.0;
  }
  if (!straddles) {
    throw BracketFailure("F_n does not straddle p=" + std::to_string(p) + " on [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  // Invariant: F(lo) < p <= F(hi). Converging on the bracket width (not only
  // the residual) yields the leftmost root on flat stretches.
  const double width_tol = 1e-12 * (hi - lo);
  int iterations = 0;
  while (true) {
    if (hi - lo <= width_tol && f_hi - p <= cfg_.root_tol) break;
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = cdf_unchecked(mid);
    if (f_mid >= p) {
      hi = mid;
      f_hi = f_mid;
    } else {
      lo = mid;
      f_lo = f_mid;
    }
    ++iterations;
  }
  if (f_hi - p > cfg_.root_tol) {
    throw NumericalError("quantile residual " + std::to_string(f_hi - p) +
                         " exceeds root_tol at floating-point resolution");
  }
  return {hi, f_hi, lo, hi, iterations};
}

double LocalFit::survival_unchecked(double y) const {
  // 1 - K1(u) = K1(-u) for a symmetric w; summing it directly keeps the
  // upper tail accurate where 1 - F would cancel.
  const double h = cfg_.bandwidth;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    sum += weights_[i] *
           integrated_kernel_1d(cfg_.kernel_y.family, (sample_.response(i) - y) / h);
  }
  return sum / weight_sum_;
}

double LocalFit::sigma2(double y) const {
  const double f = cdf(y);
  const double s = survival_unchecked(y);
  const double l2 = kernel_constants(cfg_.kernel_x, cfg_.kernel_y).l2_norm_K;
  return f * s / g_ * l2;
}

double density_g(const Sample& sample, std::span<const double> x, const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).g();
}

double joint_density_f(const Sample& sample, std::span<const double> x, double y,
                       const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).joint(y);
}

double psi(const Sample& sample, std::span<const double> x, double y, const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).psi(y);
}

double cond_cdf(const Sample& sample, std::span<const double> x, double y,
                const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).cdf(y);
}

double cond_density(const Sample& sample, std::span<const double> x, double y,
                    const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).density(y);
}

QuantileResult cond_quantile(const Sample& sample, std::span<const double> x, double p,
                             const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).quantile(p);
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p) {
  if (values.size() != weights.size() || values.empty()) {
    throw ArgumentError("weighted_quantile: values and weights must be nonempty and aligned");
  }
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile order p must lie in (0,1)");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  // total in sorted order so the last cumulative sum equals it exactly
  double total = 0.0;
  for (std::size_t k : order) total += weights[k];
  if (!(total > 0.0)) throw NoMassError("all kernel weights are zero");
  const double target = p * total;
  double cumulative = 0.0;
  for (std::size_t k : order) {
    cumulative += weights[k];
    if (weights[k] > 0.0 && cumulative >= target) return values[k];
  }
  return values[order.back()];
}

double local_constant_quantile(const Sample& sample, std::span<const double> x, double p,
                               const EstimatorConfig& cfg) {
  const LocalFit fit(sample, x, cfg);
  return weighted_quantile(sample.responses(), fit.weights(), p);
}

double plugin_sigma2(const Sample& sample, std::span<const double> x, double y,
                     const EstimatorConfig& cfg) {
  return LocalFit(sample, x, cfg).sigma2(y);
}

IntervalResult confidence_interval(const Sample& sample, std::span<const double> x, double p,
                                   double alpha, const EstimatorConfig& cfg) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in (0,1]");
  const LocalFit fit(sample, x, cfg);
  const QuantileResult q = fit.quantile(p);
  const double dens = fit.density(q.value);
  if (!(dens > 0.0)) {
    throw ZeroDensityError("conditional density vanishes at the quantile " +
                           std::to_string(q.value));
  }
  const double z = alpha == 1.0 ? 0.0 : normal_quantile(1.0 - 0.5 * alpha);
  const double scale = std::sqrt(static_cast<double>(sample.size()) *
                                 std::pow(cfg.bandwidth, static_cast<double>(sample.dim())));
  const double half = z * std::sqrt(fit.sigma2(q.value)) / (scale * dens);
  if (!std::isfinite(half)) {
    throw ZeroDensityError("asymptotic half-width is not finite");
  }
  return {q.value - half, q.value + half, 1.0 - alpha, IntervalKind::asymptotic};
}

IntervalResult predictive_interval(const Sample& sample, std::span<const double> x, double p1,
                                   double p2, const EstimatorConfig& cfg) {
  if (!(p1 > 0.0 && p1 < p2 && p2 < 1.0)) {
    throw ArgumentError("predictive interval needs 0 < p1 < p2 < 1");
  }
  const LocalFit fit(sample, x, cfg);
  const double lower = fit.quantile(p1).value;
  const double upper = fit.quantile(p2).value;
  return {lower, upper, p2 - p1, IntervalKind::predictive};
}

}  // namespace spq
