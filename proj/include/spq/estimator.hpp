#pragma once

#include "spq/kernels.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace spq {

/// Training pairs (X_i in R^d, Y_i in R), covariates stored row-major.
class Sample {
public:
  Sample(std::size_t dim, std::vector<double> covariates, std::vector<double> responses);

  std::size_t size() const { return responses_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> covariate(std::size_t i) const {
    return {covariates_.data() + i * dim_, dim_};
  }
  double response(std::size_t i) const { return responses_[i]; }
  std::span<const double> responses() const { return responses_; }
  std::span<const double> covariates() const { return covariates_; }

private:
  std::size_t dim_;
  std::vector<double> covariates_;
  std::vector<double> responses_;
};

struct EstimatorConfig {
  double bandwidth = 1.0;  // shared by the x- and y-smoothing
  KernelSpec kernel_x{KernelFamily::gaussian, 1};
  KernelSpec kernel_y{KernelFamily::epanechnikov, 1};
  /// Minimum admissible g_n(x). When unset the floor is 1e-12 K(0) / (n h^d):
  /// the kernel sum must reach 1e-12 of one exact match.
  std::optional<double> mass_threshold;
  double root_tol = 1e-8;

  void validate(std::size_t dim) const;
  double effective_mass_threshold(std::size_t n, std::size_t dim) const;
};

struct QuantileResult {
  double value = 0.0;
  double cdf_at_value = 0.0;
  double low = 0.0;
  double high = 0.0;
  int iterations = 0;
};

enum class IntervalKind { asymptotic, predictive };

struct IntervalResult {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  IntervalKind kind = IntervalKind::asymptotic;

  double length() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Kernel weights K((x - X_i)/h) for one query point. All conditional
/// quantities at x are ratios of sums over these weights, so a fit is
/// built once per x and reused for every y or p.
class LocalFit {
public:
  LocalFit(const Sample& sample, std::span<const double> x, const EstimatorConfig& cfg);

  double g() const { return g_; }
  bool has_mass() const { return g_ >= threshold_; }
  /// Throws NoMassError unless has_mass().
  void require_mass() const;

  double joint(double y) const;        // f_n(x, y)
  double psi(double y) const;          // psi_n(x, y)
  double cdf(double y) const;          // F_n(y | x)
  double density(double y) const;      // f_n(y | x)
  QuantileResult quantile(double p) const;
  double sigma2(double y) const;       // plug-in variance at (x, y)

  std::span<const double> weights() const { return weights_; }

private:
  double cdf_unchecked(double y) const;
  double survival_unchecked(double y) const;  // 1 - F_n(y | x)

  const Sample& sample_;
  EstimatorConfig cfg_;
  std::vector<double> weights_;
  double weight_sum_ = 0.0;
  double norm_ = 0.0;  // 1 / (n h^d)
  double g_ = 0.0;
  double threshold_ = 0.0;
};

double density_g(const Sample& sample, std::span<const double> x, const EstimatorConfig& cfg);
double joint_density_f(const Sample& sample, std::span<const double> x, double y,
                       const EstimatorConfig& cfg);
double psi(const Sample& sample, std::span<const double> x, double y, const EstimatorConfig& cfg);
double cond_cdf(const Sample& sample, std::span<const double> x, double y,
                const EstimatorConfig& cfg);
double cond_density(const Sample& sample, std::span<const double> x, double y,
                    const EstimatorConfig& cfg);

/// Leftmost root of F_n(. | x) = p by bisection.
QuantileResult cond_quantile(const Sample& sample, std::span<const double> x, double p,
                             const EstimatorConfig& cfg);

/// Minimiser of the check-loss objective: the weighted p-quantile of the
/// responses under weights K((x - X_i)/h), leftmost on flat stretches.
double local_constant_quantile(const Sample& sample, std::span<const double> x, double p,
                               const EstimatorConfig& cfg);

/// Weighted p-quantile (smallest value whose cumulative weight reaches p).
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p);

double plugin_sigma2(const Sample& sample, std::span<const double> x, double y,
                     const EstimatorConfig& cfg);

/// mu_p +- Q_{1-alpha/2} sigma(x, mu_p) / (sqrt(n h^d) f_n(mu_p | x)).
IntervalResult confidence_interval(const Sample& sample, std::span<const double> x, double p,
                                   double alpha, const EstimatorConfig& cfg);

IntervalResult predictive_interval(const Sample& sample, std::span<const double> x, double p1,
                                   double p2, const EstimatorConfig& cfg);

}  // namespace spq
