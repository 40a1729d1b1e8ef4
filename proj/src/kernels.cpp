#include "spq/kernels.hpp"

#include "spq/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace spq {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2 pi)

double epanechnikov(double u) {
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

void require_dimension(const KernelSpec& spec, std::size_t n) {
  if (spec.dimension == 0) {
    throw ArgumentError("kernel dimension must be positive");
  }
  if (n != spec.dimension) {
    throw ArgumentError("kernel argument has dimension " + std::to_string(n) +
                        ", expected " + std::to_string(spec.dimension));
  }
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view token) {
  if (token == "gaussian") return KernelFamily::gaussian;
  if (token == "epanechnikov") return KernelFamily::epanechnikov;
  throw ArgumentError("unknown kernel family '" + std::string(token) +
                      "' (expected gaussian|epanechnikov)");
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::epanechnikov: return "epanechnikov";
  }
  return "unknown";
}

double eval_kernel_1d(KernelFamily family, double u) {
  switch (family) {
    case KernelFamily::gaussian: return kInvSqrt2Pi * std::exp(-0.5 * u * u);
    case KernelFamily::epanechnikov: return epanechnikov(u);
  }
  return 0.0;
}

double eval_kernel(const KernelSpec& spec, std::span<const double> u) {
  require_dimension(spec, u.size());
  if (spec.family == KernelFamily::gaussian) {
    // prod phi(u_k) = (2 pi)^{-d/2} exp(-|u|^2 / 2), one exp instead of d
    double sq = 0.0;
    for (double v : u) sq += v * v;
    return std::pow(kInvSqrt2Pi, static_cast<double>(u.size())) * std::exp(-0.5 * sq);
  }
  double prod = 1.0;
  for (double v : u) {
    if (std::abs(v) > 1.0) return 0.0;
    prod *= 0.75 * (1.0 - v * v);
  }
  return prod;
}

double integrated_kernel_1d(KernelFamily family, double u) {
  switch (family) {
    case KernelFamily::gaussian: return normal_cdf(u);
    case KernelFamily::epanechnikov:
      if (u <= -1.0) return 0.0;
      if (u >= 1.0) return 1.0;
      return 0.5 + (0.75 * u - 0.25 * u * u * u);
  }
  return 0.0;
}

double integrated_kernel(const KernelSpec& spec, double u) {
  require_dimension(spec, 1);
  return integrated_kernel_1d(spec.family, u);
}

double support_radius(KernelFamily family) {
  return family == KernelFamily::epanechnikov ? 1.0
                                              : std::numeric_limits<double>::infinity();
}

KernelConstants kernel_constants(const KernelSpec& kernel_x, const KernelSpec& kernel_y) {
  if (kernel_x.dimension == 0 || kernel_y.dimension != 1) {
    throw ArgumentError("kernel_constants: K needs dimension >= 1 and w dimension 1");
  }
  // Per-coordinate moments; the product form gives sum (second moment)
  // and power (squared L2 norm) over coordinates.
  auto second_moment = [](KernelFamily f) {
    return f == KernelFamily::gaussian ? 1.0 : 0.2;
  };
  auto l2_norm = [](KernelFamily f) {
    return f == KernelFamily::gaussian ? 0.5 / std::sqrt(std::numbers::pi) : 0.6;
  };
  const auto d = static_cast<double>(kernel_x.dimension);
  KernelConstants c;
  c.second_moment_K = d * second_moment(kernel_x.family);
  c.l2_norm_K = std::pow(l2_norm(kernel_x.family), d);
  c.second_moment_w = second_moment(kernel_y.family);
  return c;
}

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ArgumentError("normal_quantile: p must lie in (0,1)");
  }
  if (p == 0.5) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace spq
