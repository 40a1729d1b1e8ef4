#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace spq {

enum class KernelFamily { gaussian, epanechnikov };

/// Parses "gaussian" | "epanechnikov"; throws ArgumentError otherwise.
KernelFamily parse_kernel_family(std::string_view token);
std::string_view to_string(KernelFamily family);

/// A smoothing kernel on R^dimension, built as a product of 1-D kernels.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  std::size_t dimension = 1;

  /// True when the kernel has compact support (the gaussian is still
  /// accepted everywhere; this is recorded in reports only).
  bool compact_support() const { return family == KernelFamily::epanechnikov; }
};

struct KernelConstants {
  double second_moment_K = 0.0;  // int ||s||^2 K(s) ds
  double l2_norm_K = 0.0;        // int K(z)^2 dz
  double second_moment_w = 0.0;  // int t^2 w(t) dt
};

double eval_kernel_1d(KernelFamily family, double u);

/// K(u) for a product kernel; throws ArgumentError when u.size() != spec.dimension.
double eval_kernel(const KernelSpec& spec, std::span<const double> u);

/// K1(u) = int_{-inf}^u w(t) dt for a 1-D kernel.
double integrated_kernel(const KernelSpec& spec, double u);
double integrated_kernel_1d(KernelFamily family, double u);

/// Half-width of the support per coordinate; +inf for the gaussian.
double support_radius(KernelFamily family);

KernelConstants kernel_constants(const KernelSpec& kernel_x, const KernelSpec& kernel_y);

// Standard normal helpers.
double normal_pdf(double z);
double normal_cdf(double z);
/// Phi^{-1}(p) for p in (0,1).
double normal_quantile(double p);

}  // namespace spq
