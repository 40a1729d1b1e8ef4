#include "doctest.h"
#include "oracles.hpp"

#include "spq/errors.hpp"
#include "spq/kernels.hpp"

#include <array>
#include <cmath>
#include <numbers>

using spq::KernelFamily;
using spq::KernelSpec;

TEST_CASE("kernel tokens") {
  CHECK(spq::parse_kernel_family("gaussian") == KernelFamily::gaussian);
  CHECK(spq::parse_kernel_family("epanechnikov") == KernelFamily::epanechnikov);
  CHECK(spq::to_string(KernelFamily::epanechnikov) == "epanechnikov");
  CHECK_THROWS_AS(spq::parse_kernel_family("uniform"), spq::ArgumentError);
  CHECK_THROWS_AS(spq::parse_kernel_family("Gaussian"), spq::ArgumentError);
}

TEST_CASE("one-dimensional kernel values") {
  CHECK(spq::eval_kernel_1d(KernelFamily::epanechnikov, 0.0) == 0.75);
  CHECK(spq::eval_kernel_1d(KernelFamily::epanechnikov, 2.0) == 0.0);
  CHECK(spq::eval_kernel_1d(KernelFamily::epanechnikov, -1.0) == 0.0);

  // Peak of exp(-u^2/2) after normalising its integral by quadrature.
  const double mass = oracle::simpson([](double u) { return std::exp(-0.5 * u * u); }, -14, 14, 200000);
  CHECK(spq::eval_kernel_1d(KernelFamily::gaussian, 0.0) == doctest::Approx(1.0 / mass).epsilon(1e-12));
  CHECK(spq::eval_kernel_1d(KernelFamily::gaussian, 0.0) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-15));
}

TEST_CASE("kernels integrate to one") {
  for (KernelFamily f : {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
    const double r = f == KernelFamily::gaussian ? 14.0 : 1.0;
    const double total = oracle::simpson([f](double u) { return spq::eval_kernel_1d(f, u); }, -r, r, 200000);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("product kernel") {
  const KernelSpec k{KernelFamily::gaussian, 3};
  const std::array<double, 3> u{0.3, -1.2, 2.0};
  double product = 1.0;
  for (double v : u) product *= oracle::k1(KernelFamily::gaussian, v);
  CHECK(oracle::rel_close(spq::eval_kernel(k, u), product, 1e-14));

  const KernelSpec e{KernelFamily::epanechnikov, 2};
  const std::array<double, 2> inside{0.5, -0.5};
  const std::array<double, 2> outside{0.5, 1.5};
  CHECK(spq::eval_kernel(e, inside) == doctest::Approx(0.75 * 0.75 * 0.75 * 0.75));
  CHECK(spq::eval_kernel(e, outside) == 0.0);

  const std::array<double, 2> wrong{0.0, 0.0};
  CHECK_THROWS_AS(spq::eval_kernel(k, wrong), spq::ArgumentError);
}

TEST_CASE("integrated kernel") {
  const KernelSpec w{KernelFamily::epanechnikov, 1};
  CHECK(spq::integrated_kernel(w, 0.0) == 0.5);
  CHECK(spq::integrated_kernel(w, -1.0) == 0.0);
  CHECK(spq::integrated_kernel(w, 1.0) == 1.0);
  CHECK(spq::integrated_kernel(w, -7.0) == 0.0);
  CHECK(spq::integrated_kernel(w, 7.0) == 1.0);

  // Quadrature of 0.75 (1 - t^2) over [-1, 0.5]; 0.84375 in closed form.
  const double q = oracle::simpson([](double t) { return 0.75 * (1.0 - t * t); }, -1.0, 0.5, 1000);
  CHECK(spq::integrated_kernel(w, 0.5) == doctest::Approx(q).epsilon(1e-13));
  CHECK(spq::integrated_kernel(w, 0.5) == doctest::Approx(0.84375).epsilon(1e-15));

  for (KernelFamily f : {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
    const double lo = f == KernelFamily::gaussian ? -14.0 : -1.0;
    for (double u : {-2.5, -0.7, 0.0, 0.2, 0.9, 1.7}) {
      const double ref = u <= lo ? 0.0
                                 : oracle::simpson([f](double t) { return oracle::k1(f, t); }, lo,
                                                   std::min(u, -lo), 20000);
      CHECK(spq::integrated_kernel_1d(f, u) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("integrated kernel symmetry and monotonicity") {
  for (KernelFamily f : {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
    double prev = 0.0;
    for (int k = -4000; k <= 4000; ++k) {
      const double u = k * 1e-3;
      const double v = spq::integrated_kernel_1d(f, u);
      CHECK(std::abs(v + spq::integrated_kernel_1d(f, -u) - 1.0) <= 1e-12);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("kernel constants against quadrature") {
  for (KernelFamily kx : {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
    for (std::size_t d : {1u, 2u, 4u}) {
      const auto c = spq::kernel_constants({kx, d}, {KernelFamily::epanechnikov, 1});
      const double l2 = std::pow(oracle::l2_norm_1d(kx), static_cast<double>(d));
      CHECK(oracle::rel_close(c.l2_norm_K, l2, 1e-8));
      CHECK(oracle::rel_close(c.second_moment_K, static_cast<double>(d) * oracle::second_moment_1d(kx), 1e-8));
      CHECK(oracle::rel_close(c.second_moment_w, oracle::second_moment_1d(KernelFamily::epanechnikov), 1e-8));
    }
  }
  const auto e = spq::kernel_constants({KernelFamily::epanechnikov, 1}, {KernelFamily::epanechnikov, 1});
  CHECK(e.second_moment_w == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(e.l2_norm_K == doctest::Approx(0.6).epsilon(1e-15));
  const auto g3 = spq::kernel_constants({KernelFamily::gaussian, 3}, {KernelFamily::gaussian, 1});
  const auto g1 = spq::kernel_constants({KernelFamily::gaussian, 1}, {KernelFamily::gaussian, 1});
  CHECK(oracle::rel_close(g3.l2_norm_K, std::pow(g1.l2_norm_K, 3), 1e-14));
}

TEST_CASE("normal helpers") {
  CHECK(spq::normal_quantile(0.5) == 0.0);
  for (double p : {1e-6, 0.01, 0.05, 0.25, 0.6, 0.95, 0.999}) {
    CHECK(std::abs(spq::normal_quantile(p) - oracle::normal_quantile(p)) <= 1e-12);
    CHECK(std::abs(spq::normal_quantile(p) + spq::normal_quantile(1.0 - p)) <= 1e-9);
    CHECK(spq::normal_cdf(spq::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
  }
  CHECK(spq::normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK_THROWS_AS(spq::normal_quantile(0.0), spq::ArgumentError);
  CHECK_THROWS_AS(spq::normal_quantile(1.0), spq::ArgumentError);
  CHECK(spq::support_radius(KernelFamily::epanechnikov) == 1.0);
  CHECK(std::isinf(spq::support_radius(KernelFamily::gaussian)));
}
