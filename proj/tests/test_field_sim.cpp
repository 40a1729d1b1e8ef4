#include "doctest.h"

#include "spq/errors.hpp"
#include "spq/field_sim.hpp"

#include <cmath>
#include <numbers>

using spq::GridRegion;
using spq::Site;

namespace {

const spq::GrfSampler& covariate_sampler_61() {
  static const spq::GrfSampler sampler(spq::default_covariate_spec(), GridRegion(61, 61));
  return sampler;
}

double brute_local_weight(Site s, int n1, int n2) {
  double sum = 0.0;
  for (int i = 1; i <= n1; ++i) {
    for (int j = 1; j <= n2; ++j) {
      const double di = s.i - i;
      const double dj = s.j - j;
      sum += std::exp(-std::sqrt(di * di + dj * dj) / 2.0);
    }
  }
  return sum / (n1 * n2);
}

}  // namespace

TEST_CASE("grid region indexing") {
  const GridRegion r(3, 4);
  CHECK(r.size() == 12);
  CHECK(r.index({1, 1}) == 0);
  CHECK(r.index({1, 4}) == 3);
  CHECK(r.index({3, 4}) == 11);
  CHECK(r.site(5) == Site{2, 2});
  CHECK_THROWS_AS(r.index({0, 1}), spq::ArgumentError);
  CHECK_THROWS_AS(r.index({4, 1}), spq::ArgumentError);
  CHECK_THROWS_AS(GridRegion(0, 3), spq::ArgumentError);
  const auto sites = r.sites();
  for (std::size_t k = 0; k < sites.size(); ++k) CHECK(r.index(sites[k]) == k);
}

TEST_CASE("observation mask") {
  const GridRegion r(61, 61);
  const auto mask = spq::observation_mask(r);
  CHECK(mask[r.index({1, 1})]);
  CHECK(mask[r.index({22, 15})]);
  CHECK_FALSE(mask[r.index({22, 16})]);
  CHECK_FALSE(mask[r.index({61, 61})]);
  CHECK_FALSE(mask[r.index({23, 1})]);

  std::size_t brute = 0;
  for (int i = 1; i <= 61; ++i)
    for (int j = 1; j <= 61; ++j)
      if ((i <= 21 && j <= 21) || (i == 22 && j <= 15)) ++brute;
  std::size_t count = 0;
  for (bool b : mask) count += b ? 1 : 0;
  CHECK(brute == 456);
  CHECK(count == brute);

  CHECK_THROWS_AS(spq::observation_mask(GridRegion(20, 20)), spq::ArgumentError);
  CHECK(spq::observation_mask(GridRegion(22, 21)).size() == 22 * 21);
}

TEST_CASE("GRF spec validation") {
  spq::GrfSpec s{0.0, 0.0, 3.0, 0.0};
  CHECK_THROWS_AS(s.validate(), spq::ArgumentError);
  s.variance = 1.0;
  s.scale = -1.0;
  CHECK_THROWS_AS(s.validate(), spq::ArgumentError);
  s.scale = 2.0;
  s.jitter = -1e-3;
  CHECK_THROWS_AS(s.validate(), spq::ArgumentError);
  s.jitter = 0.0;
  CHECK_NOTHROW(s.validate());
  CHECK(s.covariance(0.0) == 1.0);
  CHECK(s.covariance(2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(spq::GrfSampler(spq::GrfSpec{0.0, 0.0, 3.0, 0.0}, GridRegion(3, 3)),
                  spq::ArgumentError);
}

TEST_CASE("covariance factor reproduces the covariance") {
  const auto& s = covariate_sampler_61();
  const double max_sigma = s.spec().variance;
  CHECK(s.factor_residual() <= 1e-8 * max_sigma + s.applied_jitter());

  const spq::GrfSampler noise(spq::default_noise_spec(), GridRegion(21, 21));
  CHECK(noise.factor_residual() <= 1e-8 * noise.spec().variance + noise.applied_jitter());
}

TEST_CASE("GRF draws: variance and lag-1 correlation bands") {
  // Bands were set from 40 draws: variance in [4.15, 5.96], mean lag-1
  // correlation 0.8951 against exp(-1/9) = 0.8948.
  const auto& s = covariate_sampler_61();
  double lag_sum = 0.0;
  const int draws = 30;
  for (int k = 0; k < draws; ++k) {
    const auto f = s.draw(7000 + static_cast<std::uint64_t>(k));
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= static_cast<double>(f.values.size());
    double var = 0.0;
    double sq = 0.0;
    for (double v : f.values) {
      var += (v - mean) * (v - mean);
      sq += v * v;
    }
    var /= static_cast<double>(f.values.size() - 1);
    CHECK(var >= 3.0);
    CHECK(var <= 7.0);
    double cross = 0.0;
    for (int i = 1; i <= 61; ++i)
      for (int j = 1; j < 61; ++j) cross += f.value({i, j}) * f.value({i, j + 1});
    lag_sum += (cross / (61.0 * 60.0)) / (sq / (61.0 * 61.0));
  }
  CHECK(std::abs(lag_sum / draws - std::exp(-1.0 / 9.0)) <= 0.02);
}

TEST_CASE("GRF draws: per-site mean") {
  const spq::GrfSpec spec{1.5, 2.0, 1.0, 0.0};
  const spq::GrfSampler s(spec, GridRegion(4, 4));
  const int draws = 400;
  std::vector<double> mean(16, 0.0);
  for (int k = 0; k < draws; ++k) {
    const auto f = s.draw(static_cast<std::uint64_t>(k));
    for (std::size_t i = 0; i < 16; ++i) mean[i] += f.values[i] / draws;
  }
  for (double m : mean) CHECK(std::abs(m - 1.5) <= 4.0 * std::sqrt(2.0 / draws));
}

TEST_CASE("GRF determinism") {
  const spq::GrfSampler s(spq::default_noise_spec(), GridRegion(8, 9));
  const auto a = s.draw(42);
  const auto b = s.draw(42);
  const auto c = s.draw(43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.observed_count() == 72);
}

TEST_CASE("normal stream moments") {
  spq::NormalStream z(99);
  double m = 0.0;
  double v = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double x = z.next();
    m += x;
    v += x * x;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(v - 1.0) <= 0.02);
  CHECK(spq::mix_seed(1) != spq::mix_seed(2));
}

TEST_CASE("local weight") {
  CHECK(spq::local_weight({1, 1}, GridRegion(1, 1)) == 1.0);
  CHECK(spq::local_weight({1, 1}, GridRegion(2, 1)) ==
        doctest::Approx((1.0 + std::exp(-0.5)) / 2.0).epsilon(1e-15));
  const double ref = brute_local_weight({31, 31}, 61, 61);
  CHECK(spq::local_weight({31, 31}, GridRegion(61, 61)) == doctest::Approx(ref).epsilon(1e-12));
  CHECK_THROWS_AS(spq::local_weight({0, 3}, GridRegion(5, 5)), spq::ArgumentError);

  const GridRegion r(61, 61);
  const auto& u = spq::local_weights(r);
  REQUIRE(u.size() == r.size());
  for (int i = 1; i <= 61; i += 5) {
    for (int j = 1; j <= 61; j += 3) {
      CHECK(u[r.index({i, j})] == doctest::Approx(u[r.index({62 - i, j})]).epsilon(1e-13));
      CHECK(u[r.index({i, j})] == doctest::Approx(u[r.index({j, i})]).epsilon(1e-13));
    }
  }
  CHECK(u[r.index({5, 7})] == doctest::Approx(brute_local_weight({5, 7}, 61, 61)).epsilon(1e-12));
}

TEST_CASE("model response") {
  CHECK(spq::model_response(1.0, 0.0, 0.0) == 2.0);
  const double x = std::numbers::pi / 4.0;
  CHECK(spq::model_response(1.0, x, 0.0) ==
        doctest::Approx(1.0 + 2.0 * std::exp(-16.0 * std::numbers::pi * std::numbers::pi)).epsilon(1e-15));
  CHECK(spq::model_response(0.5, 0.0, 0.25) == 1.25);
}

TEST_CASE("model simulation") {
  const GridRegion r(22, 22);
  const spq::ModelSimulator sim(r, spq::default_covariate_spec(), spq::default_noise_spec());
  const auto a = sim.simulate(1, 2);
  const auto b = sim.simulate(1, 2);
  CHECK(a.response.values == b.response.values);
  CHECK(a.covariate.values == b.covariate.values);
  CHECK(a.response.observed_count() == 456);
  CHECK(a.response.mask == spq::observation_mask(r));

  // Same covariate seed, different noise seed: X unchanged, xi changes.
  const auto c = sim.simulate(1, 3);
  CHECK(c.covariate.values == a.covariate.values);
  CHECK(c.response.values != a.response.values);

  const auto& u = spq::local_weights(r);
  const auto z = sim.noise_sampler().draw(2);
  for (std::size_t k = 0; k < r.size(); k += 37) {
    CHECK(a.response.values[k] == spq::model_response(u[k], a.covariate.values[k], z.values[k]));
  }
}

TEST_CASE("field container") {
  const GridRegion r(2, 2);
  CHECK_THROWS_AS(spq::FieldOnGrid(r, {1.0, 2.0}, {true, true, true, true}), spq::ArgumentError);
  const spq::FieldOnGrid f(r, {1.0, 2.0, 3.0, 4.0}, {true, false, true, false});
  CHECK(f.value({2, 1}) == 3.0);
  CHECK(f.observed({1, 1}));
  CHECK_FALSE(f.observed({1, 2}));
  CHECK_FALSE(f.observed({3, 3}));
  CHECK(f.observed_count() == 2);
}
