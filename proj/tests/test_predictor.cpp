#include "doctest.h"

#include "spq/config.hpp"
#include "spq/errors.hpp"
#include "spq/predictor.hpp"
#include "spq/replication.hpp"

#include <array>
#include <cmath>
#include <random>

using spq::GridRegion;
using spq::Site;
using spq::VicinityShape;

namespace {

// 22x22 model field carrying the standard mask, targets held out.
const spq::FieldOnGrid& model_field() {
  static const spq::FieldOnGrid field = [] {
    const spq::ModelSimulator sim(GridRegion(22, 22), spq::default_covariate_spec(),
                                  spq::default_noise_spec());
    return spq::hold_out(sim.simulate(1000, 5000).response, spq::default_targets());
  }();
  return field;
}

spq::FieldOnGrid random_field(int n1, int n2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const GridRegion r(n1, n2);
  std::vector<double> v(r.size());
  for (double& x : v) x = z(rng);
  return spq::FieldOnGrid(r, v, std::vector<bool>(r.size(), true));
}

spq::PredictConfig fixed_h(double h, unsigned threads = 1) {
  spq::PredictConfig c;
  c.bandwidth.mode = spq::BandwidthPlan::Mode::fixed;
  c.bandwidth.h_mean = h;
  c.threads = threads;
  return c;
}

}  // namespace

TEST_CASE("vicinity shapes") {
  const auto small = VicinityShape::small();
  CHECK(small.size() == 4);
  CHECK(VicinityShape::large().size() == 16);
  CHECK(spq::vicinity_sites({5, 5}, small) == std::vector<Site>{{4, 4}, {4, 6}, {6, 4}, {6, 6}});
  CHECK(spq::vicinity_sites({1, 1}, small).front() == Site{0, 0});
  CHECK_THROWS_AS(VicinityShape({}), spq::ArgumentError);
  CHECK_THROWS_AS(VicinityShape({{0, 0}, {1, 1}}), spq::ArgumentError);
  CHECK_THROWS_AS(VicinityShape({{1, 1}, {1, 1}}), spq::ArgumentError);
  CHECK(VicinityShape({{1, 0}, {-1, 0}}).offsets() == std::vector<Site>{{-1, 0}, {1, 0}});
  const std::array<int, 2> steps{1, -1};
  CHECK(VicinityShape::product(steps) == small);
}

TEST_CASE("training set on the standard mask") {
  const auto& field = model_field();
  for (const auto& shape : {VicinityShape::small(), VicinityShape::large()}) {
    const spq::Sample s = spq::build_training(field, shape);
    std::size_t brute = 0;
    std::vector<Site> included;
    for (int i = 1; i <= 22; ++i) {
      for (int j = 1; j <= 22; ++j) {
        if (!field.observed({i, j})) continue;
        bool ok = true;
        for (const Site& o : shape.offsets()) ok = ok && field.observed({i + o.i, j + o.j});
        if (ok) {
          ++brute;
          included.push_back({i, j});
        }
      }
    }
    CHECK(s.size() == brute);
    CHECK(s.dim() == shape.size());
    for (std::size_t k = 0; k < included.size(); k += 17) {
      const auto x = s.covariate(k);
      for (std::size_t c = 0; c < shape.size(); ++c) {
        const Site o = shape.offsets()[c];
        CHECK(x[c] == field.value({included[k].i + o.i, included[k].j + o.j}));
      }
      CHECK(s.response(k) == field.value(included[k]));
    }
  }
  // Corner sites lack neighbours; a fully unobserved field has no pairs.
  const spq::FieldOnGrid none(GridRegion(5, 5), std::vector<double>(25, 0.0), std::vector<bool>(25, false));
  CHECK_THROWS_AS(spq::build_training(none, VicinityShape::small()), spq::ConfigError);
}

TEST_CASE("task validation") {
  const auto& field = model_field();
  spq::PredictionTask t;
  t.targets = {{5, 5}};
  CHECK_NOTHROW(spq::predict(field, t, fixed_h(0.2)));
  t.targets = {{3, 3}};  // observed
  CHECK_THROWS_AS(spq::predict(field, t, fixed_h(0.2)), spq::ConfigError);
  t.targets = {{40, 3}};
  CHECK_THROWS_AS(spq::predict(field, t, fixed_h(0.2)), spq::ConfigError);
  t.targets = {{22, 20}};  // vicinity leaves the observed block
  CHECK_THROWS_AS(spq::predict(field, t, fixed_h(0.2)), spq::ConfigError);
  t.targets = {{5, 5}};
  t.quantiles = {1.2};
  CHECK_THROWS_AS(spq::predict(field, t, fixed_h(0.2)), spq::ConfigError);
}

TEST_CASE("concentrated weight reproduces the matching response") {
  spq::FieldOnGrid f = random_field(10, 10, 77);
  const Site target{5, 5};
  const Site twin{2, 2};
  const VicinityShape shape = VicinityShape::small();
  for (const Site& o : shape.offsets()) {
    f.values[f.region.index({target.i + o.i, target.j + o.j})] =
        f.value({twin.i + o.i, twin.j + o.j});
  }
  f.mask[f.region.index(target)] = false;
  spq::PredictionTask t;
  t.targets = {target};
  t.quantiles = {0.5};
  const double h = 1e-3;
  const auto r = spq::predict(f, t, fixed_h(h));
  REQUIRE(r.rows[0].predictions[0]);
  CHECK(std::abs(*r.rows[0].predictions[0] - f.value(twin)) <= h);
}

TEST_CASE("prediction on the model field") {
  const auto& field = model_field();
  spq::PredictionTask t;
  t.targets = spq::default_targets();
  t.interval.kind = spq::IntervalSpec::Kind::predictive;
  spq::PredictConfig cfg;
  cfg.threads = 1;
  const auto r = spq::predict(field, t, cfg);
  CHECK(r.dimension == 4);
  CHECK(r.rows.size() == 10);
  CHECK(r.bandwidths.for_quantile(0.05) == spq::yu_jones(r.bandwidths.h_mean, 0.05));
  for (const auto& row : r.rows) {
    CHECK(row.truth == field.value(row.site));
    REQUIRE(row.interval);
    REQUIRE(row.predictions[1]);
    CHECK(row.interval->lower <= *row.predictions[1]);
    CHECK(*row.predictions[1] <= row.interval->upper);
    CHECK(row.interval->lower == row.predictions[0].value());
    CHECK(row.interval->upper == row.predictions[2].value());
  }
  REQUIRE(r.mae[1]);
  CHECK(*r.mae[1] < 0.1);

  cfg.threads = 4;
  const auto again = spq::predict(field, t, cfg);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    CHECK(again.rows[k].predictions == r.rows[k].predictions);
    CHECK(again.rows[k].interval->lower == r.rows[k].interval->lower);
  }

  t.vicinity = VicinityShape::large();
  CHECK(spq::predict(field, t, fixed_h(0.5)).dimension == 16);
}

TEST_CASE("asymptotic interval in prediction") {
  spq::PredictionTask t;
  t.targets = spq::default_targets();
  t.interval.kind = spq::IntervalSpec::Kind::asymptotic;
  t.interval.alpha = 1.0;
  const auto r = spq::predict(model_field(), t, fixed_h(0.3));
  for (const auto& row : r.rows) {
    if (!row.interval) continue;
    CHECK(row.interval->lower == row.interval->upper);
    CHECK(row.interval->lower == row.predictions[1].value());
  }
}

TEST_CASE("mean absolute error") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  CHECK(spq::mae(a, a) == 0.0);
  CHECK(spq::mae(std::vector<double>{1, 3}, std::vector<double>{2, 2}) == 1.0);
  CHECK_THROWS_AS(spq::mae(std::vector<double>{1}, std::vector<double>{1, 2}), spq::ArgumentError);
  CHECK_THROWS_AS(spq::mae(std::vector<double>{}, std::vector<double>{}), spq::ArgumentError);

  const std::vector<double> pred{0.1930, -0.2289, 0.1990, -0.5062, 0.2929,
                                 -0.2527, 0.4007, -0.5295, -0.3463, -0.2702};
  const std::vector<double> truth{0.2009, -0.2315, 0.1966, -0.4906, 0.2901,
                                  -0.2535, 0.3941, -0.5177, -0.3217, -0.2843};
  CHECK(std::abs(spq::mae(pred, truth) - 0.0089) <= 5e-4);
}

TEST_CASE("coverage") {
  spq::ExperimentReport r;
  for (int k = 0; k < 4; ++k) {
    spq::TargetRow row;
    row.truth = 1.0;
    row.interval = spq::IntervalResult{0.5, 0.5, 0.9, spq::IntervalKind::predictive};
    r.rows.push_back(row);
  }
  auto c = spq::coverage_report(r);
  CHECK(c.contained == 0);
  CHECK(c.intervals == 4);
  CHECK(c.average_length == 0.0);

  r.rows[0].interval = spq::IntervalResult{0.9, 1.2, 0.9, spq::IntervalKind::predictive};
  r.rows[1].interval = spq::IntervalResult{1.1, 1.3, 0.9, spq::IntervalKind::predictive};
  r.rows[2].interval.reset();
  c = spq::coverage_report(r);
  CHECK(c.contained == 1);
  CHECK(c.intervals == 3);
  CHECK(c.average_length == doctest::Approx(0.5 / 3.0));

  for (auto& row : r.rows) {
    row.truth += 7.25;
    if (row.interval) {
      row.interval->lower += 7.25;
      row.interval->upper += 7.25;
    }
  }
  CHECK(spq::coverage_report(r).contained == 1);
}

TEST_CASE("hold out and median") {
  const auto f = random_field(4, 4, 1);
  const auto h = spq::hold_out(f, {{2, 2}, {3, 4}});
  CHECK(h.observed_count() == 14);
  CHECK(h.values == f.values);
  CHECK(spq::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(spq::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(spq::median({}), spq::ArgumentError);
}
