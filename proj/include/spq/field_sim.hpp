#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace spq {

/// Integer lattice site (i, j), 1-based as in the rectangular region I_n.
struct Site {
  int i = 0;
  int j = 0;
  friend auto operator<=>(const Site&, const Site&) = default;
  Site operator+(const Site& o) const { return {i + o.i, j + o.j}; }
};

/// Rectangle {1..n1} x {1..n2}; sites are enumerated row-major.
class GridRegion {
public:
  GridRegion(int n1, int n2);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  std::size_t size() const { return static_cast<std::size_t>(n1_) * n2_; }

  bool contains(Site s) const { return s.i >= 1 && s.i <= n1_ && s.j >= 1 && s.j <= n2_; }
  /// Row-major index; throws ArgumentError for sites outside the region.
  std::size_t index(Site s) const;
  Site site(std::size_t index) const;
  std::vector<Site> sites() const;

  friend bool operator==(const GridRegion&, const GridRegion&) = default;

private:
  int n1_;
  int n2_;
};

/// GRF(m, sigma^2, s) with covariance sigma^2 exp(-(|h|/s)^2).
struct GrfSpec {
  double mean = 0.0;
  double variance = 1.0;
  double scale = 1.0;
  double jitter = 0.0;  // added to the covariance diagonal before factoring

  void validate() const;
  double covariance(double distance) const;
};

/// Scalar values on every site of a region plus an observation mask.
struct FieldOnGrid {
  GridRegion region;
  std::vector<double> values;
  std::vector<bool> mask;  // true = observed

  FieldOnGrid(GridRegion r, std::vector<double> v, std::vector<bool> m);

  double value(Site s) const { return values[region.index(s)]; }
  bool observed(Site s) const { return region.contains(s) && mask[region.index(s)]; }
  std::size_t observed_count() const;
};

/// Observed block {1..block}^2 plus the partial row {(block+1, j): 1 <= j <= tail}.
struct MaskSpec {
  int block = 21;
  int tail = 15;
};

std::vector<bool> observation_mask(const GridRegion& region, MaskSpec spec = {});

/// splitmix64 finaliser, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed);

/// Standard normal stream: mt19937_64 + Box-Muller. Output is fully
/// determined by the seed on every platform.
class NormalStream {
public:
  explicit NormalStream(std::uint64_t seed);
  double next();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Holds the lower-triangular factor of a GRF covariance on a region and
/// draws fields from it. Factorisation escalates the diagonal jitter through
/// {0, 1e-10, 1e-8, 1e-6} x variance until it succeeds.
class GrfSampler {
public:
  GrfSampler(const GrfSpec& spec, const GridRegion& region);

  /// One draw m + L z; every site is marked observed.
  FieldOnGrid draw(std::uint64_t seed) const;

  const GrfSpec& spec() const { return spec_; }
  const GridRegion& region() const { return region_; }
  /// Total diagonal jitter that made the factorisation succeed.
  double applied_jitter() const { return applied_jitter_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

  /// Covariance without jitter.
  Eigen::MatrixXd covariance() const;
  /// max |L L^T - Sigma| (O(n^3), for diagnostics).
  double factor_residual() const;

private:
  GrfSpec spec_;
  GridRegion region_;
  double applied_jitter_ = 0.0;
  Eigen::MatrixXd factor_;
};

FieldOnGrid simulate_grf(const GrfSpec& spec, const GridRegion& region, std::uint64_t seed);

/// U_i = (1/n) sum_{j in region} exp(-|i - j| / 2).
double local_weight(Site site, const GridRegion& region);
/// local_weight at every site, row-major; cached per region size.
const std::vector<double>& local_weights(const GridRegion& region);

/// U (sin(2x) + 2 exp(-(16x)^2)) + z
double model_response(double weight, double x, double z);

struct ModelField {
  FieldOnGrid covariate;  // X
  FieldOnGrid response;   // xi, carries the observation mask
};

GrfSpec default_covariate_spec();  // GRF(0, 5, 3)
GrfSpec default_noise_spec();      // GRF(0, 0.1, 5)

/// Simulator for the spatial response model; factors both covariances once.
class ModelSimulator {
public:
  ModelSimulator(const GridRegion& region, const GrfSpec& covariate_spec,
                 const GrfSpec& noise_spec, MaskSpec mask = {});

  ModelField simulate(std::uint64_t seed_x, std::uint64_t seed_z) const;

  const GridRegion& region() const { return region_; }
  const GrfSampler& covariate_sampler() const { return covariate_; }
  const GrfSampler& noise_sampler() const { return noise_; }

private:
  GridRegion region_;
  MaskSpec mask_;
  GrfSampler covariate_;
  GrfSampler noise_;
};

ModelField simulate_model(const GridRegion& region, std::uint64_t seed_x,
                          std::uint64_t seed_z);

}  // namespace spq
