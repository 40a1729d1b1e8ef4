#include "spq/field_sim.hpp"

#include "spq/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

namespace spq {

GridRegion::GridRegion(int n1, int n2) : n1_(n1), n2_(n2) {
  if (n1 < 1 || n2 < 1) {
    throw ArgumentError("grid sides must be positive");
  }
}

std::size_t GridRegion::index(Site s) const {
  if (!contains(s)) {
    throw ArgumentError("site (" + std::to_string(s.i) + "," + std::to_string(s.j) +
                        ") outside " + std::to_string(n1_) + "x" + std::to_string(n2_) +
                        " region");
  }
  return static_cast<std::size_t>(s.i - 1) * n2_ + static_cast<std::size_t>(s.j - 1);
}

Site GridRegion::site(std::size_t index) const {
  return {static_cast<int>(index / n2_) + 1, static_cast<int>(index % n2_) + 1};
}

std::vector<Site> GridRegion::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (int i = 1; i <= n1_; ++i)
    for (int j = 1; j <= n2_; ++j) out.push_back({i, j});
  return out;
}

void GrfSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ArgumentError("GRF variance must be positive and finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ArgumentError("GRF scale must be positive and finite");
  }
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
    throw ArgumentError("GRF jitter must be nonnegative");
  }
  if (!std::isfinite(mean)) throw ArgumentError("GRF mean must be finite");
}

double GrfSpec::covariance(double distance) const {
  const double r = distance / scale;
  return variance * std::exp(-r * r);
}

FieldOnGrid::FieldOnGrid(GridRegion r, std::vector<double> v, std::vector<bool> m)
    : region(r), values(std::move(v)), mask(std::move(m)) {
  if (values.size() != region.size() || mask.size() != region.size()) {
    throw ArgumentError("field values and mask need one entry per site");
  }
}

std::size_t FieldOnGrid::observed_count() const {
  std::size_t n = 0;
  for (bool b : mask) n += b ? 1 : 0;
  return n;
}

std::vector<bool> observation_mask(const GridRegion& region, MaskSpec spec) {
  if (spec.block < 1 || spec.tail < 0) {
    throw ArgumentError("mask block must be positive and tail nonnegative");
  }
  const int need_rows = spec.tail > 0 ? spec.block + 1 : spec.block;
  const int need_cols = std::max(spec.block, spec.tail);
  if (region.n1() < need_rows || region.n2() < need_cols) {
    throw ArgumentError("region " + std::to_string(region.n1()) + "x" +
                        std::to_string(region.n2()) + " too small for the mask (needs " +
                        std::to_string(need_rows) + "x" + std::to_string(need_cols) + ")");
  }
  std::vector<bool> mask(region.size(), false);
  for (int i = 1; i <= spec.block; ++i)
    for (int j = 1; j <= spec.block; ++j) mask[region.index({i, j})] = true;
  for (int j = 1; j <= spec.tail; ++j) mask[region.index({spec.block + 1, j})] = true;
  return mask;
}

std::uint64_t mix_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

NormalStream::NormalStream(std::uint64_t seed) : engine_(make_engine(seed)) {}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  // u1 in (0,1] keeps log finite
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

// Covariance depends only on the lattice offset, so fill from a table to
// keep the matrix exactly symmetric.
Eigen::MatrixXd assemble_covariance(const GrfSpec& spec, const GridRegion& region) {
  const int n1 = region.n1();
  const int n2 = region.n2();
  std::vector<double> table(static_cast<std::size_t>(n1) * n2);
  for (int di = 0; di < n1; ++di)
    for (int dj = 0; dj < n2; ++dj)
      table[static_cast<std::size_t>(di) * n2 + dj] =
          spec.covariance(std::hypot(static_cast<double>(di), static_cast<double>(dj)));

  const auto n = static_cast<Eigen::Index>(region.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const int bi = static_cast<int>(b / n2);
    const int bj = static_cast<int>(b % n2);
    for (Eigen::Index a = 0; a < n; ++a) {
      const int di = std::abs(static_cast<int>(a / n2) - bi);
      const int dj = std::abs(static_cast<int>(a % n2) - bj);
      cov(a, b) = table[static_cast<std::size_t>(di) * n2 + dj];
    }
  }
  return cov;
}

}  // namespace

GrfSampler::GrfSampler(const GrfSpec& spec, const GridRegion& region)
    : spec_(spec), region_(region) {
  spec_.validate();
  const Eigen::MatrixXd cov = assemble_covariance(spec_, region_);
  constexpr std::array<double, 4> kLadder{0.0, 1e-10, 1e-8, 1e-6};
  std::ostringstream tried;
  for (double step : kLadder) {
    const double jitter = spec_.jitter + step * spec_.variance;
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      applied_jitter_ = jitter;
      factor_ = llt.matrixL();
      return;
    }
    tried << (tried.tellp() > 0 ? ", " : "") << jitter;
  }
  throw NumericalError("covariance factorisation failed for jitter ladder [" + tried.str() +
                       "]");
}

FieldOnGrid GrfSampler::draw(std::uint64_t seed) const {
  const auto n = static_cast<Eigen::Index>(region_.size());
  NormalStream stream(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z[k] = stream.next();
  const Eigen::VectorXd x = factor_.triangularView<Eigen::Lower>() * z;
  std::vector<double> values(region_.size());
  for (Eigen::Index k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = spec_.mean + x[k];
  return FieldOnGrid(region_, std::move(values), std::vector<bool>(region_.size(), true));
}

Eigen::MatrixXd GrfSampler::covariance() const { return assemble_covariance(spec_, region_); }

double GrfSampler::factor_residual() const {
  const Eigen::MatrixXd lower = factor_.triangularView<Eigen::Lower>();
  return (lower * lower.transpose() - covariance()).cwiseAbs().maxCoeff();
}

FieldOnGrid simulate_grf(const GrfSpec& spec, const GridRegion& region, std::uint64_t seed) {
  return GrfSampler(spec, region).draw(seed);
}

double local_weight(Site site, const GridRegion& region) {
  if (!region.contains(site)) {
    throw ArgumentError("local_weight: site outside region");
  }
  double sum = 0.0;
  for (int i = 1; i <= region.n1(); ++i)
    for (int j = 1; j <= region.n2(); ++j)
      sum += std::exp(-0.5 * std::hypot(static_cast<double>(site.i - i),
                                        static_cast<double>(site.j - j)));
  return sum / static_cast<double>(region.size());
}

const std::vector<double>& local_weights(const GridRegion& region) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.try_emplace({region.n1(), region.n2()});
  if (inserted) {
    it->second.reserve(region.size());
    for (const Site& s : region.sites()) it->second.push_back(local_weight(s, region));
  }
  return it->second;
}

double model_response(double weight, double x, double z) {
  const double bump = 16.0 * x;
  return weight * (std::sin(2.0 * x) + 2.0 * std::exp(-bump * bump)) + z;
}

GrfSpec default_covariate_spec() { return {0.0, 5.0, 3.0, 0.0}; }
GrfSpec default_noise_spec() { return {0.0, 0.1, 5.0, 0.0}; }

ModelSimulator::ModelSimulator(const GridRegion& region, const GrfSpec& covariate_spec,
                               const GrfSpec& noise_spec, MaskSpec mask)
    : region_(region),
      mask_(mask),
      covariate_(covariate_spec, region),
      noise_(noise_spec, region) {
  observation_mask(region_, mask_);  // validate early
}

ModelField ModelSimulator::simulate(std::uint64_t seed_x, std::uint64_t seed_z) const {
  FieldOnGrid x = covariate_.draw(seed_x);
  const FieldOnGrid z = noise_.draw(seed_z);
  const std::vector<double>& u = local_weights(region_);
  std::vector<double> xi(region_.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    xi[k] = model_response(u[k], x.values[k], z.values[k]);
  }
  std::vector<bool> mask = observation_mask(region_, mask_);
  x.mask = mask;
  return {std::move(x), FieldOnGrid(region_, std::move(xi), std::move(mask))};
}

ModelField simulate_model(const GridRegion& region, std::uint64_t seed_x, std::uint64_t seed_z) {
  return ModelSimulator(region, default_covariate_spec(), default_noise_spec()).simulate(seed_x,
                                                                                        seed_z);
}

}  // namespace spq
