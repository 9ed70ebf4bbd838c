#include "emucal/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "emucal/errors.hpp"

namespace emucal {

namespace {

constexpr double kLatMin = 49.0, kLatMax = 61.0;
constexpr double kLonMin = -14.0, kLonMax = 4.0;
const double kLonScale = std::cos(54.0 * std::numbers::pi / 180.0);

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double value_or(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterSpace& space, const char* name,
                double fallback) {
  const auto i = space.find(name);
  return i ? theta(*i) : fallback;
}

double ratio_or_one(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterSpace& space, const char* name) {
  const auto i = space.find(name);
  return i ? theta(*i) / space.spec(*i).default_value : 1.0;
}

/// Parameter-driven width and amplitude multipliers shared by every row.
struct GlobalFactors {
  double width = 1.0;
  double amplitude = 1.0;
};

GlobalFactors global_factors(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterSpace& space,
                             const SimulatorSettings& s) {
  GlobalFactors f;
  f.width = std::pow(ratio_or_one(theta, space, "FTT"), s.ftt_width) *
            std::pow(value_or(theta, space, "BLD", 1.0), s.bld_width) *
            std::pow(ratio_or_one(theta, space, "UMM"), s.umm_width);
  for (const char* name : {"BLHS", "BLHU", "LHS", "LHU"})
    f.width *= std::pow(value_or(theta, space, name, 1.0), s.bl_width);
  f.amplitude = std::pow(value_or(theta, space, "MBL", 40.0) / 40.0, -s.mbl_amplitude);
  for (const char* name : {"BLVS", "BLVU", "LVS", "LVU"})
    f.amplitude *= std::pow(value_or(theta, space, name, 1.0), -s.bl_amplitude);
  return f;
}

KernelGeometry geometry(const Eigen::Ref<const Eigen::VectorXd>& theta, const ParameterSpace& space,
                        const Domain& domain, const GlobalFactors& g, int site, int obs, std::uint64_t seed,
                        const SimulatorSettings& s) {
  const Site& info = domain.sites.at(site);
  const double lat = theta(space.site_param_index(site, SiteParam::Latitude));
  const double lon = theta(space.site_param_index(site, SiteParam::Longitude));
  const double height = theta(space.site_param_index(site, SiteParam::Height));

  const double direction = 2.0 * std::numbers::pi * hashed_uniform(seed, site, obs, 0);
  const double distance = s.transport_distance * (0.4 + 1.2 * hashed_uniform(seed, site, obs, 1));
  const double width = s.base_width * (0.7 + 0.6 * hashed_uniform(seed, site, obs, 2));
  const double amplitude = 0.5 + hashed_uniform(seed, site, obs, 3);

  KernelGeometry k;
  k.center_lat = lat + distance * std::sin(direction);
  k.center_lon = lon + distance * std::cos(direction) / kLonScale;
  k.width = width * g.width;
  k.amplitude = amplitude * g.amplitude * std::exp(-(height - info.inlet_height) / s.height_scale);
  return k;
}

}  // namespace

double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix(h ^ (c + 0x85157af5ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double planar_distance_sq(double lat_a, double lon_a, double lat_b, double lon_b) {
  const double dy = lat_a - lat_b;
  const double dx = (lon_a - lon_b) * kLonScale;
  return dx * dx + dy * dy;
}

Index Domain::n_obs_total() const {
  Index n = 0;
  for (const auto& s : sites) n += s.n_obs;
  return n;
}

Index Domain::block_offset(int site) const {
  Index n = 0;
  for (int s = 0; s < site; ++s) n += sites.at(s).n_obs;
  return n;
}

Domain make_domain(std::vector<Site> sites, int n_regions, std::uint64_t seed) {
  if (n_regions < 1) throw ConfigError("n_regions must be positive");
  for (const auto& s : sites)
    if (s.n_obs < 1) throw ConfigError("site " + s.code + " needs n_obs >= 1");
  Domain domain;
  domain.sites = std::move(sites);
  const int rows = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_regions))));
  const int cols = (n_regions + rows - 1) / rows;
  const double dlat = (kLatMax - kLatMin) / rows;
  const double dlon = (kLonMax - kLonMin) / cols;
  domain.region_centroids.resize(n_regions, 2);
  for (int k = 0; k < n_regions; ++k) {
    const int r = k / cols, c = k % cols;
    domain.region_centroids(k, 0) = kLatMin + dlat * (r + 0.1 + 0.8 * hashed_uniform(seed, 7, k, 0));
    domain.region_centroids(k, 1) = kLonMin + dlon * (c + 0.1 + 0.8 * hashed_uniform(seed, 7, k, 1));
  }
  return domain;
}

std::vector<RowBlock> row_blocks(const Domain& domain) {
  std::vector<RowBlock> blocks;
  Index begin = 0;
  for (int s = 0; s < static_cast<int>(domain.sites.size()); ++s) {
    blocks.push_back({s, begin, domain.sites[s].n_obs});
    begin += domain.sites[s].n_obs;
  }
  return blocks;
}

KernelGeometry kernel_geometry(const Eigen::Ref<const Eigen::VectorXd>& theta_flat, const ParameterSpace& space,
                               const Domain& domain, int site, int obs, std::uint64_t seed,
                               const SimulatorSettings& settings) {
  return geometry(theta_flat, space, domain, global_factors(theta_flat, space, settings), site, obs, seed, settings);
}

SensitivityMatrix simulate_H(const ThetaVector& theta, const ParameterSpace& space, const Domain& domain,
                             std::uint64_t seed, const SimulatorSettings& settings, ExecPolicy policy) {
  if (static_cast<Index>(domain.sites.size()) != space.n_sites())
    throw DimensionMismatch("domain and parameter space disagree on site count");
  const Eigen::VectorXd flat = space.flatten(theta);
  const auto check = validate_flat(flat, space);
  if (!check.ok) throw InvalidTheta("out of range: " + check.violations.front());

  SensitivityMatrix H;
  H.blocks = row_blocks(domain);
  H.values.resize(domain.n_obs_total(), domain.n_regions());
  const GlobalFactors g = global_factors(flat, space, settings);

  // Flat row index -> (site, obs) so both paths share one loop body.
  std::vector<std::pair<int, int>> rows;
  rows.reserve(H.values.rows());
  for (const auto& b : H.blocks)
    for (Index o = 0; o < b.rows; ++o) rows.emplace_back(b.site, static_cast<int>(o));

  const auto& centroids = domain.region_centroids;
  auto fill_row = [&](Index i) {
    const auto [site, obs] = rows[i];
    const KernelGeometry k = geometry(flat, space, domain, g, site, obs, seed, settings);
    const double inv = 1.0 / (2.0 * k.width * k.width);
    for (Index r = 0; r < centroids.rows(); ++r)
      H.values(i, r) =
          k.amplitude * std::exp(-planar_distance_sq(centroids(r, 0), centroids(r, 1), k.center_lat, k.center_lon) * inv);
  };

  const Index n_rows = H.values.rows();
  if (policy == ExecPolicy::Serial) {
    for (Index i = 0; i < n_rows; ++i) fill_row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n_rows; ++i) fill_row(i);
  }
  return H;
}

Eigen::VectorXd synthesize_observations(const SensitivityMatrix& H, const Eigen::VectorXd& x_true, double noise_sd,
                                        std::uint64_t seed) {
  if (x_true.size() != H.values.cols()) throw DimensionMismatch("flux vector length differs from region count");
  if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be non-negative");
  Eigen::VectorXd y = H.values * x_true;
  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> eps(0.0, noise_sd);
    for (Index i = 0; i < y.size(); ++i) y(i) += eps(rng);
  }
  return y;
}

}  // namespace emucal
