#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "emucal/exec.hpp"
#include "emucal/param_space.hpp"

namespace emucal {

/// Sites plus the emission regions (centroid latitude, longitude in degrees).
struct Domain {
  std::vector<Site> sites;
  Eigen::MatrixX2d region_centroids;

  Index n_regions() const { return region_centroids.rows(); }
  Index n_obs_total() const;
  /// First row of a site's block.
  Index block_offset(int site) const;
};

/// Region centroids on a jittered grid over the British Isles domain.
/// Throws ConfigError for n_regions < 1.
Domain make_domain(std::vector<Site> sites, int n_regions, std::uint64_t seed);

struct RowBlock {
  int site = 0;
  Index begin = 0;
  Index rows = 0;
};

struct SensitivityMatrix {
  Eigen::MatrixXd values;  // n_obs_total x n_regions
  std::vector<RowBlock> blocks;
  int run_index = 0;

  auto block(int site) const { return values.middleRows(blocks.at(site).begin, blocks.at(site).rows); }
  auto block(int site) { return values.middleRows(blocks.at(site).begin, blocks.at(site).rows); }
};

std::vector<RowBlock> row_blocks(const Domain& domain);

/// Response of the stand-in dispersion model.
///
/// Observation o at site s has a Gaussian footprint over planar distances
/// (longitude scaled by cos 54 deg) to region centroids:
///
///   H[o, r] = a_o * A(theta) * exp(-|c_r - m_o|^2 / (2 (w_o W(theta))^2))
///
/// m_o is the release location displaced along a per-observation transport
/// vector; a_o, w_o and the transport vector are drawn from a counter-based
/// hash of (seed, site, obs). Parameter dependence:
///   width W = (FTT / FTT_0)^ftt_width * BLD^bld_width * (UMM / UMM_0)^umm_width
///             * prod(boundary scale params)^bl_width
///   amplitude A = exp(-(Z - z_0) / height_scale) * (MBL / 40)^(-mbl_amplitude)
///             * prod(boundary vertical params)^(-bl_amplitude)
///   release latitude/longitude translate m_o directly.
/// FTT and release height dominate; the eight boundary-layer scale
/// parameters are deliberately weak.
struct SimulatorSettings {
  double base_width = 2.0;          // degrees
  double transport_distance = 2.5;  // degrees
  double ftt_width = 0.1;
  double bld_width = 0.06;
  double umm_width = 0.05;
  double bl_width = 0.01;
  double height_scale = 3000.0;  // metres
  double mbl_amplitude = 0.08;
  double bl_amplitude = 0.01;
};

/// Per-observation kernel centre (latitude, longitude) and width in degrees.
struct KernelGeometry {
  double center_lat = 0.0;
  double center_lon = 0.0;
  double width = 0.0;
  double amplitude = 0.0;
};

KernelGeometry kernel_geometry(const Eigen::Ref<const Eigen::VectorXd>& theta_flat, const ParameterSpace& space,
                               const Domain& domain, int site, int obs, std::uint64_t seed,
                               const SimulatorSettings& settings = {});

/// Planar distance metric used by the kernel.
double planar_distance_sq(double lat_a, double lon_a, double lat_b, double lon_b);

/// Pure in (theta, domain, seed). Throws InvalidTheta.
SensitivityMatrix simulate_H(const ThetaVector& theta, const ParameterSpace& space, const Domain& domain,
                             std::uint64_t seed, const SimulatorSettings& settings = {},
                             ExecPolicy policy = ExecPolicy::Parallel);

/// y = H x_true + eps, eps iid N(0, noise_sd^2). Throws DimensionMismatch.
Eigen::VectorXd synthesize_observations(const SensitivityMatrix& H, const Eigen::VectorXd& x_true, double noise_sd,
                                        std::uint64_t seed);

/// Uniform in [0, 1) from a stateless hash of the key tuple.
double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace emucal
