#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "emucal/config.hpp"
#include "emucal/experiment.hpp"
#include "emucal/param_space.hpp"

namespace emucal::testing {

/// Reference parameter table over a custom set of sites.
inline ParameterSpace space_with_sites(std::vector<Site> sites) {
  const ParameterSpace ref = reference_space();
  return {ref.invariant_specs(), ref.site_templates(), std::move(sites), ref.coupling()};
}

inline std::vector<Site> small_sites(int n_obs) {
  auto sites = reference_sites();
  for (auto& s : sites) s.n_obs = n_obs;
  return sites;
}

/// Desk-sized config: four sites, few observations and regions.
inline Config small_config(int n_obs = 8, int n_regions = 8, int runs = 20) {
  Config c;
  c.space = space_with_sites(small_sites(n_obs));
  c.n_regions = n_regions;
  c.design_runs = runs;
  c.design.exchange_budget = 2000;
  return c;
}

/// Uniform draw inside every range, in natural units.
inline Eigen::VectorXd random_theta(const ParameterSpace& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  Eigen::VectorXd theta(space.dimension());
  for (Index p = 0; p < theta.size(); ++p) theta(p) = denormalize(u(rng), space.spec(p));
  return theta;
}

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Standard error of a chain mean from non-overlapping batch means.
inline double batch_means_se(const Eigen::VectorXd& v, int batches = 50) {
  const Index len = v.size() / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) means(b) = v.segment(b * len, len).mean();
  const double m = means.mean();
  return std::sqrt((means.array() - m).square().sum() / (batches - 1) / batches);
}

/// Orthonormal columns orthogonal to the ones vector, so any U diag(t) V^T
/// built from them is doubly centred.
inline Eigen::MatrixXd centred_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols + 1);
  m.col(0).setOnes();
  m.rightCols(cols) = random_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols + 1);
  return q.rightCols(cols);
}

/// Training runs whose centred blocks are exactly U diag(t(theta)) V^T with t
/// linear in the regression coordinates of FTT and the site's own height, so
/// stepwise fits interpolate every run.
struct InterpolatingCase {
  Config config;
  TrainingResult trained;
};

inline InterpolatingCase interpolating_case(int n_obs = 5, int n_regions = 7, int runs = 20, std::uint64_t seed = 3) {
  InterpolatingCase c;
  c.config = small_config(n_obs, n_regions, runs);
  const ParameterSpace& space = c.config.space;
  std::mt19937_64 rng(seed);
  Domain domain = make_domain(space.sites(), n_regions, seed);
  DesignMatrix design = generate_lhc(runs, space, seed, {500, 1, 100});
  const Index r = std::min(n_obs, n_regions) - 1;
  const Index ftt = *space.ftt_index();
  const Eigen::VectorXd def = space.default_flat();

  std::vector<SensitivityMatrix> out(design.rows.rows());
  for (auto& H : out) {
    H.blocks = row_blocks(domain);
    H.values.resize(domain.n_obs_total(), n_regions);
  }
  for (int s = 0; s < space.n_sites(); ++s) {
    const Eigen::MatrixXd U = centred_orthonormal(n_obs, r, rng);
    const Eigen::MatrixXd V = centred_orthonormal(n_regions, r, rng);
    const Eigen::VectorXd t0 = Eigen::VectorXd::LinSpaced(r, 2.0 * r, 2.0);
    const Eigen::VectorXd b_ftt = random_matrix(r, 1, rng).col(0) * 0.3;
    const Eigen::VectorXd b_z = random_matrix(r, 1, rng).col(0) * 0.2;
    const Index z = space.site_param_index(s, SiteParam::Height);
    Eigen::MatrixXd mean(n_obs, n_regions);
    for (Index i = 0; i < n_obs; ++i)
      for (Index j = 0; j < n_regions; ++j) mean(i, j) = 1.0 + 0.1 * i + 0.05 * j;
    for (Index p = 0; p < design.rows.rows(); ++p) {
      const Eigen::VectorXd theta = design.rows.row(p).transpose();
      const double gf = regression_coordinate(theta(ftt), space.spec(ftt)) - regression_coordinate(def(ftt), space.spec(ftt));
      const double gz = regression_coordinate(theta(z), space.spec(z)) - regression_coordinate(def(z), space.spec(z));
      const Eigen::VectorXd t = t0 + b_ftt * gf + b_z * gz;
      out[p].block(s) = U * t.asDiagonal() * V.transpose() + mean;
      out[p].run_index = static_cast<int>(p);
    }
  }
  c.trained = train_from_runs(c.config, std::move(domain), std::move(design), std::move(out));
  return c;
}

}  // namespace emucal::testing
