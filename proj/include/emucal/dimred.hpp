#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "emucal/exec.hpp"
#include "emucal/param_space.hpp"
#include "emucal/simulator.hpp"

namespace emucal {

/// Additive two-way fit of a site block: H_m[i,j] = row_i + col_j - overall.
struct MeanSweep {
  Eigen::VectorXd row_means;
  Eigen::VectorXd col_means;
  double overall = 0.0;

  Eigen::MatrixXd matrix() const;
};

/// Throws EmptyBlock.
MeanSweep compute_mean_sweep(const Eigen::MatrixXd& block);

/// Default-run SVD of one centred site block, singular values descending.
struct SiteBasis {
  Eigen::MatrixXd U;  // n_obs x r
  Eigen::VectorXd s;  // r
  Eigen::MatrixXd V;  // n_regions x r

  Index rank() const { return s.size(); }
};

/// Thin SVD; r = min(rows, cols). Throws ConvergenceFailure on non-finite input/output.
SiteBasis svd_default(const Eigen::MatrixXd& centered);

/// Smallest k whose leading variance share reaches the threshold.
Index truncation_rank(const Eigen::VectorXd& s, double energy_threshold);
SiteBasis truncate(const SiteBasis& basis, Index k);

/// d_i = u_i^T Hc v_i (the diagonal of U^T Hc V). Throws DimensionMismatch.
Eigen::VectorXd project_run(const Eigen::MatrixXd& centered, const SiteBasis& basis);

/// s_i^2 / sum_j s_j^2. Throws AllZero.
Eigen::VectorXd variance_explained(const Eigen::VectorXd& s);

/// Reduced training set: per site the mean sweep, basis and
/// (n_runs+1) x r table of projected singular values (row 0 = default).
struct Reduction {
  std::vector<MeanSweep> means;
  std::vector<SiteBasis> bases;
  std::vector<Eigen::MatrixXd> tables;
};

struct ReductionOptions {
  /// Keep all singular values when unset.
  std::optional<double> energy_threshold;
};

/// runs[0] must be the default run. Per-site, per-run projections are
/// independent; the parallel path splits them across threads.
Reduction reduce_runs(const std::vector<SensitivityMatrix>& runs, const ReductionOptions& options = {},
                      ExecPolicy policy = ExecPolicy::Parallel);

/// Sample-averaged share of variation carried by each singular value:
/// mean over runs of d_pi^2 / sum_j d_pj^2.
Eigen::VectorXd sample_average_variance_explained(const Eigen::MatrixXd& table);

}  // namespace emucal
