#include "emucal/dimred.hpp"

#include <cmath>

#include "emucal/errors.hpp"

namespace emucal {

Eigen::MatrixXd MeanSweep::matrix() const {
  Eigen::MatrixXd m = row_means.replicate(1, col_means.size());
  m.rowwise() += col_means.transpose();
  m.array() -= overall;
  return m;
}

MeanSweep compute_mean_sweep(const Eigen::MatrixXd& block) {
  if (block.size() == 0) throw EmptyBlock("cannot sweep an empty block");
  MeanSweep sweep;
  sweep.row_means = block.rowwise().mean();
  sweep.col_means = block.colwise().mean().transpose();
  sweep.overall = block.mean();
  return sweep;
}

SiteBasis svd_default(const Eigen::MatrixXd& centered) {
  if (!centered.allFinite()) throw ConvergenceFailure("non-finite entries in centred block");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SiteBasis basis{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  if (!basis.U.allFinite() || !basis.V.allFinite() || !basis.s.allFinite())
    throw ConvergenceFailure("SVD produced non-finite factors");
  return basis;
}

Index truncation_rank(const Eigen::VectorXd& s, double energy_threshold) {
  const Eigen::VectorXd share = variance_explained(s);
  double cumulative = 0.0;
  for (Index k = 0; k < share.size(); ++k) {
    cumulative += share(k);
    if (cumulative >= energy_threshold) return k + 1;
  }
  return share.size();
}

SiteBasis truncate(const SiteBasis& basis, Index k) {
  return {basis.U.leftCols(k), basis.s.head(k), basis.V.leftCols(k)};
}

Eigen::VectorXd project_run(const Eigen::MatrixXd& centered, const SiteBasis& basis) {
  if (centered.rows() != basis.U.rows() || centered.cols() != basis.V.rows())
    throw DimensionMismatch("centred block does not match basis shape");
  Eigen::VectorXd d(basis.rank());
  for (Index i = 0; i < d.size(); ++i) d(i) = basis.U.col(i).dot(centered * basis.V.col(i));
  return d;
}

Eigen::VectorXd variance_explained(const Eigen::VectorXd& s) {
  const double total = s.squaredNorm();
  if (!(total > 0.0)) throw AllZero("all singular values are zero");
  return s.array().square() / total;
}

Reduction reduce_runs(const std::vector<SensitivityMatrix>& runs, const ReductionOptions& options, ExecPolicy policy) {
  if (runs.empty()) throw DimensionMismatch("no runs to reduce");
  const auto& blocks = runs.front().blocks;
  const int n_sites = static_cast<int>(blocks.size());
  const Index n_runs = static_cast<Index>(runs.size());
  for (const auto& run : runs)
    if (run.values.rows() != runs.front().values.rows() || run.values.cols() != runs.front().values.cols())
      throw DimensionMismatch("runs have different shapes");

  Reduction out;
  out.means.resize(n_sites);
  out.bases.resize(n_sites);
  out.tables.resize(n_sites);
  for (int s = 0; s < n_sites; ++s) {
    const Eigen::MatrixXd block0 = runs.front().block(s);
    out.means[s] = compute_mean_sweep(block0);
    SiteBasis basis = svd_default(block0 - out.means[s].matrix());
    if (options.energy_threshold) basis = truncate(basis, truncation_rank(basis.s, *options.energy_threshold));
    out.bases[s] = std::move(basis);
    out.tables[s].resize(n_runs, out.bases[s].rank());
  }

  const Index jobs = n_sites * n_runs;
  std::vector<Eigen::MatrixXd> hm(n_sites);
  for (int s = 0; s < n_sites; ++s) hm[s] = out.means[s].matrix();
  auto project = [&](Index job) {
    const int s = static_cast<int>(job / n_runs);
    const Index p = job % n_runs;
    const Eigen::MatrixXd centered = runs[p].block(s) - hm[s];
    out.tables[s].row(p) = project_run(centered, out.bases[s]).transpose();
  };
  for_each_index(jobs, policy, project);
  return out;
}

Eigen::VectorXd sample_average_variance_explained(const Eigen::MatrixXd& table) {
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(table.cols());
  Index used = 0;
  for (Index p = 0; p < table.rows(); ++p) {
    const double total = table.row(p).squaredNorm();
    if (!(total > 0.0)) continue;
    avg += table.row(p).transpose().array().square().matrix() / total;
    ++used;
  }
  if (used == 0) throw AllZero("all projected singular values are zero");
  return avg / static_cast<double>(used);
}

}  // namespace emucal
