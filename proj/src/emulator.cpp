#include "emucal/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emucal/errors.hpp"

namespace emucal {

RegressionDesign build_regression_design(const DesignMatrix& design, const ParameterSpace& space, int site) {
  RegressionDesign out;
  out.parameters = space.admissible_for_site(site);
  out.labels.push_back("INT");
  for (Index p : out.parameters) out.labels.push_back(space.spec(p).name);
  out.X.resize(design.rows.rows(), 1 + static_cast<Index>(out.parameters.size()));
  for (Index i = 0; i < design.rows.rows(); ++i)
    out.X.row(i) = regression_row(design.rows.row(i).transpose(), space, out.parameters).transpose();
  if (!out.X.allFinite()) throw DomainError("non-finite regression inputs");
  return out;
}

Eigen::VectorXd regression_row(const Eigen::Ref<const Eigen::VectorXd>& theta_flat, const ParameterSpace& space,
                               const std::vector<Index>& parameters) {
  Eigen::VectorXd row(1 + static_cast<Index>(parameters.size()));
  row(0) = 1.0;
  for (std::size_t j = 0; j < parameters.size(); ++j)
    row(j + 1) = regression_coordinate(theta_flat(parameters[j]), space.spec(parameters[j]));
  return row;
}

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw DimensionMismatch("X and y row counts differ");
  if (X.rows() <= X.cols()) throw DimensionMismatch("need more rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw RankDeficient("design has rank " + std::to_string(qr.rank()));
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.rss = (y - X * fit.coefficients).squaredNorm();
  return fit;
}

double aic(double rss, Index n, Index k) {
  if (n <= 0 || k < 1 || !(rss >= 0.0)) throw DomainError("aic needs n > 0, k >= 1, rss >= 0");
  if (rss == 0.0) return -std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  return nd * std::log(rss / nd) + 2.0 * static_cast<double>(k);
}

double aic_for_fit(double rss, Index n, Index k, double y_variance) {
  if (rss < std::numeric_limits<double>::epsilon() * static_cast<double>(n) * y_variance)
    return -std::numeric_limits<double>::infinity();
  return aic(rss, n, k);
}

namespace {

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& X, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = X.col(cols[j]);
  return out;
}

}  // namespace

SingularValueModel forward_stepwise(const RegressionDesign& design, const Eigen::VectorXd& y,
                                    const StepwiseOptions& options) {
  const Eigen::MatrixXd& X = design.X;
  const Index n = X.rows();
  if (y.size() != n) throw DimensionMismatch("response length differs from design rows");
  const double y_var = (y.array() - y.mean()).square().mean();

  std::vector<Index> active{0};
  OlsFit fit = fit_ols(columns_of(X, active), y);
  double current = aic_for_fit(fit.rss, n, 1, y_var);

  SingularValueModel model;
  model.aic_path.push_back(current);
  while (static_cast<Index>(active.size()) < X.cols() && static_cast<Index>(active.size()) + 1 < n) {
    Index best_col = -1;
    double best_aic = std::numeric_limits<double>::infinity();
    OlsFit best_fit;
    for (Index j = 1; j < X.cols(); ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      auto trial = active;
      trial.push_back(j);
      OlsFit candidate;
      try {
        candidate = fit_ols(columns_of(X, trial), y);
      } catch (const RankDeficient&) {
        continue;
      }
      const double a = aic_for_fit(candidate.rss, n, static_cast<Index>(trial.size()), y_var);
      if (best_col < 0 || a < best_aic) {
        best_col = j;
        best_aic = a;
        best_fit = std::move(candidate);
      }
    }
    if (best_col < 0 || !(best_aic < current - options.delta)) break;
    active.push_back(best_col);
    fit = std::move(best_fit);
    current = best_aic;
    model.aic_path.push_back(current);
  }

  model.selected.assign(X.cols(), false);
  model.coefficients = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t j = 0; j < active.size(); ++j) {
    model.selected[active[j]] = true;
    model.coefficients(active[j]) = fit.coefficients(j);
  }
  model.order.assign(active.begin() + 1, active.end());
  model.aic = current;
  model.rss = fit.rss;
  const Index dof = n - static_cast<Index>(active.size());
  model.residual_variance = dof > 0 ? fit.rss / static_cast<double>(dof) : 0.0;
  return model;
}

void assemble_coefficients(SiteEmulator& site) {
  const Index cols = 1 + static_cast<Index>(site.parameters.size());
  site.B.resize(static_cast<Index>(site.models.size()), cols);
  for (std::size_t i = 0; i < site.models.size(); ++i) {
    if (site.models[i].coefficients.size() != cols) throw DimensionMismatch("coefficient vector length");
    site.B.row(i) = site.models[i].coefficients.transpose();
  }
}

EmulatorModel fit_emulator(const DesignMatrix& design, const ParameterSpace& space,
                           const std::vector<Eigen::MatrixXd>& tables, const StepwiseOptions& options,
                           ExecPolicy policy) {
  const int n_sites = static_cast<int>(space.n_sites());
  if (static_cast<int>(tables.size()) != n_sites) throw DimensionMismatch("one singular value table per site");
  EmulatorModel model;
  model.sites.resize(n_sites);
  std::vector<RegressionDesign> designs;
  std::vector<std::pair<int, Index>> jobs;
  for (int s = 0; s < n_sites; ++s) {
    if (tables[s].rows() != design.rows.rows()) throw DimensionMismatch("table rows differ from design runs");
    designs.push_back(build_regression_design(design, space, s));
    model.sites[s].labels = designs.back().labels;
    model.sites[s].parameters = designs.back().parameters;
    model.sites[s].models.resize(tables[s].cols());
    for (Index i = 0; i < tables[s].cols(); ++i) jobs.emplace_back(s, i);
  }
  auto fit_one = [&](std::size_t job) {
    const auto [s, i] = jobs[job];
    model.sites[s].models[i] = forward_stepwise(designs[s], tables[s].col(i), options);
  };
  for_each_index(static_cast<std::ptrdiff_t>(jobs.size()), policy, [&](std::ptrdiff_t j) { fit_one(static_cast<std::size_t>(j)); });
  for (auto& site : model.sites) assemble_coefficients(site);
  return model;
}

Eigen::VectorXd predict_singular_values(const ThetaVector& theta, const EmulatorModel& model, int site,
                                        const ParameterSpace& space) {
  const Eigen::VectorXd flat = space.flatten(theta);
  const auto check = validate_flat(flat, space);
  if (!check.ok) throw InvalidTheta("out of range: " + check.violations.front());
  const auto& emu = model.sites.at(site);
  return emu.predict(regression_row(flat, space, emu.parameters));
}

SelectionProportions selection_proportions(const SiteEmulator& site, const Eigen::VectorXd& weights) {
  const Index r = static_cast<Index>(site.models.size());
  const Index cols = static_cast<Index>(site.labels.size());
  if (weights.size() != 0 && weights.size() != r) throw DimensionMismatch("one weight per singular value");
  SelectionProportions out;
  out.labels = site.labels;
  out.proportions = Eigen::VectorXd::Zero(cols);
  double total = 0.0;
  for (Index i = 0; i < r; ++i) {
    const double w = weights.size() ? weights(i) : 1.0;
    total += w;
    for (Index j = 0; j < cols; ++j)
      if (site.models[i].selected[j]) out.proportions(j) += w;
  }
  if (total > 0.0) out.proportions /= total;
  return out;
}

}  // namespace emucal
