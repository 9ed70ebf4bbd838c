#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emucal/design.hpp"
#include "emucal/exec.hpp"
#include "emucal/param_space.hpp"

namespace emucal {

/// Intercept column plus transformed parameters admissible for one site.
struct RegressionDesign {
  Eigen::MatrixXd X;                  // (n_runs+1) x (1 + d_allowed)
  std::vector<std::string> labels;    // "INT", then parameter names
  std::vector<Index> parameters;      // flattened parameter index per non-intercept column

  Index n_columns() const { return X.cols(); }
};

RegressionDesign build_regression_design(const DesignMatrix& design, const ParameterSpace& space, int site);

/// Transformed inputs for one theta in the column order of a site design
/// (leading 1 for the intercept).
Eigen::VectorXd regression_row(const Eigen::Ref<const Eigen::VectorXd>& theta_flat, const ParameterSpace& space,
                               const std::vector<Index>& parameters);

struct OlsFit {
  Eigen::VectorXd coefficients;
  double rss = 0.0;
};

/// Householder QR least squares. Throws DimensionMismatch when
/// rows <= cols and RankDeficient when X lacks full column rank.
OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// n ln(rss / n) + 2k; -infinity when rss == 0. Throws DomainError on bad arguments.
double aic(double rss, Index n, Index k);

/// AIC with the degenerate-fit rule: rss below eps * n * var(y) scores -infinity.
double aic_for_fit(double rss, Index n, Index k, double y_variance);

struct StepwiseOptions {
  /// An addition is accepted only if it lowers AIC by more than delta.
  double delta = 0.0;
};

/// Fitted model for one singular value.
struct SingularValueModel {
  std::vector<bool> selected;          // per design column; [0] is the intercept
  Eigen::VectorXd coefficients;        // per design column; zero where unselected
  std::vector<Index> order;            // design columns in the order they entered
  std::vector<double> aic_path;        // AIC after each accepted step, starting with intercept-only
  double aic = 0.0;
  double rss = 0.0;
  double residual_variance = 0.0;
};

/// Forward selection from the intercept-only model. Each step adds the
/// column with the lowest AIC (ties to the lowest index); stops when no
/// addition lowers AIC by more than delta. Rank-deficient candidates are skipped.
SingularValueModel forward_stepwise(const RegressionDesign& design, const Eigen::VectorXd& y,
                                    const StepwiseOptions& options = {});

struct SiteEmulator {
  std::vector<std::string> labels;
  std::vector<Index> parameters;
  std::vector<SingularValueModel> models;
  Eigen::MatrixXd B;  // r x (1 + d_allowed), rows are coefficient vectors

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& regression_inputs) const { return B * regression_inputs; }
};

struct EmulatorModel {
  std::vector<SiteEmulator> sites;
};

/// Fits every (site, singular value) independently; the parallel path is
/// result-identical to the serial one.
EmulatorModel fit_emulator(const DesignMatrix& design, const ParameterSpace& space,
                           const std::vector<Eigen::MatrixXd>& singular_value_tables,
                           const StepwiseOptions& options = {}, ExecPolicy policy = ExecPolicy::Parallel);

/// Rebuilds B from the per-singular-value coefficients.
void assemble_coefficients(SiteEmulator& site);

/// alpha + g(theta)^T beta for each singular value of a site. Throws InvalidTheta.
Eigen::VectorXd predict_singular_values(const ThetaVector& theta, const EmulatorModel& model, int site,
                                        const ParameterSpace& space);

/// Per-site proportions over design columns (intercept first).
struct SelectionProportions {
  std::vector<std::string> labels;
  Eigen::VectorXd proportions;
};

/// Unweighted when weights is empty; otherwise each singular value
/// contributes its weight share.
SelectionProportions selection_proportions(const SiteEmulator& site, const Eigen::VectorXd& weights = {});

}  // namespace emucal
