#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emucal/param_space.hpp"

namespace emucal {

struct Summary {
  double mean = 0.0;
  double lo = 0.0;  // 5% quantile
  double hi = 0.0;  // 95% quantile

  double width() const { return hi - lo; }
  bool covers(double v) const { return lo <= v && v <= hi; }
};

/// Linear interpolation between order statistics (position (n-1)q).
double quantile(std::vector<double> values, double q);

/// Mean and [5%, 95%] interval. Throws TooFewSamples below 100 samples.
Summary posterior_summary(const Eigen::Ref<const Eigen::VectorXd>& samples);

/// (mean - midpoint) / (b - a). Throws DegenerateInterval.
double scaled_prior_shift(const Interval& prior, double posterior_mean);

/// 100 |A n B| / |A u B|; 0 when disjoint, 100 when identical.
double ci_overlap(const Interval& a, const Interval& b);

/// Per-sample total of scaling x prior flux over a region subset (0-based
/// column indices into x_samples). Throws EmptySubset, DimensionMismatch.
Eigen::VectorXd regional_total_samples(const Eigen::Ref<const Eigen::MatrixXd>& x_samples,
                                       const std::vector<Index>& subset, const Eigen::VectorXd& prior_flux);

Summary regional_total(const Eigen::Ref<const Eigen::MatrixXd>& x_samples, const std::vector<Index>& subset,
                       const Eigen::VectorXd& prior_flux);

}  // namespace emucal
