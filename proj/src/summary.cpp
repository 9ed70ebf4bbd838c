#include "emucal/summary.hpp"

#include <algorithm>
#include <cmath>

#include "emucal/errors.hpp"

namespace emucal {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw TooFewSamples("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

Summary posterior_summary(const Eigen::Ref<const Eigen::VectorXd>& samples) {
  if (samples.size() < 100) throw TooFewSamples("need at least 100 samples, got " + std::to_string(samples.size()));
  std::vector<double> v(samples.data(), samples.data() + samples.size());
  Summary s;
  s.mean = samples.mean();
  s.lo = quantile(v, 0.05);
  s.hi = quantile(std::move(v), 0.95);
  return s;
}

double scaled_prior_shift(const Interval& prior, double posterior_mean) {
  if (!(prior.hi > prior.lo)) throw DegenerateInterval("prior interval has zero width");
  return (posterior_mean - prior.midpoint()) / prior.width();
}

double ci_overlap(const Interval& a, const Interval& b) {
  if (a.hi < a.lo || b.hi < b.lo) throw DomainError("interval endpoints out of order");
  const double inter = std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
  const double uni = std::max(a.hi, b.hi) - std::min(a.lo, b.lo);
  if (uni == 0.0) return (a.lo == b.lo) ? 100.0 : 0.0;
  return 100.0 * inter / uni;
}

Eigen::VectorXd regional_total_samples(const Eigen::Ref<const Eigen::MatrixXd>& x_samples,
                                       const std::vector<Index>& subset, const Eigen::VectorXd& prior_flux) {
  if (subset.empty()) throw EmptySubset("regional total over no regions");
  if (prior_flux.size() != x_samples.cols()) throw DimensionMismatch("one prior flux per region");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x_samples.rows());
  for (Index r : subset) {
    if (r < 0 || r >= x_samples.cols()) throw DimensionMismatch("region index out of range");
    total += x_samples.col(r) * prior_flux(r);
  }
  return total;
}

Summary regional_total(const Eigen::Ref<const Eigen::MatrixXd>& x_samples, const std::vector<Index>& subset,
                       const Eigen::VectorXd& prior_flux) {
  return posterior_summary(regional_total_samples(x_samples, subset, prior_flux));
}

}  // namespace emucal
