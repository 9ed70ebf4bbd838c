#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emucal/exec.hpp"
#include "emucal/param_space.hpp"
#include "emucal/reconstruct.hpp"

namespace emucal {

struct Priors {
  double x_mean = 1.0;  // prior flux scaling
  double x_sd = 0.5;
  Interval sigma_y{1e-3, 10.0};
};

struct InversionConfig {
  long n_iter = 100000;
  double burn_in = 0.5;
  int thin = 10;
  int batch_size = 500;
  double accept_lo = 0.2;
  double accept_hi = 0.4;
  double multiplier = 1.5;
  Priors priors;
  std::uint64_t seed = 1;
  long audit_every = 1000;

  double x_step = 0.1;
  double theta_step = 0.5;   // in transformed coordinates
  double sigma_step = 0.05;  // relative to the initial sigma
  /// Initial sigma_y; when unset, the residual sd at the prior mean flux
  /// clamped into the prior range.
  std::optional<double> sigma_init;
  bool sample_sigma = true;

  /// Throws ConfigError unless 0 < burn_in < 1, lo < hi, multiplier > 1.
  void check() const;
  long burn_in_sweeps() const { return static_cast<long>(static_cast<double>(n_iter) * burn_in); }
  long stored_samples() const;
};

/// Observations plus the observation operator. With `artifacts` set the
/// operator is rebuilt from theta; otherwise `fixed_H` is used and theta is
/// frozen.
struct InversionProblem {
  Eigen::VectorXd y;
  Eigen::MatrixXd fixed_H;
  const EmulatorArtifacts* artifacts = nullptr;

  bool samples_theta() const { return artifacts != nullptr; }
  Index n_regions() const;
};

/// Sum of Gaussian log densities of y about Hx. Throws NonPositiveSigma, DimensionMismatch.
double log_likelihood(const Eigen::VectorXd& y, const Eigen::MatrixXd& H, const Eigen::VectorXd& x, double sigma_y);

/// Metropolis-Hastings rule for a symmetric proposal: accept iff u < exp(log_ratio).
bool mh_accept(double log_ratio, double uniform);

/// Scales each proposal sd by the batch acceptance rate: above hi -> * multiplier,
/// below lo -> / multiplier. Counters are reset by the caller.
Eigen::VectorXd adaptive_batch_tune(const Eigen::VectorXi& accepted, int batch_size, const Eigen::VectorXd& sd,
                                    const InversionConfig& config);

/// Componentwise random-walk MH over (x, theta, sigma_y). Components are
/// ordered x_1..x_R, then theta (when sampled), then sigma_y (when sampled).
/// Theta components move in transformed coordinates, so the cached log
/// posterior includes the log-Jacobian of the transformation.
class Sampler {
 public:
  Sampler(const InversionProblem& problem, const InversionConfig& config);

  Index n_components() const { return static_cast<Index>(names_.size()); }
  const std::vector<std::string>& component_names() const { return names_; }

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  double sigma() const { return sigma_; }
  double log_posterior() const { return log_post_; }
  const Eigen::VectorXd& proposal_sd() const { return sd_; }
  const Eigen::VectorXi& batch_accepts() const { return accepts_; }

  /// One random-walk proposal for component c; returns the accept flag.
  bool update_component(Index c, std::mt19937_64& rng);

  /// MH decision for theta_p moved to a given natural value (range and
  /// turbulence checks included). Used by update_component.
  bool try_theta(Index p, double natural_value, double uniform);

  void sweep(std::mt19937_64& rng);
  /// Applies adaptive_batch_tune and clears the batch counters.
  void tune(int batch_size);
  void reset_counters() { accepts_.setZero(); }

  double recompute_log_posterior() const;
  /// Compares cached and recomputed log posterior, then resynchronises caches.
  /// Returns |cached - fresh| / (1 + |fresh|).
  double audit();

  /// Current operator H (fixed, or rebuilt from theta).
  Eigen::MatrixXd current_H() const;

 private:
  struct SiteCache {
    Index begin = 0, rows = 0;
    Eigen::MatrixXd Hm;   // mean sweep
    Eigen::VectorXd g;    // regression inputs at current theta
    Eigen::VectorXd d;    // predicted singular values
    Eigen::VectorXd w;    // V^T x
    Eigen::VectorXd m;    // Hm x
    double rss = 0.0;
  };

  double log_prior_x(double v) const;
  double log_prior_theta(const Eigen::VectorXd& theta) const;
  double log_likelihood_from(double rss) const;
  void rebuild_caches();
  bool try_x(Index k, double value, double uniform);
  bool try_sigma(double value, double uniform);

  const InversionProblem& problem_;
  InversionConfig config_;
  std::vector<std::string> names_;
  Index n_regions_ = 0;
  Index n_theta_ = 0;

  Eigen::VectorXd x_;
  Eigen::VectorXd theta_;
  double sigma_ = 1.0;
  Eigen::VectorXd mu_;
  double rss_ = 0.0;
  double log_post_ = 0.0;
  Eigen::VectorXd sd_;
  Eigen::VectorXi accepts_;
  std::vector<SiteCache> sites_;
  // Sites whose emulator uses each theta component: (site, design column).
  std::vector<std::vector<std::pair<int, Index>>> usage_;
};

struct Chain {
  std::vector<std::string> columns;  // component names then "log_posterior"
  Eigen::MatrixXd samples;           // stored sample x column
  std::vector<long> iterations;      // sweep index of each stored sample
  Eigen::VectorXd acceptance_rate;   // per component, post burn-in
  Eigen::VectorXd proposal_sd;       // frozen values after burn-in
  double max_audit_error = 0.0;
  Index n_regions = 0;

  Index column(const std::string& name) const;  // throws DomainError
};

/// n_iter sweeps; batch tuning during burn-in only; stores every thin-th
/// post burn-in sweep. Deterministic in config.seed. Throws ArtifactMismatch.
Chain run_chain(const InversionProblem& problem, const InversionConfig& config);

/// Independent chains with seeds config.seed + k; the parallel path gives the
/// same chains as the serial one.
std::vector<Chain> run_chains(const InversionProblem& problem, const InversionConfig& config, int n_chains,
                              ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace emucal
