#include "emucal/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "emucal/emulator.hpp"
#include "emucal/errors.hpp"

namespace emucal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

Eigen::VectorXd interior_default(const ParameterSpace& space) {
  Eigen::VectorXd theta = space.default_flat();
  for (Index p = 0; p < theta.size(); ++p) {
    const auto& spec = space.spec(p);
    if (spec.transform != Transform::Logit) continue;
    const double u = std::clamp(normalize(theta(p), spec), kLogitMargin, 1.0 - kLogitMargin);
    theta(p) = denormalize(u, spec);
  }
  return theta;
}

}  // namespace

void InversionConfig::check() const {
  if (n_iter < 1) throw ConfigError("n_iter must be positive");
  if (!(burn_in > 0.0 && burn_in < 1.0)) throw ConfigError("burn-in fraction must lie in (0, 1)");
  if (thin < 1 || batch_size < 1 || audit_every < 1) throw ConfigError("thin, batch size and audit interval must be positive");
  if (!(accept_lo < accept_hi)) throw ConfigError("acceptance band needs lo < hi");
  if (!(multiplier > 1.0)) throw ConfigError("tuning multiplier must exceed 1");
  if (!(priors.x_sd > 0.0)) throw ConfigError("flux prior sd must be positive");
  if (!(priors.sigma_y.lo > 0.0 && priors.sigma_y.lo < priors.sigma_y.hi))
    throw ConfigError("sigma_y prior must be a positive, non-degenerate interval");
  if (!(x_step > 0.0 && theta_step > 0.0 && sigma_step > 0.0)) throw ConfigError("proposal steps must be positive");
}

long InversionConfig::stored_samples() const { return (n_iter - burn_in_sweeps()) / thin; }

Index InversionProblem::n_regions() const { return artifacts ? artifacts->n_regions() : fixed_H.cols(); }

double log_likelihood(const Eigen::VectorXd& y, const Eigen::MatrixXd& H, const Eigen::VectorXd& x, double sigma_y) {
  if (!(sigma_y > 0.0)) throw NonPositiveSigma("sigma_y must be positive");
  if (H.rows() != y.size() || H.cols() != x.size()) throw DimensionMismatch("y, H and x do not conform");
  const double n = static_cast<double>(y.size());
  const double rss = (y - H * x).squaredNorm();
  return -0.5 * n * kLogTwoPi - n * std::log(sigma_y) - 0.5 * rss / (sigma_y * sigma_y);
}

bool mh_accept(double log_ratio, double uniform) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return uniform < std::exp(log_ratio);
}

Eigen::VectorXd adaptive_batch_tune(const Eigen::VectorXi& accepted, int batch_size, const Eigen::VectorXd& sd,
                                    const InversionConfig& config) {
  if (accepted.size() != sd.size()) throw DimensionMismatch("one counter per proposal sd");
  Eigen::VectorXd out = sd;
  for (Index c = 0; c < sd.size(); ++c) {
    const double rate = static_cast<double>(accepted(c)) / batch_size;
    if (rate > config.accept_hi) out(c) *= config.multiplier;
    else if (rate < config.accept_lo) out(c) /= config.multiplier;
  }
  return out;
}

Sampler::Sampler(const InversionProblem& problem, const InversionConfig& config) : problem_(problem), config_(config) {
  config_.check();
  n_regions_ = problem_.n_regions();
  if (problem_.artifacts) {
    problem_.artifacts->verify();
    if (problem_.artifacts->n_obs_total() != problem_.y.size())
      throw DimensionMismatch("observation count differs from emulator rows");
  } else if (problem_.fixed_H.rows() != problem_.y.size()) {
    throw DimensionMismatch("observation count differs from H rows");
  }

  for (Index r = 0; r < n_regions_; ++r) names_.push_back("x_" + std::to_string(r + 1));
  x_ = Eigen::VectorXd::Constant(n_regions_, config_.priors.x_mean);

  if (problem_.artifacts) {
    const auto& a = *problem_.artifacts;
    n_theta_ = a.space.dimension();
    for (const auto& name : a.space.column_names()) names_.push_back(name);
    theta_ = interior_default(a.space);
    usage_.resize(n_theta_);
    sites_.resize(a.blocks.size());
    for (std::size_t s = 0; s < a.blocks.size(); ++s) {
      auto& c = sites_[s];
      c.begin = a.blocks[s].begin;
      c.rows = a.blocks[s].rows;
      c.Hm = a.means[s].matrix();
      const auto& params = a.model.sites[s].parameters;
      for (std::size_t j = 0; j < params.size(); ++j)
        usage_[params[j]].emplace_back(static_cast<int>(s), static_cast<Index>(j) + 1);
    }
  }
  if (config_.sample_sigma) names_.push_back("sigma_y");

  rebuild_caches();
  if (config_.sigma_init) {
    sigma_ = *config_.sigma_init;
  } else {
    const double sd = std::sqrt(rss_ / static_cast<double>(std::max<Index>(1, problem_.y.size())));
    sigma_ = std::clamp(sd, config_.priors.sigma_y.lo, config_.priors.sigma_y.hi);
  }
  if (!(sigma_ > 0.0)) throw NonPositiveSigma("initial sigma_y must be positive");
  rebuild_caches();

  sd_.resize(n_components());
  for (Index c = 0; c < n_components(); ++c) {
    if (c < n_regions_) sd_(c) = config_.x_step;
    else if (c < n_regions_ + n_theta_) sd_(c) = config_.theta_step;
    else sd_(c) = config_.sigma_step * sigma_;
  }
  accepts_ = Eigen::VectorXi::Zero(n_components());
}

double Sampler::log_prior_x(double v) const {
  const double z = (v - config_.priors.x_mean) / config_.priors.x_sd;
  return -0.5 * z * z - std::log(config_.priors.x_sd) - 0.5 * kLogTwoPi;
}

double Sampler::log_prior_theta(const Eigen::VectorXd& theta) const {
  if (!problem_.artifacts) return 0.0;
  const auto& space = problem_.artifacts->space;
  double lp = 0.0;
  for (Index p = 0; p < theta.size(); ++p) {
    const auto& spec = space.spec(p);
    if (!std::isfinite(theta(p)) || !spec.range.contains(theta(p))) return kNegInf;
    lp += -std::log(spec.range.width()) + log_jacobian(theta(p), spec);
  }
  if (const auto ftt = space.ftt_index(); ftt && !derive_coupled_turbulence(theta(*ftt), space.coupling()).feasible)
    return kNegInf;
  return lp;
}

double Sampler::log_likelihood_from(double rss) const {
  const double n = static_cast<double>(problem_.y.size());
  return -0.5 * n * kLogTwoPi - n * std::log(sigma_) - 0.5 * rss / (sigma_ * sigma_);
}

void Sampler::rebuild_caches() {
  if (problem_.artifacts) {
    const auto& a = *problem_.artifacts;
    mu_.resize(problem_.y.size());
    rss_ = 0.0;
    for (std::size_t s = 0; s < sites_.size(); ++s) {
      auto& c = sites_[s];
      const auto& basis = a.bases[s];
      const auto& emu = a.model.sites[s];
      c.g = regression_row(theta_, a.space, emu.parameters);
      c.d = emu.B * c.g;
      c.w = basis.V.transpose() * x_;
      c.m = c.Hm * x_;
      mu_.segment(c.begin, c.rows) = basis.U * c.d.cwiseProduct(c.w) + c.m;
      c.rss = (problem_.y.segment(c.begin, c.rows) - mu_.segment(c.begin, c.rows)).squaredNorm();
      rss_ += c.rss;
    }
  } else {
    mu_ = problem_.fixed_H * x_;
    rss_ = (problem_.y - mu_).squaredNorm();
  }
  double lp = log_prior_theta(theta_);
  for (Index r = 0; r < n_regions_; ++r) lp += log_prior_x(x_(r));
  log_post_ = log_likelihood_from(rss_) + lp;
}

double Sampler::recompute_log_posterior() const {
  const Eigen::MatrixXd H = current_H();
  double lp = log_prior_theta(theta_);
  for (Index r = 0; r < n_regions_; ++r) lp += log_prior_x(x_(r));
  return log_likelihood(problem_.y, H, x_, sigma_) + lp;
}

double Sampler::audit() {
  const double fresh = recompute_log_posterior();
  const double err = std::abs(log_post_ - fresh) / (1.0 + std::abs(fresh));
  rebuild_caches();
  return err;
}

Eigen::MatrixXd Sampler::current_H() const {
  if (!problem_.artifacts) return problem_.fixed_H;
  const auto& a = *problem_.artifacts;
  Eigen::MatrixXd H(a.n_obs_total(), a.n_regions());
  for (std::size_t s = 0; s < sites_.size(); ++s)
    H.middleRows(sites_[s].begin, sites_[s].rows) = reconstruct_block(a.bases[s], a.means[s], sites_[s].d);
  return H;
}

bool Sampler::try_x(Index k, double value, double uniform) {
  const double delta = value - x_(k);
  const double prior_change = log_prior_x(value) - log_prior_x(x_(k));
  double new_rss = 0.0;
  Eigen::VectorXd column(problem_.y.size());
  if (problem_.artifacts) {
    const auto& a = *problem_.artifacts;
    for (std::size_t s = 0; s < sites_.size(); ++s) {
      const auto& c = sites_[s];
      column.segment(c.begin, c.rows) =
          a.bases[s].U * c.d.cwiseProduct(a.bases[s].V.row(k).transpose()) + c.Hm.col(k);
    }
  } else {
    column = problem_.fixed_H.col(k);
  }
  new_rss = (problem_.y - mu_ - delta * column).squaredNorm();
  const double proposed = log_likelihood_from(new_rss) + (log_post_ - log_likelihood_from(rss_)) + prior_change;
  if (!mh_accept(proposed - log_post_, uniform)) return false;

  x_(k) = value;
  mu_ += delta * column;
  rss_ = new_rss;
  log_post_ = proposed;
  if (problem_.artifacts) {
    const auto& a = *problem_.artifacts;
    for (std::size_t s = 0; s < sites_.size(); ++s) {
      auto& c = sites_[s];
      c.w += delta * a.bases[s].V.row(k).transpose();
      c.m += delta * c.Hm.col(k);
      c.rss = (problem_.y.segment(c.begin, c.rows) - mu_.segment(c.begin, c.rows)).squaredNorm();
    }
  }
  return true;
}

bool Sampler::try_theta(Index p, double value, double uniform) {
  if (!problem_.artifacts) throw DomainError("theta is frozen in a fixed-H inversion");
  const auto& a = *problem_.artifacts;
  const auto& spec = a.space.spec(p);
  if (!std::isfinite(value) || !spec.range.contains(value)) return false;
  if (const auto ftt = a.space.ftt_index(); ftt && *ftt == p && !derive_coupled_turbulence(value, a.space.coupling()).feasible)
    return false;
  const double prior_change = log_jacobian(value, spec) - log_jacobian(theta_(p), spec);
  if (!std::isfinite(prior_change)) return false;

  const double coordinate = regression_coordinate(value, spec);
  double new_rss = rss_;
  struct Pending {
    int site;
    Eigen::VectorXd d, mu;
    double rss;
  };
  std::vector<Pending> pending;
  pending.reserve(usage_[p].size());
  for (const auto& [s, col] : usage_[p]) {
    const auto& c = sites_[s];
    Pending next{s, c.d + a.model.sites[s].B.col(col) * (coordinate - c.g(col)), {}, 0.0};
    next.mu = a.bases[s].U * next.d.cwiseProduct(c.w) + c.m;
    next.rss = (problem_.y.segment(c.begin, c.rows) - next.mu).squaredNorm();
    new_rss += next.rss - c.rss;
    pending.push_back(std::move(next));
  }
  const double proposed = log_likelihood_from(new_rss) + (log_post_ - log_likelihood_from(rss_)) + prior_change;
  if (!mh_accept(proposed - log_post_, uniform)) return false;

  theta_(p) = value;
  for (auto& next : pending) {
    auto& c = sites_[next.site];
    for (const auto& [s, col] : usage_[p])
      if (s == next.site) c.g(col) = coordinate;
    c.d = std::move(next.d);
    mu_.segment(c.begin, c.rows) = next.mu;
    c.rss = next.rss;
  }
  rss_ = 0.0;
  for (const auto& c : sites_) rss_ += c.rss;
  log_post_ = proposed;
  return true;
}

bool Sampler::try_sigma(double value, double uniform) {
  if (!config_.priors.sigma_y.contains(value) || !(value > 0.0)) return false;
  const double old_sigma = sigma_;
  const double current_ll = log_likelihood_from(rss_);
  sigma_ = value;
  const double proposed = log_likelihood_from(rss_) + (log_post_ - current_ll);
  if (!mh_accept(proposed - log_post_, uniform)) {
    sigma_ = old_sigma;
    return false;
  }
  log_post_ = proposed;
  return true;
}

bool Sampler::update_component(Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = normal(rng);
  const double u = unit(rng);
  bool accepted = false;
  if (c < n_regions_) {
    accepted = try_x(c, x_(c) + sd_(c) * z, u);
  } else if (c < n_regions_ + n_theta_) {
    const Index p = c - n_regions_;
    const auto& spec = problem_.artifacts->space.spec(p);
    const double t = transform_forward(theta_(p), spec) + sd_(c) * z;
    accepted = try_theta(p, transform_inverse(t, spec), u);
  } else {
    accepted = try_sigma(sigma_ + sd_(c) * z, u);
  }
  if (accepted) ++accepts_(c);
  return accepted;
}

void Sampler::sweep(std::mt19937_64& rng) {
  for (Index c = 0; c < n_components(); ++c) update_component(c, rng);
}

void Sampler::tune(int batch_size) {
  sd_ = adaptive_batch_tune(accepts_, batch_size, sd_, config_);
  accepts_.setZero();
}

Index Chain::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Index>(i);
  throw DomainError("no chain column " + name);
}

Chain run_chain(const InversionProblem& problem, const InversionConfig& config) {
  Sampler sampler(problem, config);
  std::mt19937_64 rng(config.seed);
  const long burn = config.burn_in_sweeps();

  Chain chain;
  chain.columns = sampler.component_names();
  chain.columns.push_back("log_posterior");
  chain.n_regions = problem.n_regions();
  chain.samples.resize(config.stored_samples(), static_cast<Index>(chain.columns.size()));
  const Index n_x = problem.n_regions();
  const Index n_theta = problem.samples_theta() ? problem.artifacts->space.dimension() : 0;

  Index stored = 0;
  for (long it = 0; it < config.n_iter; ++it) {
    if (it == burn) sampler.reset_counters();
    sampler.sweep(rng);
    if (it < burn && (it + 1) % config.batch_size == 0) sampler.tune(config.batch_size);
    if ((it + 1) % config.audit_every == 0) chain.max_audit_error = std::max(chain.max_audit_error, sampler.audit());
    if (it >= burn && (it - burn + 1) % config.thin == 0 && stored < chain.samples.rows()) {
      auto row = chain.samples.row(stored);
      row.head(n_x) = sampler.x().transpose();
      if (n_theta) row.segment(n_x, n_theta) = sampler.theta().transpose();
      if (config.sample_sigma) row(n_x + n_theta) = sampler.sigma();
      row(row.size() - 1) = sampler.log_posterior();
      chain.iterations.push_back(it);
      ++stored;
    }
  }
  const long post = config.n_iter - burn;
  chain.acceptance_rate = sampler.batch_accepts().cast<double>() / static_cast<double>(std::max(1L, post));
  chain.proposal_sd = sampler.proposal_sd();
  return chain;
}

std::vector<Chain> run_chains(const InversionProblem& problem, const InversionConfig& config, int n_chains,
                              ExecPolicy policy) {
  std::vector<Chain> chains(n_chains);
  auto one = [&](int k) {
    InversionConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    chains[k] = run_chain(problem, c);
  };
  for_each_index(n_chains, policy, [&](std::ptrdiff_t k) { one(static_cast<int>(k)); });
  return chains;
}

}  // namespace emucal
