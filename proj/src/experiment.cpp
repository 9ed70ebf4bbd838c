#include "emucal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include <json.hpp>

#include "emucal/csv.hpp"
#include "emucal/errors.hpp"

namespace emucal {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Chain pool(const std::vector<Chain>& chains) {
  if (chains.empty()) throw TooFewSamples("no chains to pool");
  if (chains.size() == 1) return chains.front();
  Chain out = chains.front();
  Index rows = 0;
  for (const auto& c : chains) rows += c.samples.rows();
  out.samples.resize(rows, chains.front().samples.cols());
  out.iterations.clear();
  Index at = 0;
  out.acceptance_rate.setZero();
  out.max_audit_error = 0.0;
  for (const auto& c : chains) {
    out.samples.middleRows(at, c.samples.rows()) = c.samples;
    at += c.samples.rows();
    out.iterations.insert(out.iterations.end(), c.iterations.begin(), c.iterations.end());
    out.acceptance_rate += c.acceptance_rate / static_cast<double>(chains.size());
    out.max_audit_error = std::max(out.max_audit_error, c.max_audit_error);
  }
  return out;
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.category(), std::string(name) + ": " + e.what());
  }
}

}  // namespace

std::vector<SensitivityMatrix> simulate_design(const DesignMatrix& design, const ParameterSpace& space,
                                               const Domain& domain, std::uint64_t seed,
                                               const SimulatorSettings& settings, ExecPolicy policy) {
  std::vector<SensitivityMatrix> runs;
  runs.reserve(design.rows.rows());
  for (Index p = 0; p < design.rows.rows(); ++p) {
    const Eigen::VectorXd theta = design.rows.row(p).transpose();
    auto H = simulate_H(space.unflatten(theta), space, domain, seed, settings, policy);
    H.run_index = static_cast<int>(p);
    runs.push_back(std::move(H));
  }
  return runs;
}

TrainingResult train_from_runs(const Config& config, Domain domain, DesignMatrix design,
                               std::vector<SensitivityMatrix> runs, ExecPolicy policy) {
  TrainingResult t;
  t.domain = std::move(domain);
  t.design = std::move(design);
  t.runs = std::move(runs);
  if (static_cast<Index>(t.runs.size()) != t.design.rows.rows())
    throw DimensionMismatch("one simulator run per design row");
  t.reduction = reduce_runs(t.runs, config.reduction, policy);
  EmulatorModel model = fit_emulator(t.design, config.space, t.reduction.tables, config.stepwise, policy);
  t.artifacts = make_artifacts(config.space, row_blocks(t.domain), t.reduction, std::move(model));
  return t;
}

TrainingResult train_pipeline(const Config& config, ExecPolicy policy) {
  Domain domain = stage("domain", [&] { return config.domain(); });
  DesignMatrix design =
      stage("design", [&] { return generate_lhc(config.design_runs, config.space, config.design_seed, config.design); });
  auto runs = stage("simulate", [&] {
    return simulate_design(design, config.space, domain, config.simulator_seed, config.simulator, policy);
  });
  return stage("train", [&] { return train_from_runs(config, std::move(domain), std::move(design), std::move(runs), policy); });
}

const Summary& InversionOutcome::summary(const std::string& column) const {
  return summaries.at(static_cast<std::size_t>(chain.column(column)));
}

InversionOutcome summarize_chains(const std::vector<Chain>& chains, const Eigen::VectorXd& prior_flux,
                                  const std::vector<Index>& subset) {
  InversionOutcome out;
  out.chain = pool(chains);
  const Index n_scalar = out.chain.samples.cols() - 1;
  for (Index c = 0; c < n_scalar; ++c) out.summaries.push_back(posterior_summary(out.chain.samples.col(c)));
  out.total = regional_total(out.chain.samples.leftCols(out.chain.n_regions), subset, prior_flux);
  return out;
}

PairedInversion invert_both(const Eigen::VectorXd& y, const Eigen::MatrixXd& default_H,
                            const EmulatorArtifacts& artifacts, const Config& config, ExecPolicy policy) {
  const Eigen::VectorXd flux = config.prior_flux_vector();
  const auto subset = config.total_subset();
  PairedInversion out;
  InversionProblem fixed{y, default_H, nullptr};
  out.fixed = summarize_chains(run_chains(fixed, config.inversion, config.chains, policy), flux, subset);
  InversionProblem uncertain{y, {}, &artifacts};
  out.uncertain = summarize_chains(run_chains(uncertain, config.inversion, config.chains, policy), flux, subset);
  return out;
}

Eigen::VectorXd truth_theta(const Config& config) {
  const auto& space = config.space;
  Eigen::VectorXd theta = space.default_flat();
  const auto ftt = space.ftt_index();
  if (!ftt) throw ConfigError("parameter table has no FTT entry");
  theta(*ftt) = config.experiment.ftt_true;
  const Index z = space.site_param_index(config.experiment.shifted_site - 1, SiteParam::Height);
  theta(z) = space.spec(z).default_value + config.experiment.height_true_offset;
  const auto check = validate_flat(theta, space);
  if (!check.ok) throw ConfigError("synthetic truth outside the prior ranges");
  return theta;
}

ReplicateResult run_replicate(const Config& config, const TrainingResult& trained, const Eigen::MatrixXd& true_H,
                              int index, ExecPolicy policy) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& e = config.experiment;
  const auto& space = config.space;
  ReplicateResult r;
  r.index = index;
  r.seed = e.seed + static_cast<std::uint64_t>(index);

  std::mt19937_64 rng(r.seed);
  std::normal_distribution<double> flux(config.inversion.priors.x_mean, e.x_true_sd);
  Eigen::VectorXd x_true(config.n_regions);
  for (Index k = 0; k < x_true.size(); ++k) x_true(k) = std::max(0.05, flux(rng));
  SensitivityMatrix H;
  H.values = true_H;
  H.blocks = trained.artifacts.blocks;
  const Eigen::VectorXd y = synthesize_observations(H, x_true, e.noise_sd, r.seed ^ 0x9e3779b97f4a7c15ULL);

  Config local = config;
  local.inversion.seed = config.inversion.seed + 7919ULL * static_cast<std::uint64_t>(index);
  const auto paired = invert_both(y, trained.runs.front().values, trained.artifacts, local, policy);

  const Eigen::VectorXd truth = truth_theta(config);
  const Index ftt = *space.ftt_index();
  const Index z = space.site_param_index(e.shifted_site - 1, SiteParam::Height);
  r.ftt = paired.uncertain.summary(space.spec(ftt).name);
  r.height = paired.uncertain.summary(space.spec(z).name);
  r.covers_ftt = r.ftt.covers(truth(ftt));
  r.covers_height = r.height.covers(truth(z));
  r.total_fixed = paired.fixed.total;
  r.total_uncertain = paired.uncertain.total;
  r.total_wider = r.total_uncertain.width() >= r.total_fixed.width();
  const Eigen::VectorXd flux_map = config.prior_flux_vector();
  for (Index k : config.total_subset()) r.true_total += x_true(k) * flux_map(k);
  r.covers_total_fixed = r.total_fixed.covers(r.true_total);
  r.covers_total_uncertain = r.total_uncertain.covers(r.true_total);
  for (const auto& name : e.weak_parameters) {
    const auto p = space.find(name);
    if (!p) throw ConfigError("unknown weak parameter " + name);
    r.weak_width_ratio.push_back(paired.uncertain.summary(name).width() / space.spec(*p).range.width());
  }
  const auto& a1 = paired.fixed.chain.acceptance_rate;
  const auto& a2 = paired.uncertain.chain.acceptance_rate;
  r.min_acceptance = std::min(a1.minCoeff(), a2.minCoeff());
  r.max_acceptance = std::max(a1.maxCoeff(), a2.maxCoeff());
  r.seconds = seconds_since(t0);
  return r;
}

StudyReport run_study(const Config& config, ExecPolicy policy, const ProgressFn& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyReport report;
  report.weak_parameters = config.experiment.weak_parameters;
  const TrainingResult trained = train_pipeline(config, policy);
  const Eigen::MatrixXd true_H = stage("truth", [&] {
    const Eigen::VectorXd truth = truth_theta(config);
    return simulate_H(config.space.unflatten(truth), config.space, trained.domain, config.simulator_seed,
                      config.simulator, policy)
        .values;
  });
  report.training_seconds = seconds_since(t0);

  report.replicates.resize(config.experiment.replicates);
  auto one = [&](int k) {
    report.replicates[k] = stage("invert", [&] { return run_replicate(config, trained, true_H, k, ExecPolicy::Serial); });
  };
  for_each_index(config.experiment.replicates, policy, [&](std::ptrdiff_t k) {
    one(static_cast<int>(k));
    if (progress) {
#pragma omp critical(emucal_progress)
      progress(report.replicates[k]);
    }
  });
  report.total_seconds = seconds_since(t0);
  return report;
}

int StudyReport::count_covers_ftt() const {
  return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](auto& r) { return r.covers_ftt; }));
}
int StudyReport::count_covers_height() const {
  return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](auto& r) { return r.covers_height; }));
}
int StudyReport::count_total_wider() const {
  return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](auto& r) { return r.total_wider; }));
}
int StudyReport::count_covers_total_uncertain() const {
  return static_cast<int>(
      std::count_if(replicates.begin(), replicates.end(), [](auto& r) { return r.covers_total_uncertain; }));
}

std::vector<double> StudyReport::mean_weak_width_ratio() const {
  std::vector<double> mean(weak_parameters.size(), 0.0);
  for (const auto& r : replicates)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r.weak_width_ratio[i] / replicates.size();
  return mean;
}

std::vector<double> StudyReport::min_weak_width_ratio() const {
  std::vector<double> lo(weak_parameters.size(), replicates.empty() ? 0.0 : 1e300);
  for (const auto& r : replicates)
    for (std::size_t i = 0; i < lo.size(); ++i) lo[i] = std::min(lo[i], r.weak_width_ratio[i]);
  return lo;
}

std::string format_study_json(const StudyReport& report, const Config& config) {
  using nlohmann::ordered_json;
  auto summary = [](const Summary& s) { return ordered_json{{"mean", s.mean}, {"lo", s.lo}, {"hi", s.hi}}; };
  ordered_json j;
  const Eigen::VectorXd truth = truth_theta(config);
  const Index z = config.space.site_param_index(config.experiment.shifted_site - 1, SiteParam::Height);
  j["truth"] = {{"FTT", truth(*config.space.ftt_index())}, {config.space.spec(z).name, truth(z)}};
  j["replicates"] = report.replicates.size();
  j["covers_ftt"] = report.count_covers_ftt();
  j["covers_height"] = report.count_covers_height();
  j["total_ci_wider_with_uncertainty"] = report.count_total_wider();
  j["covers_total_with_uncertainty"] = report.count_covers_total_uncertain();
  ordered_json weak = ordered_json::object();
  const auto mean = report.mean_weak_width_ratio();
  const auto lo = report.min_weak_width_ratio();
  for (std::size_t i = 0; i < report.weak_parameters.size(); ++i)
    weak[report.weak_parameters[i]] = {{"mean_width_ratio", mean[i]}, {"min_width_ratio", lo[i]}};
  j["weak_parameters"] = weak;
  j["training_seconds"] = report.training_seconds;
  j["total_seconds"] = report.total_seconds;
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.replicates) {
    ordered_json w = ordered_json::object();
    for (std::size_t i = 0; i < report.weak_parameters.size(); ++i) w[report.weak_parameters[i]] = r.weak_width_ratio[i];
    rows.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"FTT", summary(r.ftt)},
                    {"height", summary(r.height)},
                    {"covers_ftt", r.covers_ftt},
                    {"covers_height", r.covers_height},
                    {"true_total", r.true_total},
                    {"total_with_uncertainty", summary(r.total_uncertain)},
                    {"total_without_uncertainty", summary(r.total_fixed)},
                    {"total_ci_wider_with_uncertainty", r.total_wider},
                    {"covers_total_with_uncertainty", r.covers_total_uncertain},
                    {"covers_total_without_uncertainty", r.covers_total_fixed},
                    {"weak_width_ratio", w},
                    {"acceptance_range", {r.min_acceptance, r.max_acceptance}},
                    {"seconds", r.seconds}});
  }
  j["per_replicate"] = rows;
  return j.dump(2) + "\n";
}

std::string format_study_csv(const StudyReport& report) {
  std::vector<std::string> header{"replicate", "seed", "ftt_mean", "ftt_lo", "ftt_hi", "covers_ftt",
                                  "height_mean", "height_lo", "height_hi", "covers_height", "true_total",
                                  "total_fixed_lo", "total_fixed_hi", "total_uncertain_lo", "total_uncertain_hi",
                                  "total_ci_wider"};
  for (const auto& w : report.weak_parameters) header.push_back(w + "_width_ratio");
  std::string out = csv::join(header) + "\n";
  for (const auto& r : report.replicates) {
    std::vector<std::string> row{std::to_string(r.index), std::to_string(r.seed),
                                 csv::format_double(r.ftt.mean), csv::format_double(r.ftt.lo),
                                 csv::format_double(r.ftt.hi), r.covers_ftt ? "1" : "0",
                                 csv::format_double(r.height.mean), csv::format_double(r.height.lo),
                                 csv::format_double(r.height.hi), r.covers_height ? "1" : "0",
                                 csv::format_double(r.true_total), csv::format_double(r.total_fixed.lo),
                                 csv::format_double(r.total_fixed.hi), csv::format_double(r.total_uncertain.lo),
                                 csv::format_double(r.total_uncertain.hi), r.total_wider ? "1" : "0"};
    for (double w : r.weak_width_ratio) row.push_back(csv::format_double(w));
    out += csv::join(row) + "\n";
  }
  return out;
}

}  // namespace emucal
