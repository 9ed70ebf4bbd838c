// Command-line driver: one subcommand per pipeline stage plus the synthetic
// recovery study. Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "emucal/archive.hpp"
#include "emucal/config.hpp"
#include "emucal/csv.hpp"
#include "emucal/errors.hpp"
#include "emucal/exec.hpp"
#include "emucal/experiment.hpp"
#include "emucal/summary.hpp"

namespace fs = std::filesystem;
using namespace emucal;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Config load(const Common& c) {
  if (c.config.empty()) throw UsageError("--config is required");
  if (!fs::exists(c.config)) throw UsageError("config file not found: " + c.config);
  return load_config(c.config);
}

void add_common(CLI::App* app, Common& c, bool needs_out = true) {
  app->add_option("--config", c.config, "JSON config file")->required();
  auto* out = app->add_option("--out", c.out, "output path");
  if (needs_out) out->required();
  app->add_option("--seed", c.seed, "override the stage seed");
  app->add_option("--threads", c.threads, "worker threads (EMUCAL_THREADS fallback)");
}

ordered_json summary_json(const Summary& s) { return {{"mean", s.mean}, {"lo", s.lo}, {"hi", s.hi}}; }

std::string chain_csv(const Chain& chain) {
  std::vector<std::string> labels;
  for (long it : chain.iterations) labels.push_back(std::to_string(it));
  std::vector<std::string> header{"iteration"};
  header.insert(header.end(), chain.columns.begin(), chain.columns.end());
  return csv::format_matrix(chain.samples, header, labels);
}

std::string trace_csv(const Chain& chain) {
  std::string out = "parameter,iteration,value\n";
  for (std::size_t c = 0; c < chain.columns.size(); ++c)
    for (Index i = 0; i < chain.samples.rows(); ++i)
      out += chain.columns[c] + "," + std::to_string(chain.iterations[i]) + "," +
             csv::format_double(chain.samples(i, static_cast<Index>(c))) + "\n";
  return out;
}

ordered_json outcome_json(const InversionOutcome& o) {
  ordered_json params = ordered_json::object();
  for (std::size_t c = 0; c + 1 < o.chain.columns.size(); ++c) {
    auto s = summary_json(o.summaries[c]);
    s["acceptance_rate"] = o.chain.acceptance_rate(static_cast<Index>(c));
    s["proposal_sd"] = o.chain.proposal_sd(static_cast<Index>(c));
    params[o.chain.columns[c]] = s;
  }
  return {{"samples", o.chain.samples.rows()}, {"max_audit_error", o.chain.max_audit_error}, {"parameters", params}};
}

int cmd_design(const Common& c) {
  Config cfg = load(c);
  if (c.seed) cfg.design_seed = *c.seed;
  const DesignMatrix d = generate_lhc(cfg.design_runs, cfg.space, cfg.design_seed, cfg.design);
  write_design(c.out, d);
  ordered_json m;
  m["n_runs"] = d.n_runs();
  m["dimension"] = d.columns.size();
  m["seed"] = cfg.design_seed;
  m["maximin_score"] = maximin_score(d, cfg.space);
  m["columns"] = d.columns;
  csv::write_text(fs::path(c.out).replace_extension(".manifest.json"), m.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const Common& c, const std::string& design_path) {
  Config cfg = load(c);
  if (c.seed) cfg.simulator_seed = *c.seed;
  const DesignMatrix d = read_design(design_path, cfg.space);
  check_design(d, cfg.space);
  const Domain domain = cfg.domain();
  const auto runs = simulate_design(d, cfg.space, domain, cfg.simulator_seed, cfg.simulator, ExecPolicy::Parallel);
  archive::write_h_archive(c.out, runs, d, domain);
  return 0;
}

int cmd_train(const Common& c, const std::string& archive_dir) {
  const Config cfg = load(c);
  auto h = archive::read_h_archive(archive_dir, cfg.space);
  Domain domain = cfg.domain();
  if (h.runs.front().values.cols() != domain.n_regions())
    throw ArtifactMismatch("archive region count differs from the config");
  const auto t = train_from_runs(cfg, domain, h.design, h.runs);
  const fs::path out(c.out);
  archive::write_artifacts(out, t.artifacts);
  csv::write_text(out / "H_default.csv", archive::format_sensitivity(t.runs.front(), cfg.space.sites()));

  const fs::path diag = out / "diagnostics";
  csv::write_text(diag / "singular_values.csv", archive::format_singular_value_tables(t.reduction.tables, cfg.space.sites()));
  std::vector<Eigen::VectorXd> weights, none(t.reduction.tables.size());
  for (const auto& table : t.reduction.tables) weights.push_back(sample_average_variance_explained(table));
  csv::write_text(diag / "proportions_unweighted.csv", archive::format_proportions(t.artifacts.model, cfg.space, none));
  csv::write_text(diag / "proportions_weighted.csv", archive::format_proportions(t.artifacts.model, cfg.space, weights));
  std::string ve = "site,index,default_share,sample_average_share\n";
  for (std::size_t s = 0; s < weights.size(); ++s) {
    const Eigen::VectorXd def = variance_explained(t.reduction.bases[s].s);
    for (Index i = 0; i < def.size(); ++i)
      ve += std::to_string(cfg.space.sites()[s].number) + "," + std::to_string(i + 1) + "," +
            csv::format_double(def(i)) + "," + csv::format_double(weights[s](i)) + "\n";
  }
  csv::write_text(diag / "variance_explained.csv", ve);
  std::cout << "pipeline_hash " << t.artifacts.hash << "\n";
  return 0;
}

int cmd_synthesize(const Common& c, const std::string& artifacts_dir) {
  Config cfg = load(c);
  if (c.seed) cfg.experiment.seed = *c.seed;
  const Domain domain = cfg.domain();
  const Eigen::VectorXd truth = truth_theta(cfg);
  SensitivityMatrix H = simulate_H(cfg.space.unflatten(truth), cfg.space, domain, cfg.simulator_seed, cfg.simulator);
  if (!artifacts_dir.empty()) {
    const auto a = archive::read_artifacts(artifacts_dir, cfg.space);
    if (a.n_regions() != domain.n_regions()) throw ArtifactMismatch("artifact region count differs from the config");
  }
  std::mt19937_64 rng(cfg.experiment.seed);
  std::normal_distribution<double> flux(cfg.inversion.priors.x_mean, cfg.experiment.x_true_sd);
  Eigen::VectorXd x(domain.n_regions());
  for (Index k = 0; k < x.size(); ++k) x(k) = std::max(0.05, flux(rng));
  const Eigen::VectorXd y = synthesize_observations(H, x, cfg.experiment.noise_sd, cfg.experiment.seed ^ 0x9e3779b97f4a7c15ULL);

  const fs::path out(c.out);
  std::string text = "site,obs,y\n";
  for (const auto& b : H.blocks)
    for (Index i = 0; i < b.rows; ++i)
      text += std::to_string(cfg.space.sites()[b.site].number) + "," + std::to_string(i + 1) + "," +
              csv::format_double(y(b.begin + i)) + "\n";
  csv::write_text(out / "y.csv", text);
  ordered_json t;
  ordered_json theta = ordered_json::object();
  const auto names = cfg.space.column_names();
  for (std::size_t p = 0; p < names.size(); ++p) theta[names[p]] = truth(static_cast<Index>(p));
  t["theta"] = theta;
  t["x"] = std::vector<double>(x.data(), x.data() + x.size());
  t["noise_sd"] = cfg.experiment.noise_sd;
  csv::write_text(out / "truth.json", t.dump(2) + "\n");
  return 0;
}

Eigen::VectorXd read_y(const fs::path& path, const ParameterSpace& space) {
  const auto table = csv::read(path);
  const Eigen::Index col = table.column("y");
  Index expected = 0;
  for (const auto& s : space.sites()) expected += s.n_obs;
  if (static_cast<Index>(table.rows.size()) != expected)
    throw DimensionMismatch("y has " + std::to_string(table.rows.size()) + " rows, sites expect " + std::to_string(expected));
  Eigen::VectorXd y(expected);
  for (Index i = 0; i < expected; ++i) y(i) = csv::parse_double(table.rows[i].at(col));
  return y;
}

int cmd_invert(const Common& c, const std::string& artifacts_dir, const std::string& y_path) {
  Config cfg = load(c);
  if (c.seed) cfg.inversion.seed = *c.seed;
  const auto artifacts = archive::read_artifacts(artifacts_dir, cfg.space);
  const auto H0 = archive::parse_sensitivity(csv::read_text(fs::path(artifacts_dir) / "H_default.csv"), cfg.space.sites());
  if (artifacts.n_regions() != cfg.n_regions) throw ArtifactMismatch("artifact region count differs from the config");
  const Eigen::VectorXd y = read_y(y_path, cfg.space);
  const auto paired = invert_both(y, H0.values, artifacts, cfg);

  const fs::path out(c.out);
  csv::write_text(out / "chain_fixed.csv", chain_csv(paired.fixed.chain));
  csv::write_text(out / "chain_uncertain.csv", chain_csv(paired.uncertain.chain));
  csv::write_text(out / "trace_fixed.csv", trace_csv(paired.fixed.chain));
  csv::write_text(out / "trace_uncertain.csv", trace_csv(paired.uncertain.chain));

  std::string shifts = "parameter,prior_lo,prior_hi,posterior_mean,scaled_shift\n";
  for (Index p = 0; p < cfg.space.dimension(); ++p) {
    const auto& spec = cfg.space.spec(p);
    const double mean = paired.uncertain.summary(spec.name).mean;
    shifts += spec.name + "," + csv::format_double(spec.range.lo) + "," + csv::format_double(spec.range.hi) + "," +
              csv::format_double(mean) + "," + csv::format_double(scaled_prior_shift(spec.range, mean)) + "\n";
  }
  csv::write_text(out / "prior_shift.csv", shifts);

  std::string overlap = "region,fixed_lo,fixed_hi,uncertain_lo,uncertain_hi,overlap_percent\n";
  for (Index r = 0; r < artifacts.n_regions(); ++r) {
    const auto& f = paired.fixed.summaries[r];
    const auto& u = paired.uncertain.summaries[r];
    overlap += std::to_string(r + 1) + "," + csv::format_double(f.lo) + "," + csv::format_double(f.hi) + "," +
               csv::format_double(u.lo) + "," + csv::format_double(u.hi) + "," +
               csv::format_double(ci_overlap({f.lo, f.hi}, {u.lo, u.hi})) + "\n";
  }
  csv::write_text(out / "ci_overlap.csv", overlap);

  ordered_json s;
  s["pipeline_hash"] = artifacts.hash;
  s["seed"] = cfg.inversion.seed;
  s["total_with_uncertainty"] = summary_json(paired.uncertain.total);
  s["total_without_uncertainty"] = summary_json(paired.fixed.total);
  s["with_uncertainty"] = outcome_json(paired.uncertain);
  s["without_uncertainty"] = outcome_json(paired.fixed);
  csv::write_text(out / "summary.json", s.dump(2) + "\n");
  return 0;
}

int cmd_e2e(const Common& c, int replicates) {
  Config cfg = load(c);
  if (c.seed) cfg.experiment.seed = *c.seed;
  if (replicates > 0) cfg.experiment.replicates = replicates;
  const auto report = run_study(cfg, ExecPolicy::Parallel, [](const ReplicateResult& r) {
    std::fprintf(stderr, "replicate %d: FTT %s height %s total-wider %s (%.1fs)\n", r.index, r.covers_ftt ? "y" : "n",
                 r.covers_height ? "y" : "n", r.total_wider ? "y" : "n", r.seconds);
  });
  const fs::path out(c.out.empty() ? "e2e" : c.out);
  csv::write_text(out / "report.json", format_study_json(report, cfg));
  csv::write_text(out / "replicates.csv", format_study_csv(report));
  std::cout << "FTT covered " << report.count_covers_ftt() << "/" << report.replicates.size() << ", height covered "
            << report.count_covers_height() << "/" << report.replicates.size() << ", total CI wider "
            << report.count_total_wider() << "/" << report.replicates.size() << ", " << report.total_seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emulator training and joint flux/parameter inversion"};
  app.require_subcommand(1);
  Common common;
  std::string design_path, archive_dir, artifacts_dir, y_path;
  int replicates = 0;

  auto* design = app.add_subcommand("design", "maximin Latin hypercube design");
  add_common(design, common);
  auto* simulate = app.add_subcommand("simulate", "run the synthetic simulator over a design");
  add_common(simulate, common);
  simulate->add_option("--design", design_path, "design CSV")->required();
  auto* train = app.add_subcommand("train", "reduce runs and fit the emulator");
  add_common(train, common);
  train->add_option("--archive", archive_dir, "H archive directory")->required();
  auto* synth = app.add_subcommand("synthesize", "synthetic observations at the configured truth");
  add_common(synth, common);
  synth->add_option("--artifacts", artifacts_dir, "artifact directory to check against");
  auto* invert = app.add_subcommand("invert", "fixed-H and uncertain-H inversions");
  add_common(invert, common);
  invert->add_option("--artifacts", artifacts_dir, "artifact directory")->required();
  invert->add_option("--y", y_path, "observation CSV")->required();
  auto* e2e = app.add_subcommand("e2e", "synthetic recovery study");
  add_common(e2e, common, false);
  e2e->add_option("--replicates", replicates, "override the replicate count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  set_thread_count(common.threads > 0 ? common.threads : threads_from_env());
  try {
    if (*design) return cmd_design(common);
    if (*simulate) return cmd_simulate(common, design_path);
    if (*train) return cmd_train(common, archive_dir);
    if (*synth) return cmd_synthesize(common, artifacts_dir);
    if (*invert) return cmd_invert(common, artifacts_dir, y_path);
    if (*e2e) return cmd_e2e(common, replicates);
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.category() == ErrorCategory::Validation ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 1;
}
