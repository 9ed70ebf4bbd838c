#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emucal/config.hpp"
#include "emucal/inversion.hpp"
#include "emucal/reconstruct.hpp"
#include "emucal/summary.hpp"

namespace emucal {

/// Design, simulator runs and fitted emulator for one config.
struct TrainingResult {
  Domain domain;
  DesignMatrix design;
  std::vector<SensitivityMatrix> runs;
  Reduction reduction;
  EmulatorArtifacts artifacts;
};

TrainingResult train_pipeline(const Config& config, ExecPolicy policy = ExecPolicy::Parallel);

/// Runs 1..n through the simulator (run 0 is the design default).
std::vector<SensitivityMatrix> simulate_design(const DesignMatrix& design, const ParameterSpace& space,
                                               const Domain& domain, std::uint64_t seed,
                                               const SimulatorSettings& settings, ExecPolicy policy);

/// Trains from existing runs; runs[0] must be the default run.
TrainingResult train_from_runs(const Config& config, Domain domain, DesignMatrix design,
                               std::vector<SensitivityMatrix> runs, ExecPolicy policy = ExecPolicy::Parallel);

/// Stored samples of one inversion with per-column summaries and the
/// headline regional total.
struct InversionOutcome {
  Chain chain;
  std::vector<Summary> summaries;  // one per chain column except log_posterior
  Summary total;

  const Summary& summary(const std::string& column) const;
};

/// Pools chains (samples stacked, acceptance averaged) and summarises.
InversionOutcome summarize_chains(const std::vector<Chain>& chains, const Eigen::VectorXd& prior_flux,
                                  const std::vector<Index>& subset);

struct PairedInversion {
  InversionOutcome fixed;      // theta frozen at the default, H = default simulator run
  InversionOutcome uncertain;  // theta sampled, H from the emulator
};

PairedInversion invert_both(const Eigen::VectorXd& y, const Eigen::MatrixXd& default_H,
                            const EmulatorArtifacts& artifacts, const Config& config,
                            ExecPolicy policy = ExecPolicy::Parallel);

/// Natural-unit truth: defaults with FTT and the shifted site's height moved.
Eigen::VectorXd truth_theta(const Config& config);

struct ReplicateResult {
  int index = 0;
  std::uint64_t seed = 0;
  Summary ftt, height, total_fixed, total_uncertain;
  double true_total = 0.0;
  bool covers_ftt = false;
  bool covers_height = false;
  bool total_wider = false;          // uncertain-H total CI at least as wide as fixed-H
  bool covers_total_fixed = false;
  bool covers_total_uncertain = false;
  std::vector<double> weak_width_ratio;  // posterior 90% CI width / prior width
  double min_acceptance = 0.0;
  double max_acceptance = 0.0;
  double seconds = 0.0;
};

struct StudyReport {
  std::vector<std::string> weak_parameters;
  std::vector<ReplicateResult> replicates;
  double training_seconds = 0.0;
  double total_seconds = 0.0;

  int count_covers_ftt() const;
  int count_covers_height() const;
  int count_total_wider() const;
  int count_covers_total_uncertain() const;
  std::vector<double> mean_weak_width_ratio() const;
  /// Smallest per-replicate weak ratio for each weak parameter.
  std::vector<double> min_weak_width_ratio() const;
};

using ProgressFn = std::function<void(const ReplicateResult&)>;

/// Trains once, then runs paired inversions for each replicate seed.
StudyReport run_study(const Config& config, ExecPolicy policy = ExecPolicy::Parallel, const ProgressFn& progress = {});

/// One replicate against already-trained artifacts.
ReplicateResult run_replicate(const Config& config, const TrainingResult& trained, const Eigen::MatrixXd& true_H,
                              int index, ExecPolicy policy = ExecPolicy::Parallel);

std::string format_study_json(const StudyReport& report, const Config& config);
std::string format_study_csv(const StudyReport& report);

}  // namespace emucal
