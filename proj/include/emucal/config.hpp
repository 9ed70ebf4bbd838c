#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emucal/design.hpp"
#include "emucal/dimred.hpp"
#include "emucal/emulator.hpp"
#include "emucal/inversion.hpp"
#include "emucal/param_space.hpp"
#include "emucal/simulator.hpp"

namespace emucal {

/// Synthetic recovery study settings.
struct ExperimentSettings {
  int replicates = 100;
  std::uint64_t seed = 2024;
  double noise_sd = 0.8;
  double x_true_sd = 0.3;        // truth fluxes ~ N(1, sd^2), floored at 0.05
  double ftt_true = 0.5;
  int shifted_site = 4;          // 1-based site number
  double height_true_offset = 150.0;  // metres above the nominal inlet height
  std::vector<std::string> weak_parameters{"BLHS", "BLHU", "BLVS", "BLVU", "LHS", "LHU", "LVS", "LVU"};
};

struct Config {
  ParameterSpace space;
  int n_regions = 149;
  std::uint64_t domain_seed = 7;

  int design_runs = 50;
  std::uint64_t design_seed = 1;
  DesignOptions design;

  std::uint64_t simulator_seed = 11;
  SimulatorSettings simulator;

  ReductionOptions reduction;
  StepwiseOptions stepwise;

  InversionConfig inversion;
  int chains = 1;
  /// Prior flux per region; empty means 1 everywhere.
  std::vector<double> prior_flux;
  /// 1-based regions summed for the headline total; empty means all.
  std::vector<int> total_regions;

  ExperimentSettings experiment;

  Eigen::VectorXd prior_flux_vector() const;
  std::vector<Index> total_subset() const;
  Domain domain() const;
};

/// Built-in parameter table and sites of the reference study.
ParameterSpace reference_space();
std::vector<Site> reference_sites();

/// JSON config; absent keys keep reference defaults. Throws ConfigError, ParseError.
Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);

}  // namespace emucal
