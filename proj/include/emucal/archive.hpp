#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "emucal/design.hpp"
#include "emucal/dimred.hpp"
#include "emucal/emulator.hpp"
#include "emucal/reconstruct.hpp"
#include "emucal/simulator.hpp"

namespace emucal::archive {

using NamedText = std::pair<std::string, std::string>;

std::string sha256_hex(const std::string& bytes);

/// Canonical per-site CSV files (relative path, content) for the basis and
/// model archives. The pipeline hash is taken over exactly these bytes.
std::vector<NamedText> serialize_artifacts(const std::vector<SiteBasis>& bases, const EmulatorModel& model,
                                           const std::vector<MeanSweep>& means);

/// Writes basis/, model/, layout.csv and pipeline_hash.txt under dir.
void write_artifacts(const std::filesystem::path& dir, const EmulatorArtifacts& artifacts);

/// Reads and verifies an artifact directory. Throws ArtifactMismatch, ParseError.
EmulatorArtifacts read_artifacts(const std::filesystem::path& dir, const ParameterSpace& space);

/// One CSV per run plus manifest.json mapping run_index -> theta -> file.
void write_h_archive(const std::filesystem::path& dir, const std::vector<SensitivityMatrix>& runs,
                     const DesignMatrix& design, const Domain& domain);

struct HArchive {
  DesignMatrix design;
  std::vector<SensitivityMatrix> runs;
};

HArchive read_h_archive(const std::filesystem::path& dir, const ParameterSpace& space);

std::string format_sensitivity(const SensitivityMatrix& H, const std::vector<Site>& sites);
SensitivityMatrix parse_sensitivity(const std::string& text, const std::vector<Site>& sites);

/// Rows are runs; columns s<site>_<index>.
std::string format_singular_value_tables(const std::vector<Eigen::MatrixXd>& tables, const std::vector<Site>& sites);

/// Proportion diagnostics, one row per site, generic labels (X_s, Y_s, Z_s).
std::string format_proportions(const EmulatorModel& model, const ParameterSpace& space,
                               const std::vector<Eigen::VectorXd>& weights);

}  // namespace emucal::archive
