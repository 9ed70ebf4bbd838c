#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emucal/dimred.hpp"
#include "emucal/emulator.hpp"
#include "emucal/param_space.hpp"
#include "emucal/simulator.hpp"

namespace emucal {

/// Everything needed to rebuild H for a new theta. `hash` is the digest
/// recorded when the artifacts were produced.
struct EmulatorArtifacts {
  ParameterSpace space;
  std::vector<RowBlock> blocks;
  std::vector<MeanSweep> means;
  std::vector<SiteBasis> bases;
  EmulatorModel model;
  std::string hash;

  Index n_regions() const { return bases.empty() ? 0 : bases.front().V.rows(); }
  Index n_obs_total() const;

  /// Throws ArtifactMismatch if shapes disagree or the recorded hash differs
  /// from the digest of the current contents.
  void verify() const;
};

/// Builds artifacts from training outputs and stamps the digest.
EmulatorArtifacts make_artifacts(ParameterSpace space, std::vector<RowBlock> blocks, const Reduction& reduction,
                                 EmulatorModel model);

/// SHA-256 (hex) over the canonical CSV serialisation of the artifacts.
std::string pipeline_hash(const std::vector<SiteBasis>& bases, const EmulatorModel& model,
                          const std::vector<MeanSweep>& means);

/// U diag(d) V^T + H_m for one site.
Eigen::MatrixXd reconstruct_block(const SiteBasis& basis, const MeanSweep& mean, const Eigen::VectorXd& d);

/// Per-site emulator reconstruction, blocks in canonical site order.
/// Entries may be negative. Throws InvalidTheta, ArtifactMismatch.
SensitivityMatrix reconstruct_H(const ThetaVector& theta, const EmulatorArtifacts& artifacts);

/// dH / dt_p for transformed parameter p: U_s diag(B_s e_p) V_s^T on every
/// site block where p is admissible, zero elsewhere.
Eigen::MatrixXd sensitivity_derivative(const EmulatorArtifacts& artifacts, Index parameter);

}  // namespace emucal
