#include "emucal/reconstruct.hpp"

#include "emucal/archive.hpp"
#include "emucal/errors.hpp"

namespace emucal {

Index EmulatorArtifacts::n_obs_total() const {
  Index n = 0;
  for (const auto& b : blocks) n += b.rows;
  return n;
}

void EmulatorArtifacts::verify() const {
  const auto n_sites = static_cast<std::size_t>(space.n_sites());
  if (blocks.size() != n_sites || means.size() != n_sites || bases.size() != n_sites || model.sites.size() != n_sites)
    throw ArtifactMismatch("artifact site counts disagree");
  for (std::size_t s = 0; s < n_sites; ++s) {
    const auto& b = bases[s];
    if (b.U.rows() != blocks[s].rows || means[s].row_means.size() != blocks[s].rows)
      throw ArtifactMismatch("site " + std::to_string(s + 1) + " row count differs");
    if (b.V.rows() != n_regions() || means[s].col_means.size() != n_regions())
      throw ArtifactMismatch("site " + std::to_string(s + 1) + " region count differs");
    if (model.sites[s].B.rows() != b.rank() ||
        model.sites[s].B.cols() != 1 + static_cast<Index>(model.sites[s].parameters.size()))
      throw ArtifactMismatch("site " + std::to_string(s + 1) + " coefficient shape differs");
  }
  const std::string digest = pipeline_hash(bases, model, means);
  if (digest != hash) throw ArtifactMismatch("pipeline hash " + digest + " does not match recorded " + hash);
}

EmulatorArtifacts make_artifacts(ParameterSpace space, std::vector<RowBlock> blocks, const Reduction& reduction,
                                 EmulatorModel model) {
  EmulatorArtifacts a;
  a.space = std::move(space);
  a.blocks = std::move(blocks);
  a.means = reduction.means;
  a.bases = reduction.bases;
  a.model = std::move(model);
  a.hash = pipeline_hash(a.bases, a.model, a.means);
  a.verify();
  return a;
}

std::string pipeline_hash(const std::vector<SiteBasis>& bases, const EmulatorModel& model,
                          const std::vector<MeanSweep>& means) {
  std::string payload;
  for (const auto& [name, content] : archive::serialize_artifacts(bases, model, means)) {
    payload += name;
    payload += '\n';
    payload += content;
  }
  return archive::sha256_hex(payload);
}

Eigen::MatrixXd reconstruct_block(const SiteBasis& basis, const MeanSweep& mean, const Eigen::VectorXd& d) {
  if (d.size() != basis.rank()) throw DimensionMismatch("singular value vector length differs from basis rank");
  return basis.U * d.asDiagonal() * basis.V.transpose() + mean.matrix();
}

SensitivityMatrix reconstruct_H(const ThetaVector& theta, const EmulatorArtifacts& a) {
  if (a.bases.size() != a.blocks.size() || a.model.sites.size() != a.blocks.size())
    throw ArtifactMismatch("artifact site counts disagree");
  SensitivityMatrix H;
  H.blocks = a.blocks;
  H.values.resize(a.n_obs_total(), a.n_regions());
  for (std::size_t s = 0; s < a.blocks.size(); ++s) {
    const Eigen::VectorXd d = predict_singular_values(theta, a.model, static_cast<int>(s), a.space);
    H.block(static_cast<int>(s)) = reconstruct_block(a.bases[s], a.means[s], d);
  }
  return H;
}

Eigen::MatrixXd sensitivity_derivative(const EmulatorArtifacts& a, Index parameter) {
  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(a.n_obs_total(), a.n_regions());
  for (std::size_t s = 0; s < a.blocks.size(); ++s) {
    const auto& emu = a.model.sites[s];
    for (std::size_t j = 0; j < emu.parameters.size(); ++j) {
      if (emu.parameters[j] != parameter) continue;
      const Eigen::VectorXd slope = emu.B.col(static_cast<Index>(j) + 1);
      dH.middleRows(a.blocks[s].begin, a.blocks[s].rows) = a.bases[s].U * slope.asDiagonal() * a.bases[s].V.transpose();
    }
  }
  return dH;
}

}  // namespace emucal
