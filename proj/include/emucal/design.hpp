#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emucal/param_space.hpp"

namespace emucal {

/// Training inputs in natural units. Row 0 is the default run; rows 1..n are
/// the Latin hypercube. Row index doubles as the run index.
struct DesignMatrix {
  Eigen::MatrixXd rows;
  std::vector<std::string> columns;

  Index n_runs() const { return rows.rows() - 1; }
  bool operator==(const DesignMatrix&) const = default;
};

struct DesignOptions {
  /// Total point-exchange proposals, split evenly across restarts.
  int exchange_budget = 10000;
  int restarts = 5;
  /// Per-bin resampling attempts for turbulence feasibility.
  int max_resamples = 100;
};

/// Maximin Latin hypercube over range-normalised coordinates, default run
/// prepended. Deterministic in seed. Throws DesignInfeasible.
DesignMatrix generate_lhc(int n, const ParameterSpace& space, std::uint64_t seed, const DesignOptions& options = {});

/// Unoptimised Latin hypercube in normalised [0,1] coordinates (n x d), with
/// turbulence feasibility enforced on the FTT column.
Eigen::MatrixXd random_lhc(int n, const ParameterSpace& space, std::mt19937_64& rng, int max_resamples = 100);

/// Minimum pairwise Euclidean distance between rows of a normalised point set.
double min_pairwise_distance(const Eigen::MatrixXd& normalized);

/// Minimum pairwise distance of rows 1..n in range-normalised coordinates.
double maximin_score(const DesignMatrix& design, const ParameterSpace& space);

/// Rows 1..n in range-normalised coordinates.
Eigen::MatrixXd normalized_runs(const DesignMatrix& design, const ParameterSpace& space);

/// True iff each column of rows 1..n has exactly one point in each of the n bins.
bool is_stratified(const DesignMatrix& design, const ParameterSpace& space);

/// Throws InvariantViolation if any design invariant fails.
void check_design(const DesignMatrix& design, const ParameterSpace& space);

/// CSV with header "p,<parameter names>", run 0 first.
std::string format_design(const DesignMatrix& design);
void write_design(const std::filesystem::path& path, const DesignMatrix& design);
/// Throws ParseError on header mismatch and InvariantViolation on bad content.
DesignMatrix parse_design(const std::string& text, const ParameterSpace& space);
DesignMatrix read_design(const std::filesystem::path& path, const ParameterSpace& space);

}  // namespace emucal
