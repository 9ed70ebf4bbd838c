#include "emucal/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emucal/csv.hpp"
#include "emucal/errors.hpp"

namespace emucal {

namespace {

bool turbulence_feasible(double u, const ParameterSpace& space, Index column) {
  const double sigma_u = denormalize(u, space.spec(column));
  return derive_coupled_turbulence(sigma_u, space.coupling()).feasible;
}

double squared_distance(const Eigen::MatrixXd& m, Index a, Index b) {
  return (m.row(a) - m.row(b)).squaredNorm();
}

/// Pairwise squared distances with an incremental update after a row swap.
class DistanceTable {
 public:
  explicit DistanceTable(const Eigen::MatrixXd& points) : d2_(points.rows(), points.rows()) {
    for (Index i = 0; i < points.rows(); ++i)
      for (Index j = i; j < points.rows(); ++j) d2_(i, j) = d2_(j, i) = squared_distance(points, i, j);
  }

  void refresh_row(const Eigen::MatrixXd& points, Index a) {
    for (Index j = 0; j < points.rows(); ++j) d2_(a, j) = d2_(j, a) = squared_distance(points, a, j);
  }

  /// Minimum off-diagonal entry and one pair attaining it.
  double min_pair(Index& i_out, Index& j_out) const {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < d2_.rows(); ++i)
      for (Index j = i + 1; j < d2_.rows(); ++j)
        if (d2_(i, j) < best) {
          best = d2_(i, j);
          i_out = i;
          j_out = j;
        }
    return best;
  }

 private:
  Eigen::MatrixXd d2_;
};

/// Point exchange targeted at the closest pair; a swap is kept only if it
/// strictly increases the minimum distance.
void optimize_maximin(Eigen::MatrixXd& points, int proposals, std::mt19937_64& rng) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (n < 3 || d < 1) return;
  DistanceTable table(points);
  Index ci = 0, cj = 1;
  double current = table.min_pair(ci, cj);
  std::uniform_int_distribution<Index> pick_col(0, d - 1);
  std::uniform_int_distribution<Index> pick_row(0, n - 2);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < proposals; ++k) {
    const Index a = coin(rng) ? ci : cj;
    Index b = pick_row(rng);
    if (b >= a) ++b;
    const Index c = pick_col(rng);
    std::swap(points(a, c), points(b, c));
    table.refresh_row(points, a);
    table.refresh_row(points, b);
    Index ni = 0, nj = 1;
    const double candidate = table.min_pair(ni, nj);
    if (candidate > current) {
      current = candidate;
      ci = ni;
      cj = nj;
    } else {
      std::swap(points(a, c), points(b, c));
      table.refresh_row(points, a);
      table.refresh_row(points, b);
    }
  }
}

}  // namespace

Eigen::MatrixXd random_lhc(int n, const ParameterSpace& space, std::mt19937_64& rng, int max_resamples) {
  const Index d = space.dimension();
  Eigen::MatrixXd points(n, d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto ftt = space.ftt_index();
  std::vector<int> perm(n);
  for (Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      double u = (perm[i] + unit(rng)) / n;
      if (ftt && *ftt == j) {
        int attempts = 0;
        while (!turbulence_feasible(u, space, j)) {
          if (++attempts > max_resamples)
            throw DesignInfeasible("no feasible turbulence value in bin " + std::to_string(perm[i]));
          u = (perm[i] + unit(rng)) / n;
        }
      }
      points(i, j) = u;
    }
  }
  return points;
}

double min_pairwise_distance(const Eigen::MatrixXd& normalized) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < normalized.rows(); ++i)
    for (Index j = i + 1; j < normalized.rows(); ++j) best = std::min(best, squared_distance(normalized, i, j));
  return std::sqrt(best);
}

DesignMatrix generate_lhc(int n, const ParameterSpace& space, std::uint64_t seed, const DesignOptions& options) {
  if (n < 2) throw DomainError("design needs n >= 2");
  std::mt19937_64 rng(seed);
  const int restarts = std::max(1, options.restarts);
  const int per_restart = std::max(0, options.exchange_budget) / restarts;

  Eigen::MatrixXd best;
  double best_score = -1.0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::MatrixXd points = random_lhc(n, space, rng, options.max_resamples);
    optimize_maximin(points, per_restart, rng);
    const double score = min_pairwise_distance(points);
    if (score > best_score) {
      best_score = score;
      best = std::move(points);
    }
  }

  DesignMatrix design;
  design.columns = space.column_names();
  design.rows.resize(n + 1, space.dimension());
  design.rows.row(0) = space.default_flat().transpose();
  for (int i = 0; i < n; ++i)
    for (Index j = 0; j < space.dimension(); ++j) design.rows(i + 1, j) = denormalize(best(i, j), space.spec(j));
  return design;
}

Eigen::MatrixXd normalized_runs(const DesignMatrix& design, const ParameterSpace& space) {
  const Index n = design.n_runs();
  Eigen::MatrixXd out(n, design.rows.cols());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = normalize(design.rows(i + 1, j), space.spec(j));
  return out;
}

double maximin_score(const DesignMatrix& design, const ParameterSpace& space) {
  return min_pairwise_distance(normalized_runs(design, space));
}

bool is_stratified(const DesignMatrix& design, const ParameterSpace& space) {
  const Eigen::MatrixXd u = normalized_runs(design, space);
  const Index n = u.rows();
  for (Index j = 0; j < u.cols(); ++j) {
    std::vector<int> counts(n, 0);
    for (Index i = 0; i < n; ++i) {
      if (!(u(i, j) >= 0.0 && u(i, j) <= 1.0)) return false;
      const Index bin = std::min<Index>(n - 1, static_cast<Index>(std::floor(u(i, j) * n)));
      if (++counts[bin] > 1) return false;
    }
  }
  return true;
}

void check_design(const DesignMatrix& design, const ParameterSpace& space) {
  if (design.columns != space.column_names()) throw InvariantViolation("design columns do not match parameters");
  if (design.rows.rows() < 3) throw InvariantViolation("design needs at least two runs plus the default");
  const Eigen::VectorXd def = space.default_flat();
  for (Index j = 0; j < def.size(); ++j)
    if (std::abs(design.rows(0, j) - def(j)) > 1e-12 * std::max(1.0, std::abs(def(j))))
      throw InvariantViolation("row 0 is not the default run (" + design.columns[j] + ")");
  const auto ftt = space.ftt_index();
  for (Index i = 0; i < design.rows.rows(); ++i) {
    const auto v = validate_flat(design.rows.row(i).transpose(), space);
    if (!v.ok) throw InvariantViolation("run " + std::to_string(i) + " out of range: " + v.violations.front());
    if (ftt && !derive_coupled_turbulence(design.rows(i, *ftt), space.coupling()).feasible)
      throw InvariantViolation("run " + std::to_string(i) + " has infeasible turbulence");
  }
  if (!is_stratified(design, space)) throw InvariantViolation("runs 1..n are not Latin-stratified");
}

std::string format_design(const DesignMatrix& design) {
  std::vector<std::string> header{"p"};
  header.insert(header.end(), design.columns.begin(), design.columns.end());
  std::vector<std::string> labels;
  for (Index i = 0; i < design.rows.rows(); ++i) labels.push_back(std::to_string(i));
  return csv::format_matrix(design.rows, header, labels);
}

void write_design(const std::filesystem::path& path, const DesignMatrix& design) {
  csv::write_text(path, format_design(design));
}

DesignMatrix parse_design(const std::string& text, const ParameterSpace& space) {
  const csv::Table table = csv::parse(text);
  std::vector<std::string> expected{"p"};
  for (const auto& name : space.column_names()) expected.push_back(name);
  if (table.header != expected) throw ParseError("design header does not match the parameter specification");
  DesignMatrix design;
  design.columns = space.column_names();
  Eigen::MatrixXd all = csv::to_matrix(table);
  for (Index i = 0; i < all.rows(); ++i)
    if (all(i, 0) != static_cast<double>(i)) throw ParseError("run indices must be 0..n in order");
  design.rows = all.rightCols(all.cols() - 1);
  check_design(design, space);
  return design;
}

DesignMatrix read_design(const std::filesystem::path& path, const ParameterSpace& space) {
  return parse_design(csv::read_text(path), space);
}

}  // namespace emucal
