#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "emucal/config.hpp"
#include "emucal/dimred.hpp"
#include "emucal/emulator.hpp"
#include "emucal/errors.hpp"
#include "emucal/experiment.hpp"
#include "support.hpp"

using namespace emucal;

namespace {

/// Normal-equation solve, independent of the QR path under test.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

/// Greedy forward path computed by brute force over every candidate.
std::vector<Index> greedy_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Index n = X.rows();
  auto score = [&](const std::vector<Index>& cols) {
    Eigen::MatrixXd sub(n, static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(j) = X.col(cols[j]);
    const double rss = (y - sub * normal_equations(sub, y)).squaredNorm();
    return n * std::log(rss / n) + 2.0 * cols.size();
  };
  std::vector<Index> active{0}, order;
  double current = score(active);
  for (;;) {
    Index best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (Index j = 1; j < X.cols(); ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      auto trial = active;
      trial.push_back(j);
      const double s = score(trial);
      if (s < best_score) {
        best = j;
        best_score = s;
      }
    }
    if (best < 0 || !(best_score < current)) break;
    active.push_back(best);
    order.push_back(best);
    current = best_score;
  }
  return order;
}

RegressionDesign reference_site_design(std::uint64_t seed, int n = 50) {
  const ParameterSpace space = reference_space();
  return build_regression_design(generate_lhc(n, space, seed, {1000, 1, 100}), space, 0);
}

}  // namespace

TEST_SUITE("emulator") {
  TEST_CASE("fit_ols small cases") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 1, 1, 2, 1, 3, 1, 4;
    const Eigen::VectorXd y = 2.0 * X.col(1);
    const OlsFit f = fit_ols(X, y);
    CHECK(f.coefficients(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.coefficients(1) == doctest::Approx(2.0));
    CHECK(f.rss < 1e-20);

    const OlsFit c = fit_ols(Eigen::MatrixXd::Ones(5, 1), Eigen::VectorXd::Constant(5, 3.5));
    CHECK(c.coefficients(0) == doctest::Approx(3.5));
    CHECK(c.rss < 1e-20);

    Eigen::MatrixXd dup(5, 2);
    dup.col(0).setOnes();
    dup.col(1).setOnes();
    CHECK_THROWS_AS(fit_ols(dup, Eigen::VectorXd::Ones(5)), RankDeficient);
    CHECK_THROWS_AS(fit_ols(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)), DimensionMismatch);
  }

  TEST_CASE("fit_ols agrees with the normal equations; residuals orthogonal") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd X = testing::random_matrix(51, 5, rng);
      const Eigen::VectorXd y = testing::random_matrix(51, 1, rng).col(0);
      const OlsFit f = fit_ols(X, y);
      const Eigen::VectorXd oracle = normal_equations(X, y);
      CHECK((f.coefficients - oracle).norm() < 1e-8 * std::max(1.0, oracle.norm()));
      CHECK((X.transpose() * (y - X * f.coefficients)).norm() < 1e-8 * X.norm() * y.norm());
    }
  }

  TEST_CASE("aic") {
    CHECK(aic(10, 10, 1) == doctest::Approx(2.0));
    CHECK(aic(10, 10, 2) - aic(10, 10, 1) == doctest::Approx(2.0));
    CHECK(aic(0.0, 10, 1) == -std::numeric_limits<double>::infinity());
    CHECK(aic_for_fit(1e-30, 10, 2, 1.0) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(aic(-1, 10, 1), DomainError);
  }

  TEST_CASE("stepwise path matches a brute-force greedy oracle") {
    std::mt19937_64 rng(2);
    const RegressionDesign d = reference_site_design(3);
    std::normal_distribution<double> noise(0, 1);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd y(d.X.rows());
      for (Index i = 0; i < y.size(); ++i) y(i) = 0.8 * d.X(i, 2) - 0.5 * d.X(i, 7) + 0.3 * d.X(i, 13) + noise(rng);
      const SingularValueModel m = forward_stepwise(d, y);
      CHECK(m.order == greedy_oracle(d.X, y));
      CHECK(m.selected[0]);
      for (std::size_t k = 1; k < m.aic_path.size(); ++k) CHECK(m.aic_path[k] < m.aic_path[k - 1]);
      CHECK(m.aic_path.size() == m.order.size() + 1);
    }
  }

  TEST_CASE("null response selects few columns") {
    // Independent numpy simulation of the same procedure (15 candidates, n = 51)
    // gives a mean selected count of about 3.1 under the null.
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0, 1);
    double total = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
      const RegressionDesign d = reference_site_design(100 + rep);
      Eigen::VectorXd y(d.X.rows());
      for (Index i = 0; i < y.size(); ++i) y(i) = noise(rng);
      total += static_cast<double>(forward_stepwise(d, y).order.size());
    }
    const double mean = total / reps;
    CHECK(mean > 2.5);
    CHECK(mean < 3.8);
  }

  TEST_CASE("planted FTT signal enters first") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0, 0.1);
    const RegressionDesign d = reference_site_design(6);
    const auto it = std::find(d.labels.begin(), d.labels.end(), "FTT");
    const Index ftt = it - d.labels.begin();
    Eigen::VectorXd y(d.X.rows());
    for (Index i = 0; i < y.size(); ++i) y(i) = 3.0 * d.X(i, ftt) + noise(rng);
    const auto m = forward_stepwise(d, y);
    REQUIRE_FALSE(m.order.empty());
    CHECK(m.order.front() == ftt);
  }

  TEST_CASE("delta raises the bar for additions") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0, 1);
    const RegressionDesign d = reference_site_design(8);
    Eigen::VectorXd y(d.X.rows());
    for (Index i = 0; i < y.size(); ++i) y(i) = 0.3 * d.X(i, 3) + noise(rng);
    CHECK(forward_stepwise(d, y, {1e6}).order.empty());
    CHECK(forward_stepwise(d, y, {10}).order.size() <= forward_stepwise(d, y).order.size());
  }

  TEST_CASE("site masking: each site sees only its own release parameters") {
    const Config cfg = testing::small_config(6, 6, 12);
    const auto t = train_pipeline(cfg);
    for (int s = 0; s < 4; ++s) {
      const auto& emu = t.artifacts.model.sites[s];
      CHECK(emu.B.cols() == 16);
      for (Index p : emu.parameters) {
        const auto site = cfg.space.spec(p).site_index;
        CHECK((!site || *site == s));
      }
    }
  }

  TEST_CASE("serial and parallel fits agree") {
    const Config cfg = testing::small_config(6, 6, 12);
    const auto t = train_pipeline(cfg);
    const auto ser = fit_emulator(t.design, cfg.space, t.reduction.tables, {}, ExecPolicy::Serial);
    for (int s = 0; s < 4; ++s) CHECK((ser.sites[s].B - t.artifacts.model.sites[s].B).norm() == 0.0);
  }

  TEST_CASE("selection proportions") {
    SiteEmulator site;
    site.labels = {"INT", "A", "B"};
    site.parameters = {0, 1};
    SingularValueModel m1, m2;
    m1.selected = {true, true, false};
    m2.selected = {true, false, false};
    m1.coefficients = m2.coefficients = Eigen::Vector3d(1, 0, 0);
    site.models = {m1, m2};
    assemble_coefficients(site);
    const auto u = selection_proportions(site);
    CHECK(u.proportions(0) == 1.0);
    CHECK(u.proportions(1) == doctest::Approx(0.5));
    CHECK(u.proportions(2) == 0.0);
    const auto w = selection_proportions(site, Eigen::Vector2d(0.9, 0.1));
    CHECK(w.proportions(0) == doctest::Approx(1.0));
    CHECK(w.proportions(1) == doctest::Approx(0.9));
    CHECK(w.proportions(2) == 0.0);
    CHECK(selection_proportions(site, Eigen::Vector2d(0.5, 0.5)).proportions.isApprox(u.proportions));
  }

  TEST_CASE("prediction with zero slopes is the intercept") {
    const ParameterSpace space = testing::space_with_sites(testing::small_sites(2));
    EmulatorModel model;
    model.sites.resize(4);
    for (int s = 0; s < 4; ++s) {
      model.sites[s].parameters = space.admissible_for_site(s);
      model.sites[s].B = Eigen::MatrixXd::Zero(2, 16);
      model.sites[s].B.col(0) << 4.0, -1.0;
    }
    std::mt19937_64 rng(9);
    const auto d = predict_singular_values(space.unflatten(testing::random_theta(space, rng)), model, 2, space);
    CHECK(d(0) == 4.0);
    CHECK(d(1) == -1.0);
    auto bad = space.default_theta();
    bad.xi(0) = 500;
    CHECK_THROWS_AS(predict_singular_values(bad, model, 0, space), InvalidTheta);
  }

  TEST_CASE("leave-one-out prediction beats the constant mean on the leading singular values") {
    Config cfg = testing::small_config(10, 10, 30);
    const auto t = train_pipeline(cfg);
    for (int s = 0; s < 4; ++s) {
      const RegressionDesign full = build_regression_design(t.design, cfg.space, s);
      const Eigen::MatrixXd& table = t.reduction.tables[s];
      const Eigen::VectorXd weights = variance_explained(t.reduction.bases[s].s);
      double won = 0.0;
      for (Index i = 0; i < table.cols(); ++i) {
        double err_model = 0, err_mean = 0;
        for (Index out = 0; out < table.rows(); ++out) {
          RegressionDesign d = full;
          Eigen::VectorXd y(table.rows() - 1);
          d.X.resize(table.rows() - 1, full.X.cols());
          for (Index r = 0, k = 0; r < table.rows(); ++r) {
            if (r == out) continue;
            d.X.row(k) = full.X.row(r);
            y(k++) = table(r, i);
          }
          const auto m = forward_stepwise(d, y);
          err_model += std::pow(full.X.row(out).dot(m.coefficients) - table(out, i), 2);
          err_mean += std::pow(y.mean() - table(out, i), 2);
        }
        if (err_model < err_mean) won += weights(i);
      }
      CHECK_MESSAGE(won >= 0.8, "site " << s + 1 << " weighted win share " << won);
    }
  }
}
