#include <doctest.h>

#include <numeric>

#include "emucal/errors.hpp"
#include "emucal/inversion.hpp"
#include "emucal/summary.hpp"
#include "support.hpp"

using namespace emucal;

TEST_SUITE("summary") {
  TEST_CASE("quantiles interpolate between order statistics") {
    Eigen::VectorXd v(100);
    std::iota(v.data(), v.data() + 100, 1.0);
    const Summary s = posterior_summary(v);
    CHECK(s.lo == doctest::Approx(5.95));
    CHECK(s.hi == doctest::Approx(95.05));
    CHECK(s.mean == doctest::Approx(50.5));
    CHECK(s.lo <= s.mean);
    CHECK(s.mean <= s.hi);
    CHECK(quantile({3.0}, 0.3) == 3.0);
    CHECK(quantile({1.0, 2.0}, 0.5) == 1.5);
    CHECK_THROWS_AS(quantile({}, 0.5), TooFewSamples);
  }

  TEST_CASE("constant chain and sample minimum") {
    const Summary s = posterior_summary(Eigen::VectorXd::Constant(200, 2.5));
    CHECK(s.mean == 2.5);
    CHECK(s.lo == 2.5);
    CHECK(s.hi == 2.5);
    CHECK_THROWS_AS(posterior_summary(Eigen::VectorXd::Zero(99)), TooFewSamples);
  }

  TEST_CASE("scaled prior shift") {
    CHECK(scaled_prior_shift({40, 100}, 70) == 0.0);
    CHECK(scaled_prior_shift({40, 100}, 100) == 0.5);
    CHECK(std::abs(scaled_prior_shift({40, 100}, 73.35) - 0.0558) < 1e-4);
    CHECK_THROWS_AS(scaled_prior_shift({1, 1}, 1), DegenerateInterval);
  }

  TEST_CASE("interval overlap") {
    CHECK(ci_overlap({0, 2}, {0, 2}) == 100.0);
    CHECK(ci_overlap({0, 1}, {2, 3}) == 0.0);
    CHECK(ci_overlap({0, 1}, {1, 2}) == 0.0);
    CHECK(ci_overlap({0, 2}, {1, 3}) == doctest::Approx(100.0 / 3.0));
    CHECK(ci_overlap({0, 2}, {1, 3}) == ci_overlap({1, 3}, {0, 2}));
    CHECK(ci_overlap({1, 1}, {1, 1}) == 100.0);
  }

  TEST_CASE("regional totals") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(150, 4);
    const Eigen::VectorXd flux = Eigen::Vector4d(1, 2, 3, 4);
    const Summary all = regional_total(ones, {0, 1, 2, 3}, flux);
    CHECK(all.mean == 10.0);
    CHECK(all.lo == 10.0);
    CHECK(all.hi == 10.0);

    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = testing::random_matrix(150, 4, rng);
    const Summary one = regional_total(x, {2}, Eigen::VectorXd::Ones(4));
    const Summary direct = posterior_summary(x.col(2));
    CHECK(one.mean == direct.mean);
    CHECK(one.lo == direct.lo);
    CHECK(one.hi == direct.hi);

    CHECK_THROWS_AS(regional_total(x, {}, flux), EmptySubset);
    CHECK_THROWS_AS(regional_total(x, {0}, Eigen::VectorXd::Ones(3)), DimensionMismatch);
  }

  TEST_CASE("total credible interval covers the truth across replicates") {
    // Operator known exactly, data drawn at a random flux truth.
    const int replicates = 100;
    int covered = 0;
    for (int k = 0; k < replicates; ++k) {
      std::mt19937_64 rng(1000 + k);
      const int n = 40, R = 10;
      const Eigen::MatrixXd H = testing::random_matrix(n, R, rng).cwiseAbs();
      InversionConfig c;
      c.n_iter = 6000;
      c.thin = 3;
      c.seed = 50 + k;
      std::normal_distribution<double> prior(c.priors.x_mean, c.priors.x_sd);
      Eigen::VectorXd x_true(R);
      for (Index r = 0; r < R; ++r) x_true(r) = prior(rng);
      std::normal_distribution<double> noise(0.0, 0.5);
      Eigen::VectorXd y = H * x_true;
      for (Index i = 0; i < n; ++i) y(i) += noise(rng);

      InversionProblem p;
      p.y = y;
      p.fixed_H = H;
      const Chain chain = run_chain(p, c);
      std::vector<Index> subset(R);
      std::iota(subset.begin(), subset.end(), 0);
      const Summary total = regional_total(chain.samples.leftCols(R), subset, Eigen::VectorXd::Ones(R));
      covered += total.covers(x_true.sum()) ? 1 : 0;
    }
    CHECK(covered >= 80);
  }
}
