#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "pcc/datagen.hpp"
#include "pcc/experiments.hpp"
#include "pcc/modlearn.hpp"
#include "lasso_oracle.hpp"
#include "test_support.hpp"

using namespace pcc;
using namespace pcc::test;

namespace {

void check_against_oracle(const Instance& d, bool standardize) {
  const auto grid = lambda_grid_per_observation(d.s.size(), -6.0, -0.5, 10);
  LassoOptions opt;
  opt.standardize = standardize;
  opt.tolerance = 1e-9;
  const LassoPath path = fit_lasso_path(d.s, d.x, d.y, grid, opt);
  REQUIRE(path.points.size() == grid.size());
  CHECK(path.all_converged());
  std::vector<double> c(3, 1.0);
  if (standardize) {
    for (Eigen::Index j = 0; j < 3; ++j) c[static_cast<std::size_t>(j)] = population_sd(d.x, j);
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(path.penalty_scale[j] == doctest::Approx(c[j]).epsilon(1e-12));
  std::size_t supports_seen = 0;
  std::size_t last = 4;
  for (const LassoPoint& pt : path.points) {
    const Eigen::VectorXd ref = orthant_oracle(d, pt.lambda, c);
    REQUIRE(ref.size() == 5);
    CHECK(std::abs(pt.alpha0 - ref[0]) < 1e-4);
    CHECK(std::abs(pt.alpha1 - ref[1]) < 1e-4);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(pt.gamma[j] - ref[2 + static_cast<Eigen::Index>(j)]) < 1e-4);
    Eigen::VectorXd mine(5);
    mine << pt.alpha0, pt.alpha1, pt.gamma[0], pt.gamma[1], pt.gamma[2];
    CHECK(objective(d, mine, pt.lambda, c) <= objective(d, ref, pt.lambda, c) + 1e-7);
    CHECK(pt.objective == doctest::Approx(objective(d, mine, pt.lambda, c)).epsilon(1e-9));
    if (pt.active_set().size() != last) ++supports_seen;
    last = pt.active_set().size();
  }
  // The grid is wide enough to visit several support sizes.
  CHECK(supports_seen >= 2);
}

}  // namespace

TEST_SUITE("lasso") {
  TEST_CASE("lambda grid") {
    const auto g = lambda_grid_per_observation(500, -6.0, -2.0, 40);
    REQUIRE(g.size() == 40);
    CHECK(g.front() == doctest::Approx(500 * std::exp(-2.0)));
    CHECK(g.back() == doctest::Approx(500 * std::exp(-6.0)));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
    CHECK(std::log(g[1] / g[0]) == doctest::Approx(-4.0 / 39.0));
  }

  TEST_CASE("objective by hand") {
    FeatureMatrix x(2, 2);
    x << 1, -1, 0, 2;
    const std::vector<double> s{0.5, -1.0};
    const std::vector<std::uint8_t> y{1, 0};
    const std::vector<double> gamma{0.2, -0.1};
    const double eta0 = 0.1 + 0.5 + 0.2 + 0.1, eta1 = 0.1 - 1.0 - 0.2;
    const double expected = std::log1p(std::exp(eta0)) - eta0 + std::log1p(std::exp(eta1)) + 3.0 * (0.2 + 0.1);
    CHECK(lasso_objective(s, x, y, 0.1, 1.0, gamma, 3.0) == doctest::Approx(expected));
    const std::vector<double> scale{2.0, 0.5};
    CHECK(lasso_objective(s, x, y, 0.1, 1.0, gamma, 3.0, scale) ==
          doctest::Approx(expected - 3.0 * 0.3 + 3.0 * (0.4 + 0.05)));
  }

  TEST_CASE("path matches brute-force minimisation, standardised penalty") {
    for (Seed seed : {1u, 2u, 3u}) check_against_oracle(make_instance(200, seed), true);
  }

  TEST_CASE("path matches brute-force minimisation, raw penalty") {
    for (Seed seed : {4u, 5u}) check_against_oracle(make_instance(200, seed), false);
  }

  TEST_CASE("objective never increases across sweeps") {
    const Cohort cohort = build_cohort({});
    const ModificationParams truth = revision_truth(100);
    for (DesignSpec design : {DesignSpec::srs(), DesignSpec::pcc(kSimulationDesign)}) {
      const Sample smp = draw_sample(cohort, design, 300, 4);
      const auto y = sample_labels(cohort, truth, smp.indices, 9);
      std::vector<double> s;
      FeatureMatrix x(static_cast<Eigen::Index>(smp.n()), 100);
      for (std::size_t r = 0; r < smp.n(); ++r) {
        s.push_back(cohort.scores[smp.indices[r]]);
        x.row(static_cast<Eigen::Index>(r)) = cohort.features.row(static_cast<Eigen::Index>(smp.indices[r]));
      }
      std::size_t last_lambda = 0, checks = 0, violations = 0;
      double last = std::numeric_limits<double>::infinity();
      LassoOptions opt;
      opt.on_sweep = [&](std::size_t li, std::size_t, double f) {
        if (li != last_lambda) last = std::numeric_limits<double>::infinity();
        last_lambda = li;
        ++checks;
        if (f > last + 1e-12 * std::abs(last)) ++violations;
        last = f;
      };
      const LassoPath path = fit_lasso_path(s, x, y, lambda_grid_per_observation(s.size(), -6, -2, 40), opt);
      CHECK(checks > 40);
      CHECK(violations == 0);
      CHECK(path.all_converged());
      // Warm start: each lambda's first sweep does not exceed the previous solution's objective at the new lambda.
      for (std::size_t i = 1; i < path.points.size(); ++i) {
        const LassoPoint& prev = path.points[i - 1];
        const double start = lasso_objective(s, x, y, prev.alpha0, prev.alpha1, prev.gamma, path.points[i].lambda,
                                             path.penalty_scale);
        CHECK(path.points[i].objective <= start + 1e-9 * std::abs(start));
      }
    }
  }

  TEST_CASE("KKT conditions hold at each path point") {
    const Instance d = make_instance(300, 11);
    const auto grid = lambda_grid_per_observation(300, -5, -1, 6);
    LassoOptions opt;
    opt.tolerance = 1e-10;
    const LassoPath path = fit_lasso_path(d.s, d.x, d.y, grid, opt);
    for (const LassoPoint& pt : path.points) {
      std::vector<double> g(5, 0.0);
      for (std::size_t i = 0; i < d.s.size(); ++i) {
        double eta = pt.alpha0 + pt.alpha1 * d.s[i];
        for (Eigen::Index j = 0; j < 3; ++j) eta += pt.gamma[static_cast<std::size_t>(j)] * d.x(static_cast<Eigen::Index>(i), j);
        const double r = test::sigmoid(eta) - d.y[i];
        g[0] += r;
        g[1] += r * d.s[i];
        for (Eigen::Index j = 0; j < 3; ++j) g[2 + static_cast<std::size_t>(j)] += r * d.x(static_cast<Eigen::Index>(i), j);
      }
      CHECK(std::abs(g[0]) < 1e-5);
      CHECK(std::abs(g[1]) < 1e-5);
      for (std::size_t j = 0; j < 3; ++j) {
        const double bound = pt.lambda * path.penalty_scale[j];
        if (pt.gamma[j] == 0.0) {
          CHECK(std::abs(g[2 + j]) <= bound * (1 + 1e-6) + 1e-6);
        } else {
          CHECK(g[2 + j] == doctest::Approx(-bound * (pt.gamma[j] > 0 ? 1.0 : -1.0)).epsilon(1e-4));
        }
      }
    }
  }

  TEST_CASE("full shrinkage reduces to the recalibration MLE") {
    const Instance d = make_instance(200, 21);
    const std::vector<double> grid{1e6};
    const LassoPath path = fit_lasso_path(d.s, d.x, d.y, grid);
    const LassoPoint& pt = path.points.front();
    CHECK(pt.active_set().empty());
    const RecalFit fit = fit_recalibration(d.s, d.y, RecalConstraint::free_both);
    CHECK(pt.alpha0 == doctest::Approx(fit.alpha0).epsilon(1e-6));
    CHECK(pt.alpha1 == doctest::Approx(fit.alpha1).epsilon(1e-6));
  }

  TEST_CASE("active set and convergence flags") {
    LassoPoint pt;
    pt.gamma = {0.0, 0.3, 0.0, -1e-3};
    CHECK(pt.active_set() == std::vector<std::size_t>{1, 3});
    LassoPath path;
    path.points = {pt, pt};
    path.points[0].converged = path.points[1].converged = true;
    CHECK(path.all_converged());
    path.points[1].converged = false;
    CHECK_FALSE(path.all_converged());
  }

  TEST_CASE("sweep cap reports non-convergence") {
    const Instance d = make_instance(200, 2);
    LassoOptions opt;
    opt.max_sweeps = 1;
    opt.tolerance = 1e-14;
    const LassoPath path = fit_lasso_path(d.s, d.x, d.y, lambda_grid_per_observation(200, -6, -2, 3), opt);
    CHECK_FALSE(path.all_converged());
    for (const LassoPoint& pt : path.points) CHECK(pt.sweeps == 1);
  }
}
