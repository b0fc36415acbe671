#include <doctest.h>

#include <cmath>
#include <limits>

#include "pcc/datagen.hpp"
#include "pcc/errors.hpp"
#include "pcc/information.hpp"
#include "test_support.hpp"

using namespace pcc;

namespace {

SourceModel source_for(std::size_t p, double prevalence) {
  return {logit(prevalence), simulation_coefficients(p)};
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("simulation coefficients") {
    const auto b = simulation_coefficients(100);
    REQUIRE(b.size() == 100);
    for (std::size_t j = 0; j < 10; ++j) CHECK(b[j] == 0.7);
    for (std::size_t j = 10; j < 20; ++j) CHECK(b[j] == -0.7);
    for (std::size_t j = 20; j < 100; ++j) CHECK(b[j] == 0.0);
    CHECK(simulation_coefficients(20).size() == 20);
    CHECK_THROWS_AS(simulation_coefficients(19), InputError);
  }

  TEST_CASE("logit and expit are inverse") {
    for (double p : {1e-6, 0.1, 0.5, 0.9, 1 - 1e-6}) CHECK(expit(logit(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(logit(0.5) == 0.0);
    CHECK(expit(800.0) == 1.0);
    CHECK(expit(-800.0) >= 0.0);
    CHECK(std::isfinite(expit(-800.0)));
  }

  TEST_CASE("LDA cohort scores follow the induced logistic model") {
    const std::size_t n = 20000, p = 100;
    const double pi0 = 0.10;
    const SourceModel src = source_for(p, pi0);
    const Cohort c = generate_lda_cohort(n, p, pi0, src, 11);
    REQUIRE(c.size() == n);
    REQUIRE(c.dim() == p);
    CHECK_FALSE(c.labels.has_value());
    CHECK(c.prevalence_initial == pi0);
    const auto recomputed = compute_scores(c.features, src);
    for (std::size_t i = 0; i < n; i += 97) CHECK(c.scores[i] == doctest::Approx(recomputed[i]).epsilon(1e-12));

    // E[expit(S)] = P(Y0 = 1) = pi0 by the law of total probability.
    double pbar = 0.0;
    for (double s : c.scores) pbar += expit(s);
    pbar /= static_cast<double>(n);
    CHECK(pbar == doctest::Approx(pi0).epsilon(0.08));

    // Mixture moments: with b = |beta|^2,
    // E[S] = logit(pi0) + b (pi0 - 1/2), Var[S] = b + b^2 pi0 (1 - pi0).
    const double b = 20 * 0.49;
    const double mean_s = logit(pi0) + b * (pi0 - 0.5);
    const double var_s = b + b * b * pi0 * (1 - pi0);
    CHECK(test::mean(c.scores) == doctest::Approx(mean_s).epsilon(0.02));
    CHECK(test::sd(c.scores) == doctest::Approx(std::sqrt(var_s)).epsilon(0.03));

    // Noise features are standard normal, marginally.
    std::vector<double> x50(n);
    for (std::size_t i = 0; i < n; ++i) x50[i] = c.features(static_cast<Eigen::Index>(i), 50);
    CHECK(std::abs(test::mean(x50)) < 0.03);
    CHECK(test::sd(x50) == doctest::Approx(1.0).epsilon(0.03));
  }

  TEST_CASE("LDA cohort is reproducible and seed dependent") {
    const SourceModel src = source_for(20, 0.5);
    const Cohort a = generate_lda_cohort(500, 20, 0.5, src, 3);
    const Cohort b = generate_lda_cohort(500, 20, 0.5, src, 3);
    const Cohort c = generate_lda_cohort(500, 20, 0.5, src, 4);
    CHECK(a.scores == b.scores);
    CHECK(a.features == b.features);
    CHECK(a.scores != c.scores);
    // Rows come from per-row streams: a longer cohort extends a shorter one.
    const Cohort longer = generate_lda_cohort(800, 20, 0.5, src, 3);
    for (std::size_t i = 0; i < 500; ++i) CHECK(longer.scores[i] == a.scores[i]);
  }

  TEST_CASE("LDA generator rejects an inconsistent source intercept") {
    SourceModel src = source_for(20, 0.1);
    src.intercept = 0.0;
    CHECK_THROWS_AS(generate_lda_cohort(10, 20, 0.1, src, 1), InputError);
    CHECK_THROWS_AS(generate_lda_cohort(10, 20, 1.5, source_for(20, 0.1), 1), InputError);
  }

  TEST_CASE("normal score cohort") {
    const Cohort c = generate_normal_score_cohort(10000, -1.5, 1.0, 9);
    CHECK(c.dim() == 0);
    CHECK_FALSE(c.has_features());
    CHECK(test::mean(c.scores) == doctest::Approx(-1.5).epsilon(0.02));
    CHECK(test::sd(c.scores) == doctest::Approx(1.0).epsilon(0.03));
    const Cohort d = generate_normal_score_cohort(10, 2.0, 0.0, 9);
    for (double s : d.scores) CHECK(s == 2.0);
  }

  TEST_CASE("linear predictor by hand") {
    Cohort c;
    c.features.resize(2, 3);
    c.features << 1, 2, 3, -1, 0, 0.5;
    c.scores = {0.5, -2.0};
    ModificationParams m{-0.3, 0.8, {0.1, 0.0, -0.2}};
    CHECK(linear_predictor(c, m, 0) == doctest::Approx(-0.3 + 0.4 + 0.1 - 0.6));
    CHECK(linear_predictor(c, m, 1) == doctest::Approx(-0.3 - 1.6 - 0.1 - 0.1));
    CHECK(linear_predictor(c, ModificationParams{}, 1) == -2.0);
  }

  TEST_CASE("outcomes follow expit of the linear predictor") {
    const Cohort c = generate_normal_score_cohort(40000, -1.0, 1.0, 2);
    const ModificationParams m{-std::log(1.5), 0.8, {}};
    const auto y = generate_outcomes(c, m, 77);
    double expected = 0.0, observed = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      expected += expit(m.alpha0 + m.alpha1 * c.scores[i]);
      observed += y[i];
    }
    const double n = static_cast<double>(c.size());
    const double se = std::sqrt(expected / n * (1 - expected / n) / n);
    CHECK(std::abs(observed / n - expected / n) < 4 * se);
    for (std::size_t i = 0; i < 200; ++i) CHECK(draw_outcome(linear_predictor(c, m, i), 77, i) == y[i]);
    CHECK(generate_outcomes(c, m, 77) == y);
    CHECK(generate_outcomes(c, m, 78) != y);
  }

  TEST_CASE("extreme linear predictors give certain outcomes") {
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(draw_outcome(50.0, 1, i) == 1);
      CHECK(draw_outcome(-50.0, 1, i) == 0);
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate_params({}, 5));
    CHECK_NOTHROW(validate_params({0.0, 1.0, std::vector<double>(5, 0.1)}, 5));
    CHECK_THROWS_AS(validate_params({0.0, 1.0, std::vector<double>(4, 0.1)}, 5), InputError);
    CHECK_THROWS_AS(validate_params({std::numeric_limits<double>::quiet_NaN(), 1.0, {}}, 5), InputError);
    CHECK_THROWS_AS(validate_params({0.0, std::numeric_limits<double>::infinity(), {}}, 5), InputError);
    ModificationParams m;
    CHECK(m.is_null());
    m.gamma = {0.0, 0.0};
    CHECK_FALSE(m.has_revision());
    CHECK(m.is_null());
    m.gamma[1] = 0.3;
    CHECK(m.has_revision());
  }
}
