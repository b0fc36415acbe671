#include "pcc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcc/errors.hpp"
#include "pcc/information.hpp"

namespace pcc {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

bool ModificationParams::has_revision() const noexcept {
  return std::any_of(gamma.begin(), gamma.end(), [](double g) { return g != 0.0; });
}

void validate_params(const ModificationParams& params, std::size_t p) {
  if (!std::isfinite(params.alpha0) || !std::isfinite(params.alpha1) || !all_finite(params.gamma)) {
    throw InputError("modification parameters must be finite");
  }
  if (!params.gamma.empty() && params.gamma.size() != p) {
    throw InputError("gamma has length " + std::to_string(params.gamma.size()) + " but the cohort has " +
                     std::to_string(p) + " features");
  }
}

std::vector<double> simulation_coefficients(std::size_t p) {
  if (p < 20) throw InputError("simulation source model needs at least 20 features");
  std::vector<double> beta(p, 0.0);
  std::fill_n(beta.begin(), 10, 0.7);
  std::fill_n(beta.begin() + 10, 10, -0.7);
  return beta;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Cohort generate_lda_cohort(std::size_t n, std::size_t p, double prevalence_initial, const SourceModel& source,
                           Seed seed) {
  if (n < 1 || p < 1) throw InputError("LDA cohort needs n >= 1 and p >= 1");
  if (!(prevalence_initial > 0.0 && prevalence_initial < 1.0)) {
    throw InputError("initial prevalence must lie strictly between 0 and 1");
  }
  if (source.coefficients.size() != p) {
    throw InputError("source model has " + std::to_string(source.coefficients.size()) + " coefficients, expected " +
                     std::to_string(p));
  }
  if (!std::isfinite(source.intercept) || !all_finite(source.coefficients)) {
    throw InputError("source model parameters must be finite");
  }
  const double beta0 = logit(prevalence_initial);
  if (std::abs(source.intercept - beta0) > 1e-12) {
    throw InputError("LDA construction requires source intercept = logit(prevalence) = " + std::to_string(beta0));
  }

  Cohort cohort;
  cohort.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {stream::cohort_rows, i}));
    const bool case_row = rng.uniform() < prevalence_initial;
    const double half = case_row ? 0.5 : -0.5;
    double* row = cohort.features.row(static_cast<Eigen::Index>(i)).data();
    for (std::size_t j = 0; j < p; ++j) row[j] = half * source.coefficients[j] + rng.normal();
  }
  cohort.scores = compute_scores(cohort.features, source);
  cohort.prevalence_initial = prevalence_initial;
  cohort.generation = GenerationInfo{GenerationInfo::Kind::lda, source, 0.0, 0.0, seed, std::nullopt, 0};
  return cohort;
}

Cohort generate_normal_score_cohort(std::size_t n, double mean, double sd, Seed seed) {
  if (n < 1) throw InputError("cohort needs n >= 1");
  if (!std::isfinite(mean) || !std::isfinite(sd) || sd < 0.0) throw InputError("score mean/sd must be finite, sd >= 0");
  Cohort cohort;
  cohort.features.resize(static_cast<Eigen::Index>(n), 0);
  cohort.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {stream::cohort_rows, i}));
    cohort.scores[i] = mean + sd * rng.normal();
  }
  GenerationInfo info;
  info.kind = GenerationInfo::Kind::normal_scores;
  info.score_mean = mean;
  info.score_sd = sd;
  info.seed = seed;
  cohort.generation = info;
  return cohort;
}

std::vector<double> compute_scores(const FeatureMatrix& features, const SourceModel& source) {
  const auto p = static_cast<std::size_t>(features.cols());
  if (source.coefficients.size() != p) {
    throw InputError("feature width " + std::to_string(p) + " does not match " +
                     std::to_string(source.coefficients.size()) + " coefficients");
  }
  std::vector<double> scores(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double* row = features.row(i).data();
    double s = source.intercept;
    for (std::size_t j = 0; j < p; ++j) s += row[j] * source.coefficients[j];
    scores[static_cast<std::size_t>(i)] = s;
  }
  return scores;
}

double linear_predictor(const Cohort& cohort, const ModificationParams& params, std::size_t row) {
  double eta = params.alpha0 + params.alpha1 * cohort.scores[row];
  if (!params.gamma.empty()) {
    const double* x = cohort.features.row(static_cast<Eigen::Index>(row)).data();
    for (std::size_t j = 0; j < params.gamma.size(); ++j) eta += x[j] * params.gamma[j];
  }
  return eta;
}

std::uint8_t draw_outcome(double eta, Seed seed, std::size_t row) {
  const double u = to_unit_interval(splitmix64(derive_seed(seed, {stream::outcomes, row})));
  return u < expit(eta) ? 1 : 0;
}

std::vector<std::uint8_t> generate_outcomes(const Cohort& cohort, const ModificationParams& params, Seed seed) {
  if (params.has_revision() && !cohort.has_features()) {
    throw InputError("revision coefficients need a cohort with features");
  }
  validate_params(params, cohort.dim());
  std::vector<std::uint8_t> labels(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    labels[i] = draw_outcome(linear_predictor(cohort, params, i), seed, i);
  }
  return labels;
}

}  // namespace pcc
