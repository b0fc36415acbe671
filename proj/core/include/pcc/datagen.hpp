#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pcc/rng.hpp"

namespace pcc {

/// N x p feature matrix, row-major so each subject's features are contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Original prediction model applied to new-cohort features (log-odds scale).
struct SourceModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
};

/// Recalibration intercept/slope and revision coefficients of
/// logit E[Y | S, X] = alpha0 + alpha1 * S + X * gamma.
struct ModificationParams {
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  /// Empty means gamma = 0 for any feature dimension.
  std::vector<double> gamma;

  static ModificationParams null_model() { return {}; }

  bool has_revision() const noexcept;
  bool is_null() const noexcept { return alpha0 == 0.0 && alpha1 == 1.0 && !has_revision(); }

  friend bool operator==(const ModificationParams&, const ModificationParams&) = default;
};

/// How a cohort came to be; absent for loaded or uploaded data.
struct GenerationInfo {
  enum class Kind { lda, normal_scores } kind = Kind::lda;
  SourceModel source;
  double score_mean = 0.0;  // normal_scores only
  double score_sd = 0.0;    // normal_scores only
  Seed seed = 0;
  std::optional<ModificationParams> outcome_params;
  Seed outcome_seed = 0;
};

struct Cohort {
  FeatureMatrix features;  // N x p; p may be 0 for score-only cohorts
  std::vector<double> scores;
  std::optional<std::vector<std::uint8_t>> labels;
  /// Original outcome prevalence pi0 used by the generator; NaN when unknown.
  double prevalence_initial = std::numeric_limits<double>::quiet_NaN();
  std::optional<GenerationInfo> generation;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
  bool has_features() const noexcept { return features.cols() > 0; }
};

/// Coefficients of the simulation source model: 0.7 for the first 10
/// features, -0.7 for the next 10, zero for the rest. Requires p >= 20.
std::vector<double> simulation_coefficients(std::size_t p = 100);

double logit(double p);

/// Latent Y0 ~ Bernoulli(pi0); X | Y0 = y ~ N(+-beta/2, I). With identity
/// covariance the induced logistic model has slope beta and intercept
/// logit(pi0), so `source.intercept` must equal logit(prevalence). Labels are
/// left unset. Rows are generated from per-row streams so the result does not
/// depend on thread count.
Cohort generate_lda_cohort(std::size_t n, std::size_t p, double prevalence_initial, const SourceModel& source, Seed seed);

/// Score-only cohort with S ~ N(mean, sd^2).
Cohort generate_normal_score_cohort(std::size_t n, double mean, double sd, Seed seed);

/// beta0 + X * beta for every row.
std::vector<double> compute_scores(const FeatureMatrix& features, const SourceModel& source);

/// alpha0 + alpha1 * S_i + X_i * gamma.
double linear_predictor(const Cohort& cohort, const ModificationParams& params, std::size_t row);

/// Bernoulli draw for one row from a keyed per-row stream. Drawing row i this
/// way gives the same value as generate_outcomes(...)[i] with the same seed.
std::uint8_t draw_outcome(double linear_predictor, Seed seed, std::size_t row);

/// Y_i ~ Bernoulli(expit(alpha0 + alpha1 S_i + X_i gamma)).
std::vector<std::uint8_t> generate_outcomes(const Cohort& cohort, const ModificationParams& params, Seed seed);

/// Throws InputError unless gamma is empty or matches the cohort dimension and
/// all parameters are finite.
void validate_params(const ModificationParams& params, std::size_t p);

}  // namespace pcc
