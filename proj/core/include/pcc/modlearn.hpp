#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pcc/datagen.hpp"

namespace pcc {

// ---------------------------------------------------------------------------
// Recalibration: logit E[Y | S] = alpha0 + alpha1 S
// ---------------------------------------------------------------------------

enum class RecalConstraint {
  free_both,    // alpha0 and alpha1 estimated
  fix_slope_1,  // alpha1 = 1, S enters as an offset
  fix_both,     // (alpha0, alpha1) = (0, 1)
};

struct RecalFit {
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  double loglik = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

/// Bernoulli log-likelihood sum y*eta - log(1 + e^eta) at eta = a0 + a1 S.
double recalibration_loglik(std::span<const double> scores, std::span<const std::uint8_t> labels, double alpha0,
                            double alpha1);

/// Score vector (d/d alpha0, d/d alpha1) of recalibration_loglik.
std::array<double, 2> recalibration_gradient(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                             double alpha0, double alpha1);

/// Newton-Raphson (IRLS) with step halving and a 1e-10 ridge on the 2x2
/// normal equations. Single-class labels, or complete/quasi-complete
/// separation for free_both, are reported as converged = false.
RecalFit fit_recalibration(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           RecalConstraint constraint);

enum class RecalTest { intercept, slope, logistic_recal };

std::string_view to_string(RecalTest t) noexcept;

struct LrtResult {
  RecalTest test = RecalTest::logistic_recal;
  double statistic = 0.0;
  int df = 2;
  double p_value = 1.0;
};

/// Upper tail of the chi-square distribution; df must be 1 or 2.
double chi_square_upper_tail(double x, int df);

struct RecalibrationTests {
  /// intercept (df 1), slope (df 1), logistic_recal (df 2), in that order.
  std::array<LrtResult, 3> tests{};
  RecalFit null_fit;       // (0, 1)
  RecalFit intercept_fit;  // alpha0 free, alpha1 = 1
  RecalFit free_fit;       // both free
  bool usable = false;     // false when a fit did not converge

  const LrtResult& get(RecalTest t) const noexcept { return tests[static_cast<std::size_t>(t)]; }
};

/// INTERCEPT = 2(ll(a0, 1) - ll(0, 1)), SLOPE = 2(ll(a0, a1) - ll(a0, 1)),
/// LOGISTIC_RECAL = 2(ll(a0, a1) - ll(0, 1)).
RecalibrationTests recalibration_tests(std::span<const double> scores, std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Revision: Lasso with the score term left unpenalised
// ---------------------------------------------------------------------------

struct LassoOptions {
  std::size_t max_sweeps = 10000;
  /// Convergence when the largest coefficient change in a sweep falls below
  /// this (standardised scale).
  double tolerance = 1e-6;
  /// Scale features to unit variance inside the solver. The penalty then acts
  /// on standardised coefficients; reported coefficients are on the original
  /// scale.
  bool standardize = true;
  /// Optional hook called with (lambda index, sweep index, objective) after
  /// every sweep.
  std::function<void(std::size_t, std::size_t, double)> on_sweep;
};

struct LassoPoint {
  double lambda = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  std::vector<double> gamma;
  bool converged = false;
  std::size_t sweeps = 0;
  double objective = 0.0;

  std::vector<std::size_t> active_set() const;
};

struct LassoPath {
  std::vector<LassoPoint> points;
  /// Per-feature penalty scale: the feature standard deviation when
  /// standardising, otherwise 1.
  std::vector<double> penalty_scale;
  bool all_converged() const noexcept;
};

/// sum_i [log(1 + e^eta_i) - y_i eta_i] + lambda sum_j c_j |gamma_j| with
/// eta = alpha0 + alpha1 S + X gamma.
double lasso_objective(std::span<const double> scores, const FeatureMatrix& features,
                       std::span<const std::uint8_t> labels, double alpha0, double alpha1,
                       std::span<const double> gamma, double lambda, std::span<const double> penalty_scale = {});

/// Solves along a descending lambda grid with warm starts. One sweep is a
/// proximal Newton step: cyclic coordinate descent on the weighted quadratic
/// model, then backtracking on the true objective, with the curvature-1/4
/// majoriser step as fallback, so the objective never increases across
/// sweeps. alpha0 and alpha1 are unpenalised.
LassoPath fit_lasso_path(std::span<const double> scores, const FeatureMatrix& features,
                         std::span<const std::uint8_t> labels, std::span<const double> lambda_grid,
                         const LassoOptions& options = {});

/// n * exp(t) for t equally spaced on [log_min, log_max], in descending order.
/// The per-observation scale matches a mean (not sum) log-likelihood.
std::vector<double> lambda_grid_per_observation(std::size_t n, double log_min, double log_max, std::size_t count);

// ---------------------------------------------------------------------------
// Support recovery
// ---------------------------------------------------------------------------

struct RecoveryPoint {
  double lambda = 0.0;
  double fdr = 0.0;
  double fer = 0.0;
};

struct RecoveryCurve {
  enum class Variant { standard, alternative } variant = Variant::standard;
  double threshold = 0.0;  // alternative only
  /// Full-shrinkage anchor (lambda = inf), one point per path lambda, then
  /// the zero-shrinkage anchor (lambda = 0, every feature selected).
  std::vector<RecoveryPoint> points;
};

/// FDR = #(selected and truly zero) / max(#selected, 1);
/// FER = #(excluded and truly nonzero) / #(truly nonzero).
RecoveryCurve support_recovery(const LassoPath& path, std::span<const double> true_gamma);

/// Thresholded variant: true coefficients split into high (|g| > threshold),
/// low (0 < |g| <= threshold) and zero. Only selections of zero coefficients
/// are false discoveries; only exclusions of high coefficients are false
/// exclusions.
RecoveryCurve support_recovery_alt(const LassoPath& path, std::span<const double> true_gamma, double threshold);

/// Counts for one selected set.
RecoveryPoint recovery_point(std::span<const std::uint8_t> selected, std::span<const double> true_gamma);
RecoveryPoint recovery_point_alt(std::span<const std::uint8_t> selected, std::span<const double> true_gamma,
                                 double threshold);

/// Pointwise mean of curves built on the same lambda grid.
RecoveryCurve average_curves(std::span<const RecoveryCurve> curves);

/// Largest 1 - FER on the piecewise-linear curve (in point order) subject to
/// FDR <= max_fdr.
double recovery_at_fdr(const RecoveryCurve& curve, double max_fdr);

}  // namespace pcc
