#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pcc/datagen.hpp"

namespace pcc {

inline double expit(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Assumed modification parameters under which sample information is
/// evaluated. Defaults to the null configuration (0, 1, 0).
using AssumedParams = ModificationParams;

/// p_i = expit(alpha0 + alpha1 S_i + X_i gamma). `features` may be null when
/// gamma is zero.
std::vector<double> predicted_probs(std::span<const double> scores, const FeatureMatrix* features,
                                    const AssumedParams& assumed);
std::vector<double> predicted_probs(const Cohort& cohort, const AssumedParams& assumed);

/// Normalised 2x2 information for (alpha0, alpha1):
/// (1/n) sum p(1-p) [1, S; S, S^2].
struct PartialInfoMatrix {
  double i00 = 0.0;
  double i01 = 0.0;
  double i11 = 0.0;

  double determinant() const noexcept { return i00 * i11 - i01 * i01; }
  /// Eigenvalues in ascending order.
  std::pair<double, double> eigenvalues() const noexcept;
};

PartialInfoMatrix partial_info(std::span<const double> scores, std::span<const double> probs);

/// log det of the partial information matrix. Singular designs (n < 2,
/// a single distinct score, or det <= 0) give -infinity.
double phi_d(std::span<const double> scores, std::span<const double> probs);

/// Binary entropy (base 2) of a mean predicted probability, with 0 log 0 = 0.
double binary_entropy(double pbar) noexcept;

/// Binary entropy of mean(probs).
double phi_b(std::span<const double> probs);

/// Both criteria evaluated on one drawn sample (rows of a cohort-level
/// score/probability pair). One pass over the sample.
struct SampleInformation {
  double phi_d = 0.0;
  double phi_b = 0.0;
  double mean_prob = 0.0;
};

SampleInformation sample_information(std::span<const double> scores, std::span<const double> probs,
                                     std::span<const std::size_t> rows);

struct ComparisonReport {
  double det_ratio = 1.0;         // exp(phi_d_a - phi_d_b)
  double prevalence_ratio = 1.0;  // pbar_a / pbar_b
};

ComparisonReport compare_designs(double phi_d_a, double phi_d_b, double pbar_a, double pbar_b);

}  // namespace pcc
