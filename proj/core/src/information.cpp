#include "pcc/information.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "pcc/errors.hpp"

namespace pcc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Weighted moments of (1, S) with weights p(1-p). A sample with a single
// distinct score is rank one; it is detected from the score range instead of
// trusting a determinant that cancels to rounding noise.
struct InfoAccumulator {
  double sum_w = 0.0;
  double sum_ws = 0.0;
  double sum_wss = 0.0;
  double sum_p = 0.0;
  double min_s = std::numeric_limits<double>::infinity();
  double max_s = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;

  void add(double s, double p) noexcept {
    const double w = p * (1.0 - p);
    sum_w += w;
    sum_ws += w * s;
    sum_wss += w * s * s;
    sum_p += p;
    min_s = std::min(min_s, s);
    max_s = std::max(max_s, s);
    ++n;
  }

  PartialInfoMatrix matrix() const noexcept {
    const double inv_n = 1.0 / static_cast<double>(n);
    return {sum_w * inv_n, sum_ws * inv_n, sum_wss * inv_n};
  }

  double log_det() const noexcept {
    if (n < 2 || !(max_s > min_s)) return kNegInf;
    const PartialInfoMatrix m = matrix();
    const double det = m.determinant();
    if (!(det > 0.0) || !std::isfinite(det)) return kNegInf;
    return std::log(det);
  }
};

}  // namespace

std::pair<double, double> PartialInfoMatrix::eigenvalues() const noexcept {
  const double mean = 0.5 * (i00 + i11);
  const double half_diff = 0.5 * (i00 - i11);
  const double radius = std::sqrt(half_diff * half_diff + i01 * i01);
  return {mean - radius, mean + radius};
}

std::vector<double> predicted_probs(std::span<const double> scores, const FeatureMatrix* features,
                                    const AssumedParams& assumed) {
  const bool revision = assumed.has_revision();
  if (revision) {
    if (features == nullptr || features->cols() == 0) {
      throw InputError("assumed revision coefficients need cohort features");
    }
    if (static_cast<std::size_t>(features->rows()) != scores.size()) {
      throw InputError("feature rows do not match score count");
    }
  }
  validate_params(assumed, features != nullptr ? static_cast<std::size_t>(features->cols()) : assumed.gamma.size());

  std::vector<double> probs(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double eta = assumed.alpha0 + assumed.alpha1 * scores[i];
    if (revision) {
      const double* x = features->row(static_cast<Eigen::Index>(i)).data();
      for (std::size_t j = 0; j < assumed.gamma.size(); ++j) eta += x[j] * assumed.gamma[j];
    }
    probs[i] = expit(eta);
  }
  return probs;
}

std::vector<double> predicted_probs(const Cohort& cohort, const AssumedParams& assumed) {
  return predicted_probs(cohort.scores, &cohort.features, assumed);
}

PartialInfoMatrix partial_info(std::span<const double> scores, std::span<const double> probs) {
  if (scores.size() != probs.size()) throw InputError("scores and probabilities differ in length");
  if (scores.empty()) throw InputError("information matrix of an empty sample");
  InfoAccumulator acc;
  for (std::size_t i = 0; i < scores.size(); ++i) acc.add(scores[i], probs[i]);
  return acc.matrix();
}

double phi_d(std::span<const double> scores, std::span<const double> probs) {
  if (scores.size() != probs.size()) throw InputError("scores and probabilities differ in length");
  InfoAccumulator acc;
  for (std::size_t i = 0; i < scores.size(); ++i) acc.add(scores[i], probs[i]);
  return acc.log_det();
}

double binary_entropy(double pbar) noexcept {
  double h = 0.0;
  if (pbar > 0.0) h -= pbar * std::log2(pbar);
  if (pbar < 1.0) h -= (1.0 - pbar) * std::log2(1.0 - pbar);
  return h;
}

double phi_b(std::span<const double> probs) {
  if (probs.empty()) throw InputError("binary entropy of an empty sample");
  double sum = 0.0;
  for (double p : probs) sum += p;
  return binary_entropy(sum / static_cast<double>(probs.size()));
}

SampleInformation sample_information(std::span<const double> scores, std::span<const double> probs,
                                     std::span<const std::size_t> rows) {
  InfoAccumulator acc;
  for (std::size_t r : rows) acc.add(scores[r], probs[r]);
  SampleInformation info;
  info.phi_d = acc.log_det();
  info.mean_prob = rows.empty() ? 0.0 : acc.sum_p / static_cast<double>(acc.n);
  info.phi_b = binary_entropy(info.mean_prob);
  return info;
}

ComparisonReport compare_designs(double phi_d_a, double phi_d_b, double pbar_a, double pbar_b) {
  if (!std::isfinite(phi_d_a) || !std::isfinite(phi_d_b) || !std::isfinite(pbar_a) || !std::isfinite(pbar_b)) {
    throw InputError("design comparison needs finite inputs");
  }
  if (pbar_b == 0.0) throw InputError("reference design has zero mean prevalence");
  return {std::exp(phi_d_a - phi_d_b), pbar_a / pbar_b};
}

}  // namespace pcc
