#include "pcc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "pcc/errors.hpp"

namespace pcc {

namespace {

// Absorbs representation error in products such as 10 * 0.15 before flooring.
constexpr double kFloorSlack = 1e-9;

}  // namespace

void validate_design(const DesignConfig& config) {
  if (!std::isfinite(config.cutoff_k)) throw InputError("cut-off k must be finite");
  if (!(config.weight_w >= 0.0 && config.weight_w <= 1.0)) throw InputError("stratum weight w must lie in [0, 1]");
}

Strata::Strata(std::span<const double> scores, double cutoff_k) : cutoff_(cutoff_k) {
  for (std::size_t i = 0; i < scores.size(); ++i) (scores[i] > cutoff_k ? high_ : low_).push_back(i);
}

double Strata::high_fraction() const noexcept {
  return population() == 0 ? 0.0 : static_cast<double>(high_.size()) / static_cast<double>(population());
}

std::size_t high_stratum_count(std::size_t n, double w) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * w + 0.5 + kFloorSlack));
}

std::uint64_t sampling_priority(Seed seed, std::size_t row) noexcept {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(row) + 0x2545f4914f6cdd1dULL));
}

void select_smallest_priority(std::span<const std::size_t> pool, std::size_t m, Seed seed,
                              std::vector<std::size_t>& out) {
  if (m == 0) return;
  if (m >= pool.size()) {
    out.insert(out.end(), pool.begin(), pool.end());
    return;
  }
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) keyed[i] = {sampling_priority(seed, pool[i]), pool[i]};
  const auto mid = keyed.begin() + static_cast<std::ptrdiff_t>(m);
  std::nth_element(keyed.begin(), mid - 1, keyed.end());
  // nth_element fixes the m-th element; everything before it is no larger.
  for (auto it = keyed.begin(); it != mid; ++it) out.push_back(it->second);
}

Sample srs_sample(std::size_t population, std::size_t n, Seed seed) {
  if (n > population) {
    throw InputError("SRS sample size " + std::to_string(n) + " exceeds cohort size " + std::to_string(population));
  }
  Sample sample;
  sample.kind = DesignKind::srs;
  if (n == population) {
    sample.indices.resize(population);
    for (std::size_t i = 0; i < population; ++i) sample.indices[i] = i;
    return sample;
  }
  std::vector<std::size_t> all(population);
  for (std::size_t i = 0; i < population; ++i) all[i] = i;
  sample.indices.reserve(n);
  select_smallest_priority(all, n, seed, sample.indices);
  std::sort(sample.indices.begin(), sample.indices.end());
  return sample;
}

Sample srs_sample(const Cohort& cohort, std::size_t n, Seed seed) { return srs_sample(cohort.size(), n, seed); }

Sample pcc_sample(const Strata& strata, const DesignConfig& config, std::size_t n, Seed seed) {
  validate_design(config);
  const std::size_t n_high = high_stratum_count(n, config.weight_w);
  const std::size_t n_low = n - n_high;
  if (n_high > strata.high().size()) throw InfeasibleDesign(Stratum::high, n_high, strata.high().size());
  if (n_low > strata.low().size()) throw InfeasibleDesign(Stratum::low, n_low, strata.low().size());

  Sample sample;
  sample.kind = DesignKind::pcc;
  sample.config = config;
  sample.indices.reserve(n);
  select_smallest_priority(strata.high(), n_high, seed, sample.indices);
  select_smallest_priority(strata.low(), n_low, seed, sample.indices);
  std::sort(sample.indices.begin(), sample.indices.end());
  return sample;
}

Sample pcc_sample(const Cohort& cohort, const DesignConfig& config, std::size_t n, Seed seed) {
  validate_design(config);
  return pcc_sample(Strata(cohort.scores, config.cutoff_k), config, n, seed);
}

double inclusion_weight(double score, const DesignConfig& config, double stratum_fraction, double base_rate) {
  validate_design(config);
  if (!(stratum_fraction > 0.0 && stratum_fraction < 1.0)) {
    throw InputError("stratum fraction P(S > k) must lie strictly between 0 and 1");
  }
  if (score > config.cutoff_k) return base_rate * config.weight_w / stratum_fraction;
  return base_rate * (1.0 - config.weight_w) / (1.0 - stratum_fraction);
}

std::size_t max_feasible_n(std::size_t high_count, std::size_t low_count, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw InputError("stratum weight w must lie in [0, 1]");
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  if (w > 0.0) {
    limit = std::min(limit, static_cast<std::size_t>(std::floor(static_cast<double>(high_count) / w + kFloorSlack)));
  }
  if (w < 1.0) {
    limit = std::min(limit,
                     static_cast<std::size_t>(std::floor(static_cast<double>(low_count) / (1.0 - w) + kFloorSlack)));
  }
  return limit;
}

std::size_t max_feasible_n(const Cohort& cohort, const DesignConfig& config) {
  validate_design(config);
  const Strata strata(cohort.scores, config.cutoff_k);
  return max_feasible_n(strata.high().size(), strata.low().size(), config.weight_w);
}

}  // namespace pcc
