#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pcc/datagen.hpp"
#include "pcc/rng.hpp"

namespace pcc {

/// PCC design: cut-off k on the score scale and w = P(S > k | sampled).
struct DesignConfig {
  double cutoff_k = 0.0;
  double weight_w = 0.5;

  friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

/// The fixed design used throughout the simulation studies.
inline constexpr DesignConfig kSimulationDesign{-1.0, 0.50};

void validate_design(const DesignConfig& config);

enum class DesignKind { srs, pcc };

struct Sample {
  std::vector<std::size_t> indices;  // ascending, unique
  DesignKind kind = DesignKind::srs;
  std::optional<DesignConfig> config;  // set for PCC

  std::size_t n() const noexcept { return indices.size(); }
};

/// Row ids split by the strict rule S > k. Built once per cut-off and reused
/// across replicate draws.
class Strata {
 public:
  Strata(std::span<const double> scores, double cutoff_k);

  double cutoff() const noexcept { return cutoff_; }
  std::span<const std::size_t> high() const noexcept { return high_; }
  std::span<const std::size_t> low() const noexcept { return low_; }
  std::size_t population() const noexcept { return high_.size() + low_.size(); }
  /// Empirical P(S > k).
  double high_fraction() const noexcept;

 private:
  double cutoff_;
  std::vector<std::size_t> high_;
  std::vector<std::size_t> low_;
};

/// Number of high-stratum subjects in a PCC sample of size n: round(n*w), ties up.
std::size_t high_stratum_count(std::size_t n, double w);

/// Keyed priority of a row under a sampling seed. Both designs select the rows
/// with the smallest priorities within the population they draw from, so
/// their draws under a common seed are coupled.
std::uint64_t sampling_priority(Seed seed, std::size_t row) noexcept;

/// Appends the m members of `pool` with the smallest priorities to `out`, in
/// no particular order.
void select_smallest_priority(std::span<const std::size_t> pool, std::size_t m, Seed seed, std::vector<std::size_t>& out);

/// Uniform sample of n rows without replacement.
Sample srs_sample(const Cohort& cohort, std::size_t n, Seed seed);
Sample srs_sample(std::size_t population, std::size_t n, Seed seed);

/// round(n*w) rows drawn uniformly from {S > k}, the remainder from {S <= k}.
/// Throws InfeasibleDesign naming the exhausted stratum.
Sample pcc_sample(const Cohort& cohort, const DesignConfig& config, std::size_t n, Seed seed);
Sample pcc_sample(const Strata& strata, const DesignConfig& config, std::size_t n, Seed seed);

/// Inclusion probability of a subject under PCC relative to an SRS base rate:
/// base * w / P(S > k) above the cut-off, base * (1 - w) / P(S <= k) otherwise.
double inclusion_weight(double score, const DesignConfig& config, double stratum_fraction, double base_rate);

/// min(floor(#high / w), floor(#low / (1 - w))); a zero weight removes that
/// stratum's constraint.
std::size_t max_feasible_n(std::size_t high_count, std::size_t low_count, double w);
std::size_t max_feasible_n(const Cohort& cohort, const DesignConfig& config);

}  // namespace pcc
