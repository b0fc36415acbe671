#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcc/datagen.hpp"
#include "pcc/errors.hpp"
#include "pcc/information.hpp"
#include "pcc/modlearn.hpp"
#include "pcc/parallel.hpp"
#include "pcc/sampling.hpp"
#include "pcc/surface.hpp"

namespace pcc {

// ---------------------------------------------------------------------------
// Cohorts and designs
// ---------------------------------------------------------------------------

struct CohortSpec {
  enum class Kind { lda, normal } kind = Kind::lda;
  std::size_t n = 20000;
  std::size_t p = 100;
  double prevalence = 0.10;
  /// LDA source coefficients; empty means simulation_coefficients(p).
  std::vector<double> beta;
  double score_mean = -1.5;  // normal only
  double score_sd = 1.0;     // normal only
  Seed seed = 1;
};

Cohort build_cohort(const CohortSpec& spec);

struct DesignSpec {
  DesignKind kind = DesignKind::srs;
  DesignConfig config{};  // pcc only

  static DesignSpec srs() { return {}; }
  static DesignSpec pcc(DesignConfig c) { return {DesignKind::pcc, c}; }

  /// "srs" or "pcc(k,w)".
  std::string label() const;
  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

/// Draws a sample of size n under the design. Throws InfeasibleDesign.
Sample draw_sample(const Cohort& cohort, const DesignSpec& design, std::size_t n, Seed seed);

/// Maximum n the design supports on this cohort (N for SRS).
std::size_t design_capacity(const Cohort& cohort, const DesignSpec& design);

/// Outcome labels for the given rows under the true parameters; row i of the
/// cohort always receives the same label for a given seed.
std::vector<std::uint8_t> sample_labels(const Cohort& cohort, const ModificationParams& truth,
                                        std::span<const std::size_t> rows, Seed outcome_seed);

// ---------------------------------------------------------------------------
// Recalibration power
// ---------------------------------------------------------------------------

struct PowerScenario {
  ModificationParams truth;
  std::vector<DesignSpec> designs{DesignSpec::srs(), DesignSpec::pcc(kSimulationDesign)};
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 200;
  double level = 0.05;
  Seed seed = 1;
};

struct PowerCell {
  std::size_t design = 0;
  std::size_t n = 0;
  bool feasible = true;
  std::size_t usable = 0;
  std::size_t dropped = 0;
  std::array<std::size_t, 3> rejections{};
  std::array<double, 3> power{};
  std::array<double, 3> std_error{};

  double power_of(RecalTest t) const noexcept { return power[static_cast<std::size_t>(t)]; }
  double std_error_of(RecalTest t) const noexcept { return std_error[static_cast<std::size_t>(t)]; }
};

struct PowerCurve {
  std::vector<DesignSpec> designs;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 0;
  double level = 0.05;
  /// Design-major: cells[d * sample_sizes.size() + i].
  std::vector<PowerCell> cells;
  /// Some cell dropped more than 10% of its replicates.
  bool unreliable = false;
  /// Some PCC cell needs more rows than a stratum holds.
  bool any_infeasible = false;

  const PowerCell& cell(std::size_t design, std::size_t size_index) const {
    return cells.at(design * sample_sizes.size() + size_index);
  }
};

/// Per replicate r the outcome stream is derive(seed, outcomes, r) and the
/// sampling stream for the i-th sample size is derive(seed, sampling, r, i),
/// shared by every design.
PowerCurve run_power_experiment(const Cohort& cohort, const PowerScenario& scenario, const ExecutionContext& ctx = {});

/// The 3 x 3 recalibration grid: alpha0 in {-log 2, -log 1.5, 0} by
/// alpha1 in {0.6, 0.8, 1}, gamma = 0.
std::vector<ModificationParams> recalibration_grid();

/// Smallest n at which the curve reaches `target`, by linear interpolation
/// between neighbouring sample sizes; nullopt if never reached.
std::optional<double> crossing_n(const PowerCurve& curve, std::size_t design, RecalTest test, double target);

// ---------------------------------------------------------------------------
// Revision support recovery
// ---------------------------------------------------------------------------

struct LambdaSpec {
  /// log(lambda / n) range; the path uses n * exp(t) for each sample size.
  double log_min = -6.0;
  double log_max = -2.0;
  std::size_t count = 40;
};

struct RevisionScenario {
  ModificationParams truth;
  std::vector<DesignSpec> designs{DesignSpec::srs(), DesignSpec::pcc(kSimulationDesign)};
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 200;
  LambdaSpec lambda;
  /// Signal threshold for the thresholded FDR/FER; 0 disables it.
  double alt_threshold = 0.0;
  /// lasso.on_sweep sees every fit; with ctx.threads > 1 it is called
  /// concurrently from the worker threads.
  LassoOptions lasso;
  Seed seed = 1;
};

struct RevisionCell {
  std::size_t design = 0;
  std::size_t n = 0;
  bool feasible = true;
  std::size_t usable = 0;
  std::size_t dropped = 0;
  RecoveryCurve curve;
  std::optional<RecoveryCurve> alt_curve;
  double mean_prevalence = 0.0;  // observed label prevalence in the samples
  double entropy = 0.0;          // binary entropy of mean_prevalence
};

struct RevisionResult {
  std::vector<DesignSpec> designs;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 0;
  std::vector<RevisionCell> cells;  // design-major
  bool unreliable = false;
  bool any_infeasible = false;

  const RevisionCell& cell(std::size_t design, std::size_t size_index) const {
    return cells.at(design * sample_sizes.size() + size_index);
  }
};

RevisionResult run_revision_experiment(const Cohort& cohort, const RevisionScenario& scenario,
                                       const ExecutionContext& ctx = {});

/// Revision coefficients with `count` entries equal to `effect` starting at
/// feature `first` (0-based), zero elsewhere.
std::vector<double> sparse_gamma(std::size_t p, std::size_t first, std::size_t count, double effect);

/// The recovery scenario truth: alpha = (-log 3, 0.9), five coefficients of
/// 0.6 on features 21-25 (outside the source model's support), p = 100.
ModificationParams revision_truth(std::size_t p = 100);

// ---------------------------------------------------------------------------
// Single-design comparison against SRS
// ---------------------------------------------------------------------------

struct DesignSummary {
  double phi_d = 0.0;
  double phi_d_std_error = 0.0;
  double phi_b = 0.0;
  double phi_b_std_error = 0.0;
  double mean_prob = 0.0;
};

struct DesignComparison {
  DesignConfig config{};
  std::size_t n = 0;
  std::size_t replicates = 0;
  Seed seed = 0;
  std::size_t max_feasible_n = 0;
  bool feasible = false;
  /// Stratum that limits n when infeasible.
  std::optional<Stratum> limiting_stratum;
  DesignSummary pcc;  // NaN when infeasible
  DesignSummary srs;
  ComparisonReport ratios{};  // PCC relative to SRS
};

/// Expected information of one PCC design and of SRS at the same n, drawn
/// with the surface seeding scheme for a 1 x 1 grid.
DesignComparison compare_with_srs(const Cohort& cohort, const DesignConfig& config, std::size_t n,
                                  std::size_t replicates, Seed seed, const AssumedParams& assumed = {},
                                  const ExecutionContext& ctx = {});

// ---------------------------------------------------------------------------
// Robustness
// ---------------------------------------------------------------------------

/// One surface per assumed parameter setting on a shared grid and seed.
std::vector<InfoSurface> run_robustness_study(const Cohort& cohort, const GridSpec& grid,
                                              std::span<const AssumedParams> assumed, Criterion criterion,
                                              const ExecutionContext& ctx = {});

}  // namespace pcc
