#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "pcc/datagen.hpp"
#include "pcc/information.hpp"
#include "pcc/parallel.hpp"
#include "pcc/rng.hpp"

namespace pcc {

enum class Criterion { d_optimality, binary_entropy };

std::string_view to_string(Criterion c) noexcept;

struct GridSpec {
  std::vector<double> k_grid;  // sorted, within [min S, max S]
  std::vector<double> w_grid;  // sorted, within [0, 1]
  std::size_t n = 100;         // sample size per draw
  std::size_t replicates = 200;
  Seed seed = 0;
};

/// Sample quantile (linear interpolation between order statistics).
double quantile(std::span<const double> values, double level);

/// `count` equally spaced points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// k at equally spaced score quantiles between the 2nd and 98th percentiles,
/// w equally spaced on [0.02, 0.98].
GridSpec default_grid(std::span<const double> scores, std::size_t n = 100, std::size_t replicates = 200, Seed seed = 0,
                      std::size_t k_points = 25, std::size_t w_points = 25);

void validate_grid(const GridSpec& grid, std::span<const double> scores);

/// Monte Carlo expected sample information over a (k, w) grid. Matrices are
/// stored row-major with k along rows and w along columns.
struct InfoSurface {
  Criterion criterion = Criterion::d_optimality;
  AssumedParams assumed;
  std::vector<double> k_grid;
  std::vector<double> w_grid;
  std::size_t n = 0;
  std::size_t replicates = 0;
  Seed seed = 0;
  std::vector<double> values;  // NaN where infeasible
  std::vector<double> std_error;
  std::vector<std::uint8_t> feasible;
  double srs_reference = 0.0;
  double srs_std_error = 0.0;
  /// Monte Carlo mean of the sample mean predicted probability.
  std::vector<double> mean_prob;  // NaN where infeasible
  double srs_mean_prob = 0.0;

  std::size_t rows() const noexcept { return k_grid.size(); }
  std::size_t cols() const noexcept { return w_grid.size(); }
  std::size_t index(std::size_t ki, std::size_t wi) const noexcept { return ki * cols() + wi; }
  double value(std::size_t ki, std::size_t wi) const noexcept { return values[index(ki, wi)]; }
  double std_error_at(std::size_t ki, std::size_t wi) const noexcept { return std_error[index(ki, wi)]; }
  bool is_feasible(std::size_t ki, std::size_t wi) const noexcept { return feasible[index(ki, wi)] != 0; }
};

/// Both criteria estimated from the same draws per replicate.
struct SurfacePair {
  InfoSurface d_optimality;
  InfoSurface binary_entropy;

  const InfoSurface& get(Criterion c) const noexcept {
    return c == Criterion::d_optimality ? d_optimality : binary_entropy;
  }
};

/// For every feasible cell draws B PCC samples of size n, evaluates the
/// criteria under `assumed` and records mean and standard error. Cells with
/// max_feasible_n < n are masked. The SRS reference uses B SRS draws. Each
/// replicate is seeded from (seed, k index, w index, replicate), so results do
/// not depend on ctx.threads. Throws InputError when no cell is feasible.
SurfacePair estimate_surfaces(const Cohort& cohort, const GridSpec& grid, const AssumedParams& assumed = {},
                              const ExecutionContext& ctx = {});

InfoSurface estimate_surface(const Cohort& cohort, const GridSpec& grid, Criterion criterion,
                             const AssumedParams& assumed = {}, const ExecutionContext& ctx = {});

struct SurfaceCell {
  std::size_t k_index = 0;
  std::size_t w_index = 0;
  double k = 0.0;
  double w = 0.0;
  double value = 0.0;
};

/// Largest feasible cell; ties go to smaller |w - 0.5|, then smaller k.
SurfaceCell surface_argmax(const InfoSurface& surface);

/// Feasible cells whose value is at or above the 90th percentile of feasible values.
std::vector<std::pair<std::size_t, std::size_t>> top_decile_cells(const InfoSurface& surface);

}  // namespace pcc
