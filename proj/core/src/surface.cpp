#include "pcc/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcc/errors.hpp"
#include "pcc/sampling.hpp"

namespace pcc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments moments(std::span<const double> xs) {
  Moments m;
  const auto b = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / b;
  if (!std::isfinite(m.mean)) {
    m.std_error = std::numeric_limits<double>::infinity();
    return m;
  }
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std_error = std::sqrt(ss / (b - 1.0) / b);
  return m;
}

InfoSurface blank_surface(Criterion c, const GridSpec& grid, const AssumedParams& assumed) {
  InfoSurface s;
  s.criterion = c;
  s.assumed = assumed;
  s.k_grid = grid.k_grid;
  s.w_grid = grid.w_grid;
  s.n = grid.n;
  s.replicates = grid.replicates;
  s.seed = grid.seed;
  const std::size_t cells = grid.k_grid.size() * grid.w_grid.size();
  s.values.assign(cells, kNaN);
  s.std_error.assign(cells, kNaN);
  s.mean_prob.assign(cells, kNaN);
  s.feasible.assign(cells, 0);
  return s;
}

}  // namespace

std::string_view to_string(Criterion c) noexcept {
  return c == Criterion::d_optimality ? "d_optimality" : "binary_entropy";
}

double quantile(std::span<const double> values, double level) {
  if (values.empty()) throw InputError("quantile of an empty vector");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

GridSpec default_grid(std::span<const double> scores, std::size_t n, std::size_t replicates, Seed seed,
                      std::size_t k_points, std::size_t w_points) {
  if (scores.empty()) throw InputError("default grid needs scores");
  GridSpec grid;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  for (double level : linspace(0.02, 0.98, k_points)) grid.k_grid.push_back(quantile(sorted, level));
  grid.w_grid = linspace(0.02, 0.98, w_points);
  grid.n = n;
  grid.replicates = replicates;
  grid.seed = seed;
  return grid;
}

void validate_grid(const GridSpec& grid, std::span<const double> scores) {
  if (grid.k_grid.empty()) throw InputError("grid.k: must be nonempty");
  if (grid.w_grid.empty()) throw InputError("grid.w: must be nonempty");
  if (grid.n < 2) throw InputError("grid.n: sample size must be at least 2");
  if (grid.replicates < 1) throw InputError("grid.replicates: must be at least 1");
  if (!std::is_sorted(grid.k_grid.begin(), grid.k_grid.end())) throw InputError("grid.k: must be sorted");
  if (!std::is_sorted(grid.w_grid.begin(), grid.w_grid.end())) throw InputError("grid.w: must be sorted");
  for (std::size_t j = 0; j < grid.w_grid.size(); ++j) {
    const double w = grid.w_grid[j];
    if (!(w >= 0.0 && w <= 1.0)) throw InputError("grid.w[" + std::to_string(j) + "]: must lie in [0, 1]");
  }
  if (!scores.empty()) {
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    for (std::size_t i = 0; i < grid.k_grid.size(); ++i) {
      const double k = grid.k_grid[i];
      if (!(k >= *lo && k <= *hi)) {
        throw InputError("grid.k[" + std::to_string(i) + "]: cut-off outside the observed score range");
      }
    }
  }
}

SurfacePair estimate_surfaces(const Cohort& cohort, const GridSpec& grid, const AssumedParams& assumed,
                              const ExecutionContext& ctx) {
  validate_grid(grid, cohort.scores);
  if (grid.n > cohort.size()) throw InputError("grid.n: exceeds cohort size");
  const std::vector<double> probs = predicted_probs(cohort, assumed);

  std::vector<Strata> strata;
  strata.reserve(grid.k_grid.size());
  for (double k : grid.k_grid) strata.emplace_back(cohort.scores, k);

  SurfacePair out{blank_surface(Criterion::d_optimality, grid, assumed),
                  blank_surface(Criterion::binary_entropy, grid, assumed)};

  const std::size_t n_w = grid.w_grid.size();
  const std::size_t cells = grid.k_grid.size() * n_w;
  std::size_t feasible_cells = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const Strata& st = strata[c / n_w];
    const double w = grid.w_grid[c % n_w];
    const bool ok = max_feasible_n(st.high().size(), st.low().size(), w) >= grid.n;
    out.d_optimality.feasible[c] = out.binary_entropy.feasible[c] = ok ? 1 : 0;
    feasible_cells += ok ? 1 : 0;
  }
  if (feasible_cells == 0) throw InputError("no feasible (k, w) cell for sample size " + std::to_string(grid.n));

  ProgressTracker progress(ctx, (feasible_cells + 1) * grid.replicates);

  // Unit `cells` is the SRS reference; units [0, cells) are grid cells.
  parallel_for(cells + 1, ctx, [&](std::size_t unit) {
    std::vector<double> d(grid.replicates);
    std::vector<double> b(grid.replicates);
    double pbar = 0.0;
    if (unit == cells) {
      for (std::size_t r = 0; r < grid.replicates; ++r) {
        ctx.check_cancelled();
        const Sample s = srs_sample(cohort.size(), grid.n, derive_seed(grid.seed, {stream::surface_srs, r}));
        const SampleInformation info = sample_information(cohort.scores, probs, s.indices);
        d[r] = info.phi_d;
        b[r] = info.phi_b;
        pbar += info.mean_prob;
      }
      const Moments md = moments(d);
      const Moments mb = moments(b);
      out.d_optimality.srs_reference = md.mean;
      out.d_optimality.srs_std_error = md.std_error;
      out.binary_entropy.srs_reference = mb.mean;
      out.binary_entropy.srs_std_error = mb.std_error;
      out.d_optimality.srs_mean_prob = out.binary_entropy.srs_mean_prob = pbar / static_cast<double>(grid.replicates);
      progress.advance(grid.replicates);
      return;
    }
    if (!out.d_optimality.feasible[unit]) return;
    const std::size_t ki = unit / n_w;
    const std::size_t wi = unit % n_w;
    const DesignConfig config{grid.k_grid[ki], grid.w_grid[wi]};
    for (std::size_t r = 0; r < grid.replicates; ++r) {
      ctx.check_cancelled();
      const Sample s = pcc_sample(strata[ki], config, grid.n, derive_seed(grid.seed, {stream::surface_cell, ki, wi, r}));
      const SampleInformation info = sample_information(cohort.scores, probs, s.indices);
      d[r] = info.phi_d;
      b[r] = info.phi_b;
      pbar += info.mean_prob;
    }
    const Moments md = moments(d);
    const Moments mb = moments(b);
    out.d_optimality.values[unit] = md.mean;
    out.d_optimality.std_error[unit] = md.std_error;
    out.binary_entropy.values[unit] = mb.mean;
    out.binary_entropy.std_error[unit] = mb.std_error;
    out.d_optimality.mean_prob[unit] = out.binary_entropy.mean_prob[unit] = pbar / static_cast<double>(grid.replicates);
    progress.advance(grid.replicates);
  });
  return out;
}

InfoSurface estimate_surface(const Cohort& cohort, const GridSpec& grid, Criterion criterion,
                             const AssumedParams& assumed, const ExecutionContext& ctx) {
  SurfacePair pair = estimate_surfaces(cohort, grid, assumed, ctx);
  return criterion == Criterion::d_optimality ? std::move(pair.d_optimality) : std::move(pair.binary_entropy);
}

SurfaceCell surface_argmax(const InfoSurface& surface) {
  bool found = false;
  SurfaceCell best;
  for (std::size_t ki = 0; ki < surface.rows(); ++ki) {
    for (std::size_t wi = 0; wi < surface.cols(); ++wi) {
      if (!surface.is_feasible(ki, wi)) continue;
      const SurfaceCell cell{ki, wi, surface.k_grid[ki], surface.w_grid[wi], surface.value(ki, wi)};
      if (!found) {
        best = cell;
        found = true;
        continue;
      }
      if (cell.value > best.value) {
        best = cell;
      } else if (cell.value == best.value) {
        const double dc = std::abs(cell.w - 0.5);
        const double db = std::abs(best.w - 0.5);
        if (dc < db || (dc == db && cell.k < best.k)) best = cell;
      }
    }
  }
  if (!found) throw InputError("surface has no feasible cell");
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> top_decile_cells(const InfoSurface& surface) {
  std::vector<double> vals;
  for (std::size_t c = 0; c < surface.values.size(); ++c) {
    if (surface.feasible[c] && std::isfinite(surface.values[c])) vals.push_back(surface.values[c]);
  }
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  if (vals.empty()) return cells;
  const double cut = quantile(vals, 0.9);
  for (std::size_t ki = 0; ki < surface.rows(); ++ki) {
    for (std::size_t wi = 0; wi < surface.cols(); ++wi) {
      if (surface.is_feasible(ki, wi) && surface.value(ki, wi) >= cut) cells.emplace_back(ki, wi);
    }
  }
  return cells;
}

}  // namespace pcc
