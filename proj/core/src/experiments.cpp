#include "pcc/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "pcc/errors.hpp"
#include "pcc/information.hpp"

namespace pcc {

namespace {

std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_sizes(std::span<const std::size_t> sizes, std::size_t replicates, std::size_t designs) {
  if (sizes.empty()) throw InputError("sample_sizes: at least one sample size required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) throw InputError("sample_sizes[" + std::to_string(i) + "]: must be at least 2");
  }
  if (replicates == 0) throw InputError("replicates: must be at least 1");
  if (designs == 0) throw InputError("designs: at least one design required");
}

// Sub-context for part `part` of `parts` equally sized runs.
ExecutionContext part_context(const ExecutionContext& ctx, std::size_t part, std::size_t parts) {
  ExecutionContext sub = ctx;
  if (ctx.progress) {
    sub.progress = [progress = ctx.progress, part, parts](std::size_t done, std::size_t total) {
      progress(part * total + done, parts * total);
    };
  }
  return sub;
}

}  // namespace

Cohort build_cohort(const CohortSpec& spec) {
  if (spec.kind == CohortSpec::Kind::normal) {
    return generate_normal_score_cohort(spec.n, spec.score_mean, spec.score_sd, spec.seed);
  }
  SourceModel source;
  source.coefficients = spec.beta.empty() ? simulation_coefficients(spec.p) : spec.beta;
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0)) throw InputError("cohort.prevalence: must lie in (0, 1)");
  source.intercept = logit(spec.prevalence);
  return generate_lda_cohort(spec.n, source.coefficients.size(), spec.prevalence, source, spec.seed);
}

std::string DesignSpec::label() const {
  if (kind == DesignKind::srs) return "srs";
  return "pcc(" + format_number(config.cutoff_k) + "," + format_number(config.weight_w) + ")";
}

Sample draw_sample(const Cohort& cohort, const DesignSpec& design, std::size_t n, Seed seed) {
  if (design.kind == DesignKind::srs) return srs_sample(cohort, n, seed);
  return pcc_sample(cohort, design.config, n, seed);
}

std::size_t design_capacity(const Cohort& cohort, const DesignSpec& design) {
  if (design.kind == DesignKind::srs) return cohort.size();
  return max_feasible_n(cohort, design.config);
}

std::vector<std::uint8_t> sample_labels(const Cohort& cohort, const ModificationParams& truth,
                                        std::span<const std::size_t> rows, Seed outcome_seed) {
  std::vector<std::uint8_t> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels[i] = draw_outcome(linear_predictor(cohort, truth, rows[i]), outcome_seed, rows[i]);
  }
  return labels;
}

// ---------------------------------------------------------------------------

std::vector<ModificationParams> recalibration_grid() {
  std::vector<ModificationParams> grid;
  for (double a0 : {-std::log(2.0), -std::log(1.5), 0.0}) {
    for (double a1 : {0.6, 0.8, 1.0}) grid.push_back({a0, a1, {}});
  }
  return grid;
}

PowerCurve run_power_experiment(const Cohort& cohort, const PowerScenario& scenario, const ExecutionContext& ctx) {
  check_sizes(scenario.sample_sizes, scenario.replicates, scenario.designs.size());
  if (scenario.truth.has_revision()) throw InputError("truth.gamma: power experiments take gamma = 0");
  validate_params(scenario.truth, cohort.dim());
  if (!(scenario.level > 0.0 && scenario.level < 1.0)) throw InputError("level: must lie in (0, 1)");
  for (const auto& d : scenario.designs) {
    if (d.kind == DesignKind::pcc) validate_design(d.config);
  }

  const std::size_t n_designs = scenario.designs.size();
  const std::size_t n_sizes = scenario.sample_sizes.size();
  const std::size_t n_cells = n_designs * n_sizes;
  const std::size_t B = scenario.replicates;

  PowerCurve curve;
  curve.designs = scenario.designs;
  curve.sample_sizes = scenario.sample_sizes;
  curve.replicates = B;
  curve.level = scenario.level;
  curve.cells.resize(n_cells);
  for (std::size_t d = 0; d < n_designs; ++d) {
    const std::size_t cap = design_capacity(cohort, scenario.designs[d]);
    for (std::size_t i = 0; i < n_sizes; ++i) {
      PowerCell& c = curve.cells[d * n_sizes + i];
      c.design = d;
      c.n = scenario.sample_sizes[i];
      c.feasible = c.n <= cap;
      curve.any_infeasible = curve.any_infeasible || !c.feasible;
    }
  }

  // outcome[r][cell] = 0 dropped, 1 usable; bit t+1 set when test t rejects.
  std::vector<std::uint8_t> outcome(B * n_cells, 0);
  ProgressTracker progress(ctx, B);
  parallel_for(B, ctx, [&](std::size_t r) {
    const Seed outcome_seed = derive_seed(scenario.seed, {stream::outcomes, r});
    for (std::size_t i = 0; i < n_sizes; ++i) {
      const Seed sampling_seed = derive_seed(scenario.seed, {stream::sampling, r, i});
      for (std::size_t d = 0; d < n_designs; ++d) {
        const std::size_t cell = d * n_sizes + i;
        if (!curve.cells[cell].feasible) continue;
        ctx.check_cancelled();
        const Sample s = draw_sample(cohort, scenario.designs[d], scenario.sample_sizes[i], sampling_seed);
        std::vector<double> scores(s.n());
        for (std::size_t j = 0; j < s.n(); ++j) scores[j] = cohort.scores[s.indices[j]];
        const auto labels = sample_labels(cohort, scenario.truth, s.indices, outcome_seed);
        const RecalibrationTests tests = recalibration_tests(scores, labels);
        if (!tests.usable) continue;
        std::uint8_t bits = 1;
        for (std::size_t t = 0; t < 3; ++t) {
          if (tests.tests[t].p_value < scenario.level) bits |= static_cast<std::uint8_t>(1u << (t + 1));
        }
        outcome[r * n_cells + cell] = bits;
      }
    }
    progress.advance();
  });

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    PowerCell& c = curve.cells[cell];
    if (!c.feasible) {
      c.power.fill(std::numeric_limits<double>::quiet_NaN());
      c.std_error.fill(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    for (std::size_t r = 0; r < B; ++r) {
      const std::uint8_t bits = outcome[r * n_cells + cell];
      if (!(bits & 1u)) {
        ++c.dropped;
        continue;
      }
      ++c.usable;
      for (std::size_t t = 0; t < 3; ++t) c.rejections[t] += (bits >> (t + 1)) & 1u;
    }
    for (std::size_t t = 0; t < 3; ++t) {
      if (c.usable == 0) {
        c.power[t] = std::numeric_limits<double>::quiet_NaN();
        c.std_error[t] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double u = static_cast<double>(c.usable);
      const double pw = static_cast<double>(c.rejections[t]) / u;
      c.power[t] = pw;
      c.std_error[t] = std::sqrt(pw * (1.0 - pw) / u);
    }
    if (10 * c.dropped > B) curve.unreliable = true;
  }
  return curve;
}

std::optional<double> crossing_n(const PowerCurve& curve, std::size_t design, RecalTest test, double target) {
  std::optional<double> prev_n;
  double prev_power = 0.0;
  for (std::size_t i = 0; i < curve.sample_sizes.size(); ++i) {
    const PowerCell& c = curve.cell(design, i);
    if (!c.feasible || !std::isfinite(c.power_of(test))) continue;
    const double n = static_cast<double>(c.n);
    const double pw = c.power_of(test);
    if (pw >= target) {
      if (!prev_n) return n;
      return *prev_n + (target - prev_power) / (pw - prev_power) * (n - *prev_n);
    }
    prev_n = n;
    prev_power = pw;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<double> sparse_gamma(std::size_t p, std::size_t first, std::size_t count, double effect) {
  if (first + count > p) throw InputError("sparse gamma: support exceeds feature dimension");
  std::vector<double> g(p, 0.0);
  for (std::size_t j = first; j < first + count; ++j) g[j] = effect;
  return g;
}

ModificationParams revision_truth(std::size_t p) {
  const auto nonzero = static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(p)));
  return {-std::log(3.0), 0.9, sparse_gamma(p, 20, nonzero, 0.6)};
}

RevisionResult run_revision_experiment(const Cohort& cohort, const RevisionScenario& scenario,
                                       const ExecutionContext& ctx) {
  check_sizes(scenario.sample_sizes, scenario.replicates, scenario.designs.size());
  validate_params(scenario.truth, cohort.dim());
  if (!cohort.has_features()) throw InputError("cohort: revision experiments need features");
  if (!scenario.truth.has_revision()) throw InputError("truth.gamma: at least one nonzero coefficient required");
  if (scenario.lambda.count == 0) throw InputError("lambda.count: must be at least 1");
  if (!(scenario.lambda.log_max >= scenario.lambda.log_min)) throw InputError("lambda: log_max must be >= log_min");
  if (scenario.alt_threshold < 0.0) throw InputError("alt_threshold: must be non-negative");
  for (const auto& d : scenario.designs) {
    if (d.kind == DesignKind::pcc) validate_design(d.config);
  }

  const std::size_t n_designs = scenario.designs.size();
  const std::size_t n_sizes = scenario.sample_sizes.size();
  const std::size_t n_cells = n_designs * n_sizes;
  const std::size_t B = scenario.replicates;
  const std::size_t p = cohort.dim();
  const bool want_alt = scenario.alt_threshold > 0.0;

  RevisionResult result;
  result.designs = scenario.designs;
  result.sample_sizes = scenario.sample_sizes;
  result.replicates = B;
  result.cells.resize(n_cells);
  for (std::size_t d = 0; d < n_designs; ++d) {
    const std::size_t cap = design_capacity(cohort, scenario.designs[d]);
    for (std::size_t i = 0; i < n_sizes; ++i) {
      RevisionCell& c = result.cells[d * n_sizes + i];
      c.design = d;
      c.n = scenario.sample_sizes[i];
      c.feasible = c.n <= cap;
      result.any_infeasible = result.any_infeasible || !c.feasible;
    }
  }

  struct Replicate {
    bool usable = false;
    double prevalence = 0.0;
    RecoveryCurve curve;
    RecoveryCurve alt;
  };
  std::vector<Replicate> reps(B * n_cells);
  const LassoOptions& lasso = scenario.lasso;

  ProgressTracker progress(ctx, B);
  parallel_for(B, ctx, [&](std::size_t r) {
    const Seed outcome_seed = derive_seed(scenario.seed, {stream::outcomes, r});
    for (std::size_t i = 0; i < n_sizes; ++i) {
      const std::size_t n = scenario.sample_sizes[i];
      const Seed sampling_seed = derive_seed(scenario.seed, {stream::sampling, r, i});
      const auto grid = lambda_grid_per_observation(n, scenario.lambda.log_min, scenario.lambda.log_max,
                                                    scenario.lambda.count);
      for (std::size_t d = 0; d < n_designs; ++d) {
        const std::size_t cell = d * n_sizes + i;
        if (!result.cells[cell].feasible) continue;
        ctx.check_cancelled();
        const Sample s = draw_sample(cohort, scenario.designs[d], n, sampling_seed);
        std::vector<double> scores(n);
        FeatureMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        for (std::size_t j = 0; j < n; ++j) {
          scores[j] = cohort.scores[s.indices[j]];
          x.row(static_cast<Eigen::Index>(j)) = cohort.features.row(static_cast<Eigen::Index>(s.indices[j]));
        }
        const auto labels = sample_labels(cohort, scenario.truth, s.indices, outcome_seed);
        Replicate& rep = reps[r * n_cells + cell];
        std::size_t cases = 0;
        for (std::uint8_t y : labels) cases += y;
        rep.prevalence = static_cast<double>(cases) / static_cast<double>(n);
        if (cases == 0 || cases == n) continue;
        const LassoPath path = fit_lasso_path(scores, x, labels, grid, lasso);
        if (!path.all_converged()) continue;
        rep.usable = true;
        rep.curve = support_recovery(path, scenario.truth.gamma);
        if (want_alt) rep.alt = support_recovery_alt(path, scenario.truth.gamma, scenario.alt_threshold);
      }
    }
    progress.advance();
  });

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    RevisionCell& c = result.cells[cell];
    if (!c.feasible) {
      c.mean_prevalence = c.entropy = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::vector<RecoveryCurve> curves;
    std::vector<RecoveryCurve> alts;
    double prevalence = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
      const Replicate& rep = reps[r * n_cells + cell];
      prevalence += rep.prevalence;
      if (!rep.usable) {
        ++c.dropped;
        continue;
      }
      ++c.usable;
      curves.push_back(rep.curve);
      if (want_alt) alts.push_back(rep.alt);
    }
    c.mean_prevalence = prevalence / static_cast<double>(B);
    c.entropy = binary_entropy(c.mean_prevalence);
    if (!curves.empty()) {
      c.curve = average_curves(curves);
      if (want_alt) c.alt_curve = average_curves(alts);
    }
    if (10 * c.dropped > B) result.unreliable = true;
  }
  return result;
}

// ---------------------------------------------------------------------------

DesignComparison compare_with_srs(const Cohort& cohort, const DesignConfig& config, std::size_t n,
                                  std::size_t replicates, Seed seed, const AssumedParams& assumed,
                                  const ExecutionContext& ctx) {
  validate_design(config);
  DesignComparison out;
  out.config = config;
  out.n = n;
  out.replicates = replicates;
  out.seed = seed;
  const Strata strata(cohort.scores, config.cutoff_k);
  out.max_feasible_n = max_feasible_n(strata.high().size(), strata.low().size(), config.weight_w);
  out.feasible = n <= out.max_feasible_n;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  GridSpec grid;
  grid.k_grid = {config.cutoff_k};
  grid.w_grid = {config.weight_w};
  grid.n = n;
  grid.replicates = replicates;
  grid.seed = seed;
  if (!out.feasible) {
    const std::size_t high = high_stratum_count(n, config.weight_w);
    out.limiting_stratum = high > strata.high().size() ? Stratum::high : Stratum::low;
    out.pcc = {nan, nan, nan, nan, nan};
    out.ratios = {nan, nan};
    // The SRS reference does not depend on the cell; an SRS-equivalent weight
    // keeps the single cell feasible.
    const auto [lo, hi] = std::minmax_element(cohort.scores.begin(), cohort.scores.end());
    grid.k_grid = {std::clamp(config.cutoff_k, *lo, *hi)};
    const Strata inside(cohort.scores, grid.k_grid[0]);
    grid.w_grid = {inside.high_fraction()};
    if (max_feasible_n(inside.high().size(), inside.low().size(), grid.w_grid[0]) < n) {
      out.srs = {nan, nan, nan, nan, nan};
      return out;
    }
  }
  const SurfacePair pair = estimate_surfaces(cohort, grid, assumed, ctx);
  const InfoSurface& d = pair.d_optimality;
  const InfoSurface& b = pair.binary_entropy;
  out.srs = {d.srs_reference, d.srs_std_error, b.srs_reference, b.srs_std_error, d.srs_mean_prob};
  if (!out.feasible) return out;
  out.pcc = {d.values[0], d.std_error[0], b.values[0], b.std_error[0], d.mean_prob[0]};
  if (std::isfinite(out.pcc.phi_d) && std::isfinite(out.srs.phi_d) && out.srs.mean_prob > 0.0) {
    out.ratios = compare_designs(out.pcc.phi_d, out.srs.phi_d, out.pcc.mean_prob, out.srs.mean_prob);
  } else {
    out.ratios = {nan, nan};
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<InfoSurface> run_robustness_study(const Cohort& cohort, const GridSpec& grid,
                                              std::span<const AssumedParams> assumed, Criterion criterion,
                                              const ExecutionContext& ctx) {
  if (assumed.empty()) throw InputError("assumed: at least one parameter setting required");
  std::vector<InfoSurface> out;
  out.reserve(assumed.size());
  for (std::size_t a = 0; a < assumed.size(); ++a) {
    const ExecutionContext sub = part_context(ctx, a, assumed.size());
    out.push_back(estimate_surface(cohort, grid, criterion, assumed[a], sub));
  }
  return out;
}

}  // namespace pcc
