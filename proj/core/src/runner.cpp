#include "pcc/runner.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>

#include "pcc/cohort_io.hpp"
#include "pcc/errors.hpp"

namespace pcc {

namespace {

std::string csv_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

Json cohort_info(const Cohort& c) {
  Json j;
  j["n"] = c.size();
  j["p"] = c.dim();
  j["prevalence_initial"] = real_to_json(c.prevalence_initial);
  return j;
}

std::string safe_name(std::string s) {
  for (char& ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' ||
                    ch == '_' || ch == '.';
    if (!ok) ch = '_';
  }
  return s;
}

GridSpec make_grid(const Cohort& cohort, const std::vector<double>& k_grid, const std::vector<double>& w_grid,
                   std::size_t k_points, std::size_t w_points, std::size_t n, std::size_t replicates, Seed seed) {
  GridSpec g = default_grid(cohort.scores, n, replicates, seed, k_points, w_points);
  if (!k_grid.empty()) g.k_grid = k_grid;
  if (!w_grid.empty()) g.w_grid = w_grid;
  validate_grid(g, cohort.scores);
  return g;
}

RunOutput run_surface(const SurfaceRequest& r, Seed seed, const CohortResolver& resolve, const ExecutionContext& ctx) {
  const CohortPtr cohort = resolve(r.cohort);
  const GridSpec grid = make_grid(*cohort, r.k_grid, r.w_grid, r.k_points, r.w_points, r.n, r.replicates, seed);
  const SurfacePair pair = estimate_surfaces(*cohort, grid, r.assumed, ctx);
  RunOutput out;
  out.result["command"] = "surface";
  out.result["seed"] = seed;
  out.result["cohort"] = cohort_info(*cohort);
  out.result["surfaces"] = to_json(pair);
  out.artifacts.push_back({"surface_d_optimality.csv", csv_of([&](std::ostream& o) { write_surface_csv(pair.d_optimality, o); })});
  out.artifacts.push_back(
      {"surface_binary_entropy.csv", csv_of([&](std::ostream& o) { write_surface_csv(pair.binary_entropy, o); })});
  const std::size_t masked = static_cast<std::size_t>(
      std::count(pair.d_optimality.feasible.begin(), pair.d_optimality.feasible.end(), std::uint8_t{0}));
  if (masked > 0) out.notes.push_back(std::to_string(masked) + " grid cells infeasible at n=" + std::to_string(grid.n));
  return out;
}

void note_cells(RunOutput& out, const std::vector<DesignSpec>& designs, const Cohort& cohort, std::size_t n,
                bool feasible, std::size_t dropped, std::size_t replicates, const std::string& prefix) {
  (void)designs;
  if (!feasible) {
    out.notes.push_back(prefix + "n=" + std::to_string(n) + ": infeasible (cohort of " + std::to_string(cohort.size()) + ")");
  } else if (10 * dropped > replicates) {
    out.notes.push_back(prefix + "n=" + std::to_string(n) + ": unreliable, " + std::to_string(dropped) + " of " +
                        std::to_string(replicates) + " replicates dropped");
  }
}

RunOutput run_power(const PowerRequest& r, Seed seed, const CohortResolver& resolve, const ExecutionContext& ctx) {
  const CohortPtr cohort = resolve(r.cohort);
  std::vector<PowerCurve> curves;
  curves.reserve(r.scenarios.size());
  for (std::size_t s = 0; s < r.scenarios.size(); ++s) {
    PowerScenario sc;
    sc.truth = r.scenarios[s].params;
    sc.designs = r.designs;
    sc.sample_sizes = r.sample_sizes;
    sc.replicates = r.replicates;
    sc.level = r.level;
    sc.seed = seed;
    ExecutionContext sub = ctx;
    if (ctx.progress) {
      sub.progress = [&ctx, s, total = r.scenarios.size()](std::size_t done, std::size_t of) {
        ctx.progress(s * of + done, total * of);
      };
    }
    curves.push_back(run_power_experiment(*cohort, sc, sub));
  }
  RunOutput out;
  out.result["command"] = "power";
  out.result["seed"] = seed;
  out.result["cohort"] = cohort_info(*cohort);
  Json scen = Json::array();
  std::vector<LabelledPowerCurve> labelled;
  for (std::size_t s = 0; s < curves.size(); ++s) {
    Json j;
    j["name"] = r.scenarios[s].name;
    j["truth"] = to_json(r.scenarios[s].params);
    j["curve"] = to_json(curves[s]);
    scen.push_back(std::move(j));
    labelled.push_back({r.scenarios[s].name, r.scenarios[s].params, &curves[s]});
    out.flagged = out.flagged || curves[s].unreliable || curves[s].any_infeasible;
    for (const PowerCell& c : curves[s].cells) {
      note_cells(out, r.designs, *cohort, c.n, c.feasible, c.dropped, r.replicates,
                 r.scenarios[s].name + " " + r.designs[c.design].label() + " ");
    }
  }
  out.result["scenarios"] = std::move(scen);
  out.artifacts.push_back({"power.csv", csv_of([&](std::ostream& o) { write_power_csv(labelled, o); })});
  return out;
}

RunOutput run_revision(const RevisionRequest& r, Seed seed, const CohortResolver& resolve, const ExecutionContext& ctx) {
  const CohortPtr cohort = resolve(r.cohort);
  RevisionScenario sc;
  sc.truth = r.truth;
  sc.designs = r.designs;
  sc.sample_sizes = r.sample_sizes;
  sc.replicates = r.replicates;
  sc.lambda = r.lambda;
  sc.alt_threshold = r.alt_threshold;
  sc.seed = seed;
  const RevisionResult res = run_revision_experiment(*cohort, sc, ctx);
  RunOutput out;
  out.result["command"] = "revision";
  out.result["seed"] = seed;
  out.result["cohort"] = cohort_info(*cohort);
  out.result["truth"] = to_json(r.truth);
  out.result["lambda"] = {{"log_min", r.lambda.log_min}, {"log_max", r.lambda.log_max}, {"count", r.lambda.count},
                          {"scale", "n * exp(t)"}};
  out.result["revision"] = to_json(res);
  out.artifacts.push_back({"recovery.csv", csv_of([&](std::ostream& o) { write_recovery_csv(res, o); })});
  out.flagged = res.unreliable || res.any_infeasible;
  for (const RevisionCell& c : res.cells) {
    note_cells(out, r.designs, *cohort, c.n, c.feasible, c.dropped, r.replicates, r.designs[c.design].label() + " ");
  }
  return out;
}

RunOutput run_robustness(const RobustnessRequest& r, Seed seed, const CohortResolver& resolve,
                         const ExecutionContext& ctx) {
  RunOutput out;
  out.result["command"] = "robustness";
  out.result["seed"] = seed;
  Json cohorts = Json::array();
  std::vector<AssumedParams> assumed;
  for (const NamedParams& np : r.assumed) assumed.push_back(np.params);
  const std::size_t parts = r.cohorts.size();
  for (std::size_t ci = 0; ci < r.cohorts.size(); ++ci) {
    const CohortPtr cohort = resolve(r.cohorts[ci]);
    const GridSpec grid = make_grid(*cohort, r.k_grid, r.w_grid, r.k_points, r.w_points, r.n, r.replicates, seed);
    ExecutionContext sub = ctx;
    if (ctx.progress) {
      sub.progress = [&ctx, ci, parts](std::size_t done, std::size_t of) { ctx.progress(ci * of + done, parts * of); };
    }
    // Both criteria come from the same draws, so estimate pairs once per setting.
    std::vector<SurfacePair> pairs;
    for (std::size_t a = 0; a < assumed.size(); ++a) {
      ExecutionContext part = sub;
      if (sub.progress) {
        part.progress = [&sub, a, total = assumed.size()](std::size_t done, std::size_t of) {
          sub.progress(a * of + done, total * of);
        };
      }
      pairs.push_back(estimate_surfaces(*cohort, grid, assumed[a], part));
    }
    Json cj;
    cj["name"] = r.cohorts[ci].name;
    cj["cohort"] = cohort_info(*cohort);
    Json surfaces = Json::array();
    for (Criterion crit : r.criteria) {
      for (std::size_t a = 0; a < assumed.size(); ++a) {
        const InfoSurface& s = pairs[a].get(crit);
        Json sj;
        sj["assumed_name"] = r.assumed[a].name;
        sj["criterion"] = std::string(to_string(crit));
        sj["surface"] = to_json(s);
        const auto top = top_decile_cells(s);
        Json tj = Json::array();
        for (const auto& [ki, wi] : top) tj.push_back(Json::array({ki, wi}));
        sj["top_decile"] = std::move(tj);
        surfaces.push_back(std::move(sj));
        out.artifacts.push_back({"robustness_" + safe_name(r.cohorts[ci].name) + "_" + safe_name(r.assumed[a].name) + "_" +
                                     std::string(to_string(crit)) + ".csv",
                                 csv_of([&](std::ostream& o) { write_surface_csv(s, o); })});
      }
    }
    cj["surfaces"] = std::move(surfaces);
    cohorts.push_back(std::move(cj));
  }
  out.result["cohorts"] = std::move(cohorts);
  return out;
}

RunOutput run_compare(const CompareRequest& r, Seed seed, const CohortResolver& resolve, const ExecutionContext& ctx) {
  const CohortPtr cohort = resolve(r.cohort);
  const DesignComparison c = compare_with_srs(*cohort, r.design, r.n, r.replicates, seed, r.assumed, ctx);
  RunOutput out;
  out.result["command"] = "compare";
  out.result["seed"] = seed;
  out.result["cohort"] = cohort_info(*cohort);
  out.result["comparison"] = to_json(c);
  if (!c.feasible) {
    out.flagged = true;
    out.notes.push_back("design infeasible at n=" + std::to_string(r.n) + ": max feasible n is " +
                        std::to_string(c.max_feasible_n) + ", limited by the " +
                        to_string(c.limiting_stratum.value_or(Stratum::high)) + " stratum");
  }
  return out;
}

RunOutput run_gen_cohort(const GenCohortRequest& r, Seed seed, const CohortResolver& resolve) {
  CohortSource src = r.cohort;
  const CohortPtr base = resolve(src);
  Cohort cohort = *base;
  if (r.outcomes) {
    cohort.labels = generate_outcomes(cohort, *r.outcomes, r.outcome_seed);
    if (cohort.generation) {
      cohort.generation->outcome_params = r.outcomes;
      cohort.generation->outcome_seed = r.outcome_seed;
    }
  }
  RunOutput out;
  out.result["command"] = "gen-cohort";
  out.result["seed"] = seed;
  out.result["cohort"] = cohort_info(cohort);
  const ScoreSummary s = summarize_scores(cohort);
  out.result["summary"] = to_json(s);
  if (cohort.labels) {
    std::size_t cases = 0;
    for (std::uint8_t y : *cohort.labels) cases += y;
    out.result["label_prevalence"] = static_cast<double>(cases) / static_cast<double>(cohort.size());
  }
  std::ostringstream data;
  if (r.format == GenCohortRequest::Format::binary) {
    write_cohort_binary(cohort, data);
    out.artifacts.push_back({"cohort.bin", data.str()});
  } else {
    write_cohort_csv(cohort, data);
    out.artifacts.push_back({"cohort.csv", data.str()});
  }
  return out;
}

}  // namespace

bool is_command(std::string_view name) noexcept {
  return std::find(std::begin(kCommands), std::end(kCommands), name) != std::end(kCommands);
}

CohortResolver make_cohort_resolver(std::filesystem::path base_dir,
                                    std::function<CohortPtr(const std::string&)> handles) {
  return [base_dir = std::move(base_dir), handles = std::move(handles)](const CohortSource& src) -> CohortPtr {
    switch (src.kind) {
      case CohortSource::Kind::lda:
      case CohortSource::Kind::normal:
        return std::make_shared<const Cohort>(build_cohort(src.spec));
      case CohortSource::Kind::file: {
        std::filesystem::path p(src.path);
        if (p.is_relative()) p = base_dir / p;
        return std::make_shared<const Cohort>(load_cohort(p));
      }
      case CohortSource::Kind::handle:
        if (handles) {
          if (CohortPtr c = handles(src.handle)) return c;
        }
        throw ConfigError("cohort.id", "unknown cohort handle '" + src.handle + "'");
    }
    throw ConfigError("cohort.kind", "unsupported cohort kind");
  };
}

std::string result_bytes(const Json& result) { return result.dump(2) + "\n"; }

Json prepare_config(std::string_view command, const Json& config, std::optional<Seed> seed_override,
                    Seed fallback_seed) {
  if (!is_command(command)) throw ConfigError("", "unknown command '" + std::string(command) + "'");
  if (!config.is_object()) throw ConfigError("", "config must be a JSON object");
  Json eff = config;
  if (seed_override) {
    eff["seed"] = *seed_override;
  } else if (!eff.contains("seed")) {
    eff["seed"] = fallback_seed;
  }
  // Validate now so errors surface before any work starts.
  if (command == "surface") {
    (void)parse_surface_request(eff);
  } else if (command == "power") {
    (void)parse_power_request(eff);
  } else if (command == "revision") {
    (void)parse_revision_request(eff);
  } else if (command == "robustness") {
    (void)parse_robustness_request(eff);
  } else if (command == "compare") {
    (void)parse_compare_request(eff);
  } else {
    (void)parse_gen_cohort_request(eff);
  }
  return eff;
}

ExecutionContext with_threads(const ExecutionContext& ctx, const Json& effective_config) {
  ExecutionContext out = ctx;
  if (effective_config.contains("threads") && effective_config["threads"].is_number_integer() &&
      effective_config["threads"].get<std::int64_t>() > 0) {
    out.threads = std::max(out.threads, effective_config["threads"].get<std::size_t>());
  }
  return out;
}

RunOutput run_command(std::string_view command, const Json& eff, const CohortResolver& resolve,
                      const ExecutionContext& ctx) {
  const Seed seed = eff.at("seed").get<Seed>();
  RunOutput out;
  if (command == "surface") {
    out = run_surface(parse_surface_request(eff), seed, resolve, ctx);
  } else if (command == "power") {
    out = run_power(parse_power_request(eff), seed, resolve, ctx);
  } else if (command == "revision") {
    out = run_revision(parse_revision_request(eff), seed, resolve, ctx);
  } else if (command == "robustness") {
    out = run_robustness(parse_robustness_request(eff), seed, resolve, ctx);
  } else if (command == "compare") {
    out = run_compare(parse_compare_request(eff), seed, resolve, ctx);
  } else if (command == "gen-cohort") {
    out = run_gen_cohort(parse_gen_cohort_request(eff), seed, resolve);
  } else {
    throw ConfigError("", "unknown command '" + std::string(command) + "'");
  }
  out.command = std::string(command);
  out.seed = seed;
  out.config = eff;
  return out;
}

}  // namespace pcc
