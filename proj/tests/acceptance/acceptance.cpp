// Acceptance suite. One PASS/FAIL line per criterion; exits 1 if any fails.
// Usage: pcc_acceptance [--list] [name...]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lasso_oracle.hpp"
#include "pcc/experiments.hpp"
#include "pcc/runner.hpp"
#include "pcc/serialization.hpp"
#include "pcc/service.hpp"
#include "test_support.hpp"

using namespace pcc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one sub-check; the first failure keeps the line FAIL.
  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "!") << what;
  }
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

bool within(double v, double target, double tol) { return std::isfinite(v) && std::abs(v - target) <= tol; }

std::string band(const std::string& label, double v, double target, double tol, int digits = 3) {
  return label + "=" + fmt(v, digits) + " (" + fmt(target, digits) + "+-" + fmt(tol, digits) + ")";
}

const Cohort& rare_cohort() {
  static const Cohort c = generate_normal_score_cohort(10000, -1.5, 1.0, 1);
  return c;
}

const Cohort& lda_cohort() {
  static const Cohort c = build_cohort({});
  return c;
}

// ---------------------------------------------------------------------------

void check_entropy_values(Outcome& o) {
  const double p[4] = {0.09, 0.23, 0.25, 0.28};
  const double want[4] = {0.436, 0.778, 0.811, 0.857};
  for (int i = 0; i < 4; ++i) {
    const double h = binary_entropy(p[i]);
    o.expect(within(h, want[i], 0.01) && std::abs(h - test::entropy2(p[i])) < 1e-12,
             band("H(" + fmt(p[i], 2) + ")", h, want[i], 0.01));
  }
}

void check_reference_design(Outcome& o) {
  const DesignComparison c = compare_with_srs(rare_cohort(), {1.0, 0.5}, 100, 500, 1);
  o.expect(within(c.pcc.phi_d, -3.12, 0.25), band("phiD_pcc", c.pcc.phi_d, -3.12, 0.25, 2));
  o.expect(within(c.srs.phi_d, -4.12, 0.25), band("phiD_srs", c.srs.phi_d, -4.12, 0.25, 2));
  o.expect(within(c.pcc.mean_prob, 0.49, 0.03), band("pbar_pcc", c.pcc.mean_prob, 0.49, 0.03, 2));
  o.expect(within(c.srs.mean_prob, 0.23, 0.03), band("pbar_srs", c.srs.mean_prob, 0.23, 0.03, 2));
  o.expect(within(c.ratios.det_ratio, 2.72, 0.5), band("det_ratio", c.ratios.det_ratio, 2.72, 0.5, 2));
  o.expect(within(c.ratios.prevalence_ratio, 2.13, 0.3), band("prev_ratio", c.ratios.prevalence_ratio, 2.13, 0.3, 2));
}

std::pair<double, double> feasible_range(const InfoSurface& s) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!s.feasible[i]) continue;
    lo = std::min(lo, s.values[i]);
    hi = std::max(hi, s.values[i]);
  }
  return {lo, hi};
}

void check_surface_ranges(Outcome& o) {
  const GridSpec grid = default_grid(rare_cohort().scores, 100, 200, 1);
  ExecutionContext ctx;
  ctx.threads = std::max(1u, std::thread::hardware_concurrency());
  const SurfacePair pair = estimate_surfaces(rare_cohort(), grid, {}, ctx);
  const auto [dlo, dhi] = feasible_range(pair.d_optimality);
  const auto [blo, bhi] = feasible_range(pair.binary_entropy);
  o.expect(within(dlo, -8.0, 0.5), band("D_min", dlo, -8.0, 0.5, 2));
  o.expect(within(dhi, -3.0, 0.3), band("D_max", dhi, -3.0, 0.3, 2));
  o.expect(within(blo, 0.20, 0.05), band("H_min", blo, 0.20, 0.05, 2));
  o.expect(within(bhi, 0.99, 0.02), band("H_max", bhi, 0.99, 0.02, 2));
}

void check_srs_equivalence(Outcome& o) {
  const Cohort c = generate_normal_score_cohort(2000, -1.5, 1.0, 3);
  const std::size_t n = 200, seeds = 500;
  for (double k : {-2.0, -1.0, 0.0}) {
    const Strata st(c.scores, k);
    const DesignConfig cfg{k, st.high_fraction()};
    std::vector<double> f_srs(c.size(), 0.0), f_pcc(c.size(), 0.0);
    for (std::size_t r = 0; r < seeds; ++r) {
      const Seed seed = derive_seed(99, {r});
      for (std::size_t i : srs_sample(c, n, seed).indices) f_srs[i] += 1.0;
      for (std::size_t i : pcc_sample(st, cfg, n, seed).indices) f_pcc[i] += 1.0;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(f_srs[i] - f_pcc[i]) / seeds);
    o.expect(worst <= 0.05, "k=" + fmt(k, 1) + " max|dfreq|=" + fmt(worst) + " (<=0.05)");
  }
  // The draw is a function of scores and seed only.
  Cohort labelled = c;
  std::size_t mismatches = 0;
  for (std::size_t r = 0; r < seeds; ++r) {
    const Seed seed = derive_seed(7, {r});
    const DesignConfig cfg{-1.0, 0.6};
    const Sample bare = pcc_sample(c, cfg, n, seed);
    labelled.labels = generate_outcomes(c, {}, seed);
    if (pcc_sample(labelled, cfg, n, seed).indices != bare.indices) ++mismatches;
    labelled.labels = std::vector<std::uint8_t>(c.size(), static_cast<std::uint8_t>(r % 2));
    if (pcc_sample(labelled, cfg, n, seed).indices != bare.indices) ++mismatches;
  }
  o.expect(mismatches == 0, "label-dependent draws=" + std::to_string(mismatches));
}

void entropy_gain_case(Outcome& o, const std::string& name, double mean, double k, double w, bool above) {
  const Cohort c = generate_normal_score_cohort(10000, mean, 1.0, 5);
  const double share = Strata(c.scores, k).high_fraction();
  GridSpec g;
  g.k_grid = {k};
  g.w_grid = {w};
  g.n = 100;
  g.replicates = 500;
  g.seed = 11;
  const InfoSurface b = estimate_surface(c, g, Criterion::binary_entropy);
  const double gap = b.values[0] - b.srs_reference;
  const double se = std::hypot(b.std_error[0], b.srs_std_error);
  const bool side = above ? w > share : w < share;
  o.expect(side && gap > 3 * se, name + ": w=" + fmt(w, 2) + " P(S>k)=" + fmt(share) + " pbar_srs=" +
                                     fmt(b.srs_mean_prob) + " gap=" + fmt(gap, 4) + " (>3se=" + fmt(3 * se, 4) + ")");
}

void check_entropy_gain(Outcome& o) {
  entropy_gain_case(o, "rare", -1.5, -1.0, 0.5, true);
  entropy_gain_case(o, "prevalent", 1.5, 1.0, 0.4, false);
}

void check_recalibration_power(Outcome& o) {
  ExecutionContext ctx;
  ctx.threads = std::max(1u, std::thread::hardware_concurrency());
  PowerScenario null;
  null.sample_sizes = {500};
  null.replicates = 200;
  const PowerCurve size = run_power_experiment(lda_cohort(), null, ctx);
  for (std::size_t d = 0; d < 2; ++d) {
    for (RecalTest t : {RecalTest::intercept, RecalTest::slope, RecalTest::logistic_recal}) {
      const double p = size.cell(d, 0).power_of(t);
      o.expect(within(p, 0.05, 0.03), size.designs[d].label() + " " + std::string(to_string(t)) + " size=" + fmt(p));
    }
  }
  PowerScenario alt;
  alt.truth.alpha0 = -std::log(1.5);
  alt.truth.alpha1 = 0.8;
  alt.sample_sizes = {100, 150, 200, 250, 300, 350, 400, 500, 600, 750, 1000, 1250, 1500, 1750, 2000};
  alt.replicates = 200;
  const PowerCurve curve = run_power_experiment(lda_cohort(), alt, ctx);
  const double lo[2] = {750, 150}, hi[2] = {1250, 350};
  for (std::size_t d = 0; d < 2; ++d) {
    const std::optional<double> x = crossing_n(curve, d, RecalTest::logistic_recal, 0.80);
    const bool ok = x && *x >= lo[d] && *x <= hi[d];
    o.expect(ok, curve.designs[d].label() + " n80=" + (x ? fmt(*x, 0) : std::string("none")) + " (" + fmt(lo[d], 0) +
                     ".." + fmt(hi[d], 0) + ")");
  }
}

// The recovery run doubles as the sweep-monotonicity check for every fit.
struct RecoveryRun {
  RevisionResult result;
  std::size_t sweeps = 0;
  std::size_t violations = 0;
};

const RecoveryRun& recovery_run() {
  static const RecoveryRun run = [] {
    RecoveryRun r;
    RevisionScenario sc;
    sc.truth = revision_truth(100);
    sc.sample_sizes = {500, 750};
    sc.replicates = 200;
    std::size_t last_lambda = std::numeric_limits<std::size_t>::max();
    std::size_t last_sweep = 0;
    double last = std::numeric_limits<double>::infinity();
    sc.lasso.on_sweep = [&](std::size_t li, std::size_t sweep, double f) {
      // A new fit or lambda restarts the sequence.
      if (li != last_lambda || sweep <= last_sweep) last = std::numeric_limits<double>::infinity();
      last_lambda = li;
      last_sweep = sweep;
      ++r.sweeps;
      if (f > last + 1e-12 * std::abs(last)) ++r.violations;
      last = f;
    };
    ExecutionContext ctx;
    ctx.threads = 1;  // the checker above is not thread safe
    r.result = run_revision_experiment(lda_cohort(), sc, ctx);
    return r;
  }();
  return run;
}

void check_support_recovery(Outcome& o) {
  const RevisionResult& res = recovery_run().result;
  const double srs500 = recovery_at_fdr(res.cell(0, 0).curve, 0.2);
  const double pcc500 = recovery_at_fdr(res.cell(1, 0).curve, 0.2);
  const double pcc750 = recovery_at_fdr(res.cell(1, 1).curve, 0.1);
  o.expect(pcc500 >= 0.6, "n=500 pcc recovery@0.2=" + fmt(pcc500) + " (>=0.6)");
  o.expect(srs500 <= 0.3, "n=500 srs recovery@0.2=" + fmt(srs500) + " (<=0.3)");
  o.expect(1.0 - pcc750 <= 0.05, "n=750 pcc FER@0.1=" + fmt(1.0 - pcc750) + " (<=0.05)");
  o.detail << "; pcc prevalence=" << fmt(res.cell(1, 0).mean_prevalence) << " H=" << fmt(res.cell(1, 0).entropy);
}

void check_lasso_oracle(Outcome& o) {
  double worst = 0.0;
  std::size_t points = 0;
  bool converged = true;
  for (bool standardize : {true, false}) {
    for (Seed seed : {1u, 2u, 3u, 4u, 5u}) {
      const test::Instance d = test::make_instance(200, seed);
      const auto grid = lambda_grid_per_observation(200, -6.0, -0.5, 10);
      LassoOptions opt;
      opt.standardize = standardize;
      opt.tolerance = 1e-9;
      const LassoPath path = fit_lasso_path(d.s, d.x, d.y, grid, opt);
      converged = converged && path.all_converged();
      std::vector<double> c(3, 1.0);
      if (standardize) {
        for (Eigen::Index j = 0; j < 3; ++j) c[static_cast<std::size_t>(j)] = test::population_sd(d.x, j);
      }
      for (const LassoPoint& pt : path.points) {
        const Eigen::VectorXd ref = test::orthant_oracle(d, pt.lambda, c);
        const double mine[5] = {pt.alpha0, pt.alpha1, pt.gamma[0], pt.gamma[1], pt.gamma[2]};
        for (Eigen::Index j = 0; j < 5; ++j) worst = std::max(worst, std::abs(mine[j] - ref[j]));
        ++points;
      }
    }
  }
  o.expect(converged && worst <= 1e-4, std::to_string(points) + " path points, max|coef diff|=" +
                                           sci(worst) +
                                           " (<=1e-4)");
  const RecoveryRun& run = recovery_run();
  o.expect(run.sweeps > 0 && run.violations == 0,
           "objective increases=" + std::to_string(run.violations) + " over " + std::to_string(run.sweeps) + " sweeps");
}

bool cells_intersect(const std::vector<std::pair<std::size_t, std::size_t>>& a,
                     const std::vector<std::pair<std::size_t, std::size_t>>& b) {
  const std::set<std::pair<std::size_t, std::size_t>> sa(a.begin(), a.end());
  for (const auto& c : b)
    if (sa.count(c)) return true;
  return false;
}

void check_robustness(Outcome& o) {
  ExecutionContext ctx;
  ctx.threads = std::max(1u, std::thread::hardware_concurrency());
  const GridSpec grid = default_grid(rare_cohort().scores, 100, 200, 1);
  std::vector<AssumedParams> assumed(4);
  assumed[1].alpha0 = -std::log(2.0);
  assumed[2].alpha1 = 0.8;
  assumed[3].alpha1 = 1.25;
  const char* names[4] = {"null", "(-log2,1)", "(0,0.8)", "(0,1.25)"};
  const auto surfaces = run_robustness_study(rare_cohort(), grid, assumed, Criterion::d_optimality, ctx);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      const bool ok = cells_intersect(top_decile_cells(surfaces[a]), top_decile_cells(surfaces[b]));
      o.expect(ok, std::string(names[a]) + "&" + names[b] + (ok ? " overlap" : " disjoint"));
    }
  }
  // Distinct score distributions on one shared grid.
  const Cohort wide = generate_normal_score_cohort(10000, -1.5, 2.0, 2);
  const Cohort shifted = generate_normal_score_cohort(10000, 0.0, 1.0, 3);
  GridSpec common = grid;
  common.k_grid = linspace(-2.5, 0.5, 25);
  std::vector<SurfaceCell> best;
  for (const Cohort* c : {&rare_cohort(), &wide, &shifted}) {
    best.push_back(surface_argmax(estimate_surface(*c, common, Criterion::d_optimality, {}, ctx)));
  }
  std::string cells;
  bool distinct = true;
  for (std::size_t a = 0; a < best.size(); ++a) {
    cells += (a ? " " : "") + std::string("(") + fmt(best[a].k, 2) + "," + fmt(best[a].w, 2) + ")";
    for (std::size_t b = a + 1; b < best.size(); ++b) {
      if (best[a].k_index == best[b].k_index && best[a].w_index == best[b].w_index) distinct = false;
    }
  }
  o.expect(distinct, "argmax cells " + cells);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PCC_CLI_PATH) + " " + args + " -q > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void check_determinism(Outcome& o) {
  const fs::path dir = test::scratch_dir("acceptance");
  struct Case {
    std::string command;
    std::string config;
  };
  const std::vector<Case> cases{
      {"surface", R"({"cohort": {"kind": "normal", "n": 10000}, "grid": {"k_points": 6, "w_points": 6, "replicates": 50}, "seed": 21})"},
      {"power", R"({"cohort": {"kind": "lda"}, "scenarios": [{"name": "shift", "alpha0": -0.405465, "alpha1": 0.8}],
                    "sample_sizes": [200, 400], "replicates": 40, "seed": 22})"},
      {"revision", R"({"cohort": {"kind": "lda", "n": 5000}, "truth": "revision_default", "sample_sizes": [300], "replicates": 4,
                       "lambda": {"count": 10}, "seed": 23})"},
      {"robustness", R"({"cohorts": [{"kind": "normal", "n": 5000, "name": "rare"}],
                         "assumed": [{"name": "null"}, {"name": "slope", "alpha1": 0.8}],
                         "grid": {"k_points": 5, "w_points": 5, "replicates": 30}, "seed": 24})"},
      {"compare", R"({"cohort": {"kind": "normal", "n": 10000}, "design": {"k": 1, "w": 0.5}, "replicates": 100, "seed": 25})"},
      {"gen-cohort", R"({"cohort": {"kind": "lda", "n": 2000}, "outcomes": {"alpha0": -0.693}, "seed": 26})"},
  };
  std::size_t compared = 0, differing = 0;
  for (const Case& c : cases) {
    const fs::path cfg = dir / (c.command + ".json");
    test::write_file(cfg, c.config);
    const fs::path a = dir / (c.command + "_a"), b = dir / (c.command + "_b");
    const int ca = run_cli(c.command + " " + cfg.string() + " --out " + a.string());
    const int cb = run_cli(c.command + " " + cfg.string() + " --out " + b.string() + " --threads 4");
    if ((ca != 0 && ca != 3) || ca != cb) {
      o.expect(false, c.command + " exit " + std::to_string(ca) + "/" + std::to_string(cb));
      continue;
    }
    for (const auto& e : fs::directory_iterator(a)) {
      const std::string name = e.path().filename().string();
      if (name == "manifest.json") continue;  // carries wall time
      ++compared;
      if (test::read_file(e.path()) != test::read_file(b / name)) {
        ++differing;
        o.expect(false, c.command + "/" + name + " differs");
      }
    }
  }
  o.expect(differing == 0, std::to_string(compared) + " rerun files identical");

  Service svc;
  for (const Case& c : cases) {
    if (c.command != "surface" && c.command != "power" && c.command != "compare") continue;
    const ApiResponse sub = svc.handle("POST", "/jobs", Json({{"kind", c.command}, {"config", Json::parse(c.config)}}).dump());
    if (sub.status != 202) {
      o.expect(false, c.command + " submit status " + std::to_string(sub.status));
      continue;
    }
    const std::string id = Json::parse(sub.body)["id"];
    const bool done = svc.wait(id, 600);
    const ApiResponse res = svc.handle("GET", "/jobs/" + id + "/result", "");
    const bool same = done && res.status == 200 && res.body == test::read_file(dir / (c.command + "_a") / "result.json");
    o.expect(same, c.command + (same ? " service==cli" : " service!=cli"));
  }
  fs::remove_all(dir);
}

struct Entry {
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Entry> criteria{
      {"entropy-values", check_entropy_values},     {"reference-design", check_reference_design},
      {"surface-ranges", check_surface_ranges},     {"srs-equivalence", check_srs_equivalence},
      {"entropy-gain", check_entropy_gain},                     {"recalibration-power", check_recalibration_power},
      {"support-recovery", check_support_recovery}, {"lasso-oracle", check_lasso_oracle},
      {"robustness", check_robustness},             {"determinism", check_determinism},
  };
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--list") {
      for (const Entry& c : criteria) std::cout << c.name << "\n";
      return 0;
    }
    only.insert(a);
  }
  int failed = 0;
  for (const Entry& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << fmt(secs, 1) << "s] " << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
