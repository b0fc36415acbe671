#include "pcc/serialization.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "pcc/cohort_io.hpp"
#include "pcc/errors.hpp"

namespace pcc {

namespace {

Json reals(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(real_to_json(x));
  return a;
}

template <class T>
Json matrix(const InfoSurface& s, const std::vector<T>& flat) {
  Json rows = Json::array();
  for (std::size_t ki = 0; ki < s.rows(); ++ki) {
    Json row = Json::array();
    for (std::size_t wi = 0; wi < s.cols(); ++wi) {
      if constexpr (std::is_same_v<T, std::uint8_t>) {
        row.push_back(flat[s.index(ki, wi)] != 0);
      } else {
        row.push_back(real_to_json(flat[s.index(ki, wi)]));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

// Design labels contain commas.
std::string quoted(const std::string& s) { return '"' + s + '"'; }

const char* variant_name(RecoveryCurve::Variant v) {
  return v == RecoveryCurve::Variant::standard ? "standard" : "alternative";
}

}  // namespace

Json real_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from_json(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError("expected a number, got string '" + s + "'");
  }
  if (!j.is_number()) throw InputError("expected a number");
  return j.get<double>();
}

Json to_json(const ModificationParams& params) {
  Json j;
  j["alpha0"] = params.alpha0;
  j["alpha1"] = params.alpha1;
  j["gamma"] = reals(params.gamma);
  return j;
}

Json to_json(const DesignSpec& design) {
  Json j;
  j["design"] = design.kind == DesignKind::srs ? "srs" : "pcc";
  if (design.kind == DesignKind::pcc) {
    j["k"] = design.config.cutoff_k;
    j["w"] = design.config.weight_w;
  }
  j["label"] = design.label();
  return j;
}

Json to_json(const Sample& sample) {
  Json j;
  j["design"] = sample.kind == DesignKind::srs ? "srs" : "pcc";
  j["k"] = sample.config ? Json(sample.config->cutoff_k) : Json(nullptr);
  j["w"] = sample.config ? Json(sample.config->weight_w) : Json(nullptr);
  j["n"] = sample.n();
  j["indices"] = sample.indices;
  return j;
}

Sample sample_from_json(const Json& j) {
  Sample s;
  const std::string design = j.at("design").get<std::string>();
  if (design == "pcc") {
    s.kind = DesignKind::pcc;
    s.config = DesignConfig{j.at("k").get<double>(), j.at("w").get<double>()};
  } else if (design != "srs") {
    throw InputError("design: expected 'srs' or 'pcc'");
  }
  s.indices = j.at("indices").get<std::vector<std::size_t>>();
  if (j.at("n").get<std::size_t>() != s.indices.size()) throw InputError("n: does not match indices length");
  return s;
}

Json to_json(const InfoSurface& s) {
  Json j;
  j["criterion"] = std::string(to_string(s.criterion));
  j["assumed"] = to_json(s.assumed);
  j["n"] = s.n;
  j["replicates"] = s.replicates;
  j["seed"] = s.seed;
  j["k_grid"] = reals(s.k_grid);
  j["w_grid"] = reals(s.w_grid);
  j["values"] = matrix(s, s.values);
  j["stderr"] = matrix(s, s.std_error);
  j["mean_prob"] = matrix(s, s.mean_prob);
  j["feasible"] = matrix(s, s.feasible);
  j["srs_reference"] = real_to_json(s.srs_reference);
  j["srs_stderr"] = real_to_json(s.srs_std_error);
  j["srs_mean_prob"] = real_to_json(s.srs_mean_prob);
  const bool any = std::any_of(s.feasible.begin(), s.feasible.end(), [](std::uint8_t f) { return f != 0; });
  if (any) {
    const SurfaceCell c = surface_argmax(s);
    Json a;
    a["k_index"] = c.k_index;
    a["w_index"] = c.w_index;
    a["k"] = c.k;
    a["w"] = c.w;
    a["value"] = real_to_json(c.value);
    j["argmax"] = std::move(a);
  } else {
    j["argmax"] = nullptr;
  }
  return j;
}

Json to_json(const SurfacePair& pair) {
  Json j;
  j["d_optimality"] = to_json(pair.d_optimality);
  j["binary_entropy"] = to_json(pair.binary_entropy);
  return j;
}

Json to_json(const RecalibrationTests& tests) {
  auto fit = [](const RecalFit& f) {
    Json j;
    j["alpha0"] = f.alpha0;
    j["alpha1"] = f.alpha1;
    j["loglik"] = real_to_json(f.loglik);
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    return j;
  };
  Json j;
  j["usable"] = tests.usable;
  Json arr = Json::array();
  for (const LrtResult& t : tests.tests) {
    Json r;
    r["test"] = std::string(to_string(t.test));
    r["statistic"] = t.statistic;
    r["df"] = t.df;
    r["p_value"] = t.p_value;
    arr.push_back(std::move(r));
  }
  j["tests"] = std::move(arr);
  j["fits"] = {{"null", fit(tests.null_fit)}, {"intercept", fit(tests.intercept_fit)}, {"free", fit(tests.free_fit)}};
  return j;
}

Json to_json(const LassoPath& path) {
  Json pts = Json::array();
  for (const LassoPoint& p : path.points) {
    Json j;
    j["lambda"] = p.lambda;
    j["alpha0"] = p.alpha0;
    j["alpha1"] = p.alpha1;
    j["gamma"] = reals(p.gamma);
    j["active_set"] = p.active_set();
    j["converged"] = p.converged;
    j["sweeps"] = p.sweeps;
    j["objective"] = real_to_json(p.objective);
    pts.push_back(std::move(j));
  }
  Json j;
  j["penalty_scale"] = reals(path.penalty_scale);
  j["points"] = std::move(pts);
  return j;
}

Json to_json(const RecoveryCurve& curve) {
  Json j;
  j["variant"] = variant_name(curve.variant);
  if (curve.variant == RecoveryCurve::Variant::alternative) j["threshold"] = curve.threshold;
  Json pts = Json::array();
  for (const RecoveryPoint& p : curve.points) {
    pts.push_back(Json{{"lambda", real_to_json(p.lambda)}, {"fdr", p.fdr}, {"fer", p.fer}});
  }
  j["points"] = std::move(pts);
  return j;
}

Json to_json(const PowerCurve& curve) {
  Json j;
  Json designs = Json::array();
  for (const DesignSpec& d : curve.designs) designs.push_back(to_json(d));
  j["designs"] = std::move(designs);
  j["sample_sizes"] = curve.sample_sizes;
  j["replicates"] = curve.replicates;
  j["level"] = curve.level;
  j["unreliable"] = curve.unreliable;
  j["any_infeasible"] = curve.any_infeasible;
  Json cells = Json::array();
  for (const PowerCell& c : curve.cells) {
    Json cj;
    cj["design"] = curve.designs[c.design].label();
    cj["n"] = c.n;
    cj["feasible"] = c.feasible;
    cj["usable"] = c.usable;
    cj["dropped"] = c.dropped;
    Json tests;
    for (std::size_t t = 0; t < 3; ++t) {
      tests[std::string(to_string(static_cast<RecalTest>(t)))] =
          Json{{"rejections", c.rejections[t]}, {"power", real_to_json(c.power[t])},
               {"stderr", real_to_json(c.std_error[t])}};
    }
    cj["tests"] = std::move(tests);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

Json to_json(const RevisionResult& result) {
  Json j;
  Json designs = Json::array();
  for (const DesignSpec& d : result.designs) designs.push_back(to_json(d));
  j["designs"] = std::move(designs);
  j["sample_sizes"] = result.sample_sizes;
  j["replicates"] = result.replicates;
  j["unreliable"] = result.unreliable;
  j["any_infeasible"] = result.any_infeasible;
  Json cells = Json::array();
  for (const RevisionCell& c : result.cells) {
    Json cj;
    cj["design"] = result.designs[c.design].label();
    cj["n"] = c.n;
    cj["feasible"] = c.feasible;
    cj["usable"] = c.usable;
    cj["dropped"] = c.dropped;
    cj["mean_prevalence"] = real_to_json(c.mean_prevalence);
    cj["entropy"] = real_to_json(c.entropy);
    if (c.usable > 0) {
      cj["recovery_at_fdr_0.1"] = recovery_at_fdr(c.curve, 0.1);
      cj["recovery_at_fdr_0.2"] = recovery_at_fdr(c.curve, 0.2);
      cj["curve"] = to_json(c.curve);
      cj["alt_curve"] = c.alt_curve ? to_json(*c.alt_curve) : Json(nullptr);
    } else {
      cj["curve"] = nullptr;
      cj["alt_curve"] = nullptr;
    }
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

Json to_json(const ScoreSummary& s) {
  Json j;
  j["n"] = s.n;
  j["p"] = s.p;
  j["has_labels"] = s.has_labels;
  j["min"] = real_to_json(s.min);
  j["max"] = real_to_json(s.max);
  j["mean"] = real_to_json(s.mean);
  j["sd"] = real_to_json(s.sd);
  Json q = Json::array();
  for (std::size_t i = 0; i < s.quantiles.size(); ++i) {
    q.push_back({{"level", s.quantile_levels[i]}, {"value", real_to_json(s.quantiles[i])}});
  }
  j["quantiles"] = std::move(q);
  j["histogram"] = {{"edges", s.histogram_edges}, {"counts", s.histogram_counts}};
  return j;
}

Json to_json(const DesignComparison& c) {
  auto summary = [](const DesignSummary& s) {
    Json j;
    j["phi_d"] = real_to_json(s.phi_d);
    j["phi_d_stderr"] = real_to_json(s.phi_d_std_error);
    j["phi_b"] = real_to_json(s.phi_b);
    j["phi_b_stderr"] = real_to_json(s.phi_b_std_error);
    j["mean_prob"] = real_to_json(s.mean_prob);
    return j;
  };
  Json j;
  j["k"] = c.config.cutoff_k;
  j["w"] = c.config.weight_w;
  j["n"] = c.n;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["feasible"] = c.feasible;
  j["max_feasible_n"] = c.max_feasible_n;
  j["limiting_stratum"] = c.limiting_stratum ? Json(c.limiting_stratum == Stratum::high ? "high" : "low") : Json(nullptr);
  j["pcc"] = summary(c.pcc);
  j["srs"] = summary(c.srs);
  j["det_ratio"] = real_to_json(c.ratios.det_ratio);
  j["prevalence_ratio"] = real_to_json(c.ratios.prevalence_ratio);
  return j;
}

void write_surface_csv(const InfoSurface& s, std::ostream& out) {
  out << "k,w,value,stderr,feasible\n";
  for (std::size_t ki = 0; ki < s.rows(); ++ki) {
    for (std::size_t wi = 0; wi < s.cols(); ++wi) {
      out << format_double(s.k_grid[ki]) << ',' << format_double(s.w_grid[wi]) << ',' << csv_real(s.value(ki, wi)) << ','
          << csv_real(s.std_error_at(ki, wi)) << ',' << (s.is_feasible(ki, wi) ? 1 : 0) << '\n';
    }
  }
}

void write_lasso_path_csv(const LassoPath& path, std::ostream& out) {
  const std::size_t p = path.points.empty() ? 0 : path.points.front().gamma.size();
  out << "lambda,alpha0,alpha1";
  for (std::size_t j = 0; j < p; ++j) out << ",gamma_" << (j + 1);
  out << '\n';
  for (const LassoPoint& pt : path.points) {
    out << format_double(pt.lambda) << ',' << format_double(pt.alpha0) << ',' << format_double(pt.alpha1);
    for (double g : pt.gamma) out << ',' << format_double(g);
    out << '\n';
  }
}

void write_power_csv(std::span<const LabelledPowerCurve> curves, std::ostream& out) {
  out << "scenario,alpha0,alpha1,design,n,test,rejections,usable,dropped,power,stderr,feasible\n";
  for (const LabelledPowerCurve& lc : curves) {
    for (const PowerCell& c : lc.curve->cells) {
      for (std::size_t t = 0; t < 3; ++t) {
        out << lc.scenario << ',' << format_double(lc.truth.alpha0) << ',' << format_double(lc.truth.alpha1) << ','
            << quoted(lc.curve->designs[c.design].label()) << ',' << c.n << ',' << to_string(static_cast<RecalTest>(t)) << ','
            << c.rejections[t] << ',' << c.usable << ',' << c.dropped << ',' << csv_real(c.power[t]) << ','
            << csv_real(c.std_error[t]) << ',' << (c.feasible ? 1 : 0) << '\n';
      }
    }
  }
}

void write_recovery_csv(const RevisionResult& result, std::ostream& out) {
  out << "design,n,variant,lambda,fdr,fer\n";
  for (const RevisionCell& c : result.cells) {
    if (c.usable == 0) continue;
    const std::string label = quoted(result.designs[c.design].label());
    auto emit = [&](const RecoveryCurve& curve) {
      for (const RecoveryPoint& p : curve.points) {
        out << label << ',' << c.n << ',' << variant_name(curve.variant) << ',' << csv_real(p.lambda) << ','
            << format_double(p.fdr) << ',' << format_double(p.fer) << '\n';
      }
    };
    emit(c.curve);
    if (c.alt_curve) emit(*c.alt_curve);
  }
}

}  // namespace pcc
