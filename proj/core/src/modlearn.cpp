#include "pcc/modlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcc/errors.hpp"
#include "pcc/information.hpp"

namespace pcc {

namespace {

constexpr double kGradientTolerance = 1e-8;
constexpr double kRidge = 1e-10;
constexpr std::size_t kMaxNewtonIterations = 100;
constexpr double kDivergenceBound = 50.0;

// Near the optimum the log-likelihood change drops below rounding error, so
// steps are accepted within a few ulps of the current value.
bool no_worse(double candidate, double current) noexcept {
  return candidate >= current - 1e-12 * std::max(1.0, std::abs(current));
}

double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
  for (std::uint8_t y : labels) {
    if (y > 1) throw InputError("labels must be 0 or 1");
  }
}

struct ClassSummary {
  std::size_t cases = 0;
  double min_case = std::numeric_limits<double>::infinity();
  double max_case = -std::numeric_limits<double>::infinity();
  double min_control = std::numeric_limits<double>::infinity();
  double max_control = -std::numeric_limits<double>::infinity();
};

ClassSummary summarize(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  ClassSummary c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) {
      ++c.cases;
      c.min_case = std::min(c.min_case, scores[i]);
      c.max_case = std::max(c.max_case, scores[i]);
    } else {
      c.min_control = std::min(c.min_control, scores[i]);
      c.max_control = std::max(c.max_control, scores[i]);
    }
  }
  return c;
}

RecalFit fit_intercept_only(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  RecalFit fit;
  fit.alpha1 = 1.0;
  double a0 = 0.0;
  double ll = recalibration_loglik(scores, labels, a0, 1.0);
  for (std::size_t it = 1; it <= kMaxNewtonIterations; ++it) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double p = expit(a0 + scores[i]);
      g += labels[i] - p;
      h += p * (1.0 - p);
    }
    fit.iterations = it;
    fit.gradient_norm = std::abs(g);
    if (fit.gradient_norm < kGradientTolerance) break;
    double step = g / (h + kRidge);
    double candidate = a0 + step;
    double cand_ll = recalibration_loglik(scores, labels, candidate, 1.0);
    for (int halvings = 0; halvings < 40 && !no_worse(cand_ll, ll); ++halvings) {
      step *= 0.5;
      candidate = a0 + step;
      cand_ll = recalibration_loglik(scores, labels, candidate, 1.0);
    }
    if (!no_worse(cand_ll, ll)) break;
    a0 = candidate;
    ll = cand_ll;
    if (std::abs(a0) > kDivergenceBound) break;
  }
  fit.alpha0 = a0;
  fit.loglik = ll;
  fit.gradient_norm = std::abs(recalibration_gradient(scores, labels, a0, 1.0)[0]);
  fit.converged = fit.gradient_norm < kGradientTolerance && std::abs(a0) <= kDivergenceBound;
  return fit;
}

RecalFit fit_both(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  RecalFit fit;
  double a0 = 0.0;
  double a1 = 1.0;
  double ll = recalibration_loglik(scores, labels, a0, a1);
  for (std::size_t it = 1; it <= kMaxNewtonIterations; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double s = scores[i];
      const double p = expit(a0 + a1 * s);
      const double r = labels[i] - p;
      const double w = p * (1.0 - p);
      g0 += r;
      g1 += r * s;
      h00 += w;
      h01 += w * s;
      h11 += w * s * s;
    }
    fit.iterations = it;
    fit.gradient_norm = std::hypot(g0, g1);
    if (fit.gradient_norm < kGradientTolerance) break;
    h00 += kRidge;
    h11 += kRidge;
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0)) break;
    double d0 = (h11 * g0 - h01 * g1) / det;
    double d1 = (h00 * g1 - h01 * g0) / det;
    double c0 = a0 + d0, c1 = a1 + d1;
    double cand_ll = recalibration_loglik(scores, labels, c0, c1);
    for (int halvings = 0; halvings < 40 && !no_worse(cand_ll, ll); ++halvings) {
      d0 *= 0.5;
      d1 *= 0.5;
      c0 = a0 + d0;
      c1 = a1 + d1;
      cand_ll = recalibration_loglik(scores, labels, c0, c1);
    }
    if (!no_worse(cand_ll, ll)) break;
    a0 = c0;
    a1 = c1;
    ll = cand_ll;
    if (std::abs(a0) > kDivergenceBound || std::abs(a1) > kDivergenceBound) break;
  }
  fit.alpha0 = a0;
  fit.alpha1 = a1;
  fit.loglik = ll;
  const auto g = recalibration_gradient(scores, labels, a0, a1);
  fit.gradient_norm = std::hypot(g[0], g[1]);
  fit.converged = fit.gradient_norm < kGradientTolerance && std::abs(a0) <= kDivergenceBound &&
                  std::abs(a1) <= kDivergenceBound;
  return fit;
}

}  // namespace

double recalibration_loglik(std::span<const double> scores, std::span<const std::uint8_t> labels, double alpha0,
                            double alpha1) {
  double ll = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double eta = alpha0 + alpha1 * scores[i];
    ll += labels[i] * eta - softplus(eta);
  }
  return ll;
}

std::array<double, 2> recalibration_gradient(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                             double alpha0, double alpha1) {
  std::array<double, 2> g{0.0, 0.0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double r = labels[i] - expit(alpha0 + alpha1 * scores[i]);
    g[0] += r;
    g[1] += r * scores[i];
  }
  return g;
}

RecalFit fit_recalibration(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           RecalConstraint constraint) {
  check_inputs(scores, labels);
  if (scores.empty()) throw InputError("recalibration fit on an empty sample");

  if (constraint == RecalConstraint::fix_both) {
    RecalFit fit;
    fit.loglik = recalibration_loglik(scores, labels, 0.0, 1.0);
    const auto g = recalibration_gradient(scores, labels, 0.0, 1.0);
    fit.gradient_norm = std::hypot(g[0], g[1]);
    fit.converged = true;
    return fit;
  }

  const ClassSummary classes = summarize(scores, labels);
  const bool one_class = classes.cases == 0 || classes.cases == scores.size();
  if (constraint == RecalConstraint::fix_slope_1) {
    RecalFit fit = fit_intercept_only(scores, labels);
    if (one_class) fit.converged = false;
    return fit;
  }

  RecalFit fit = fit_both(scores, labels);
  const bool separated = !one_class && (classes.max_control <= classes.min_case || classes.max_case <= classes.min_control);
  if (one_class || separated) fit.converged = false;
  return fit;
}

std::string_view to_string(RecalTest t) noexcept {
  switch (t) {
    case RecalTest::intercept:
      return "intercept";
    case RecalTest::slope:
      return "slope";
    case RecalTest::logistic_recal:
      return "logistic_recal";
  }
  return "unknown";
}

double chi_square_upper_tail(double x, int df) {
  if (x <= 0.0) return 1.0;
  if (df == 1) return std::erfc(std::sqrt(0.5 * x));
  if (df == 2) return std::exp(-0.5 * x);
  throw InputError("chi-square tail implemented for df 1 and 2 only");
}

RecalibrationTests recalibration_tests(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  RecalibrationTests out;
  out.null_fit = fit_recalibration(scores, labels, RecalConstraint::fix_both);
  out.intercept_fit = fit_recalibration(scores, labels, RecalConstraint::fix_slope_1);
  out.free_fit = fit_recalibration(scores, labels, RecalConstraint::free_both);
  out.usable = out.intercept_fit.converged && out.free_fit.converged;

  auto make = [](RecalTest t, double stat, int df) {
    LrtResult r;
    r.test = t;
    r.statistic = std::max(0.0, stat);
    r.df = df;
    r.p_value = chi_square_upper_tail(r.statistic, df);
    return r;
  };
  const double ll0 = out.null_fit.loglik;
  const double ll_int = out.intercept_fit.loglik;
  const double ll_free = out.free_fit.loglik;
  out.tests[0] = make(RecalTest::intercept, 2.0 * (ll_int - ll0), 1);
  out.tests[1] = make(RecalTest::slope, 2.0 * (ll_free - ll_int), 1);
  out.tests[2] = make(RecalTest::logistic_recal, 2.0 * (ll_free - ll0), 2);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> LassoPoint::active_set() const {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (std::abs(gamma[j]) > 0.0) active.push_back(j);
  }
  return active;
}

bool LassoPath::all_converged() const noexcept {
  return std::all_of(points.begin(), points.end(), [](const LassoPoint& p) { return p.converged; });
}

std::vector<double> lambda_grid_per_observation(std::size_t n, double log_min, double log_max, std::size_t count) {
  if (count == 0) throw InputError("lambda grid needs at least one point");
  if (!(log_max >= log_min)) throw InputError("lambda grid needs log_max >= log_min");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? log_max
                                : log_max - (log_max - log_min) * static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = static_cast<double>(n) * std::exp(t);
  }
  return grid;
}

RecoveryPoint recovery_point(std::span<const std::uint8_t> selected, std::span<const double> true_gamma) {
  if (selected.size() != true_gamma.size()) throw InputError("selection and true gamma differ in length");
  std::size_t n_selected = 0, false_pos = 0, nonzero = 0, false_neg = 0;
  for (std::size_t j = 0; j < true_gamma.size(); ++j) {
    const bool truly = true_gamma[j] != 0.0;
    nonzero += truly;
    if (selected[j]) {
      ++n_selected;
      false_pos += !truly;
    } else {
      false_neg += truly;
    }
  }
  if (nonzero == 0) throw InputError("true gamma is all zero; false exclusion rate undefined");
  return {0.0, static_cast<double>(false_pos) / static_cast<double>(std::max<std::size_t>(n_selected, 1)),
          static_cast<double>(false_neg) / static_cast<double>(nonzero)};
}

RecoveryPoint recovery_point_alt(std::span<const std::uint8_t> selected, std::span<const double> true_gamma,
                                 double threshold) {
  if (selected.size() != true_gamma.size()) throw InputError("selection and true gamma differ in length");
  if (!(threshold > 0.0)) throw InputError("signal threshold must be positive");
  std::size_t n_selected = 0, false_pos = 0, high = 0, false_neg = 0;
  for (std::size_t j = 0; j < true_gamma.size(); ++j) {
    const double mag = std::abs(true_gamma[j]);
    const bool is_high = mag > threshold;
    high += is_high;
    if (selected[j]) {
      ++n_selected;
      false_pos += mag == 0.0;
    } else {
      false_neg += is_high;
    }
  }
  if (high == 0) throw InputError("no true coefficient exceeds the signal threshold");
  return {0.0, static_cast<double>(false_pos) / static_cast<double>(std::max<std::size_t>(n_selected, 1)),
          static_cast<double>(false_neg) / static_cast<double>(high)};
}

namespace {

template <class PointFn>
RecoveryCurve build_curve(const LassoPath& path, std::span<const double> true_gamma, PointFn point) {
  const std::size_t p = true_gamma.size();
  RecoveryCurve curve;
  std::vector<std::uint8_t> none(p, 0);
  std::vector<std::uint8_t> all(p, 1);
  RecoveryPoint first = point(none);
  first.lambda = std::numeric_limits<double>::infinity();
  curve.points.push_back(first);
  std::vector<std::uint8_t> selected(p);
  for (const LassoPoint& lp : path.points) {
    if (lp.gamma.size() != p) throw InputError("path and true gamma differ in length");
    for (std::size_t j = 0; j < p; ++j) selected[j] = std::abs(lp.gamma[j]) > 0.0 ? 1 : 0;
    RecoveryPoint rp = point(selected);
    rp.lambda = lp.lambda;
    curve.points.push_back(rp);
  }
  RecoveryPoint last = point(all);
  last.lambda = 0.0;
  curve.points.push_back(last);
  return curve;
}

}  // namespace

RecoveryCurve support_recovery(const LassoPath& path, std::span<const double> true_gamma) {
  RecoveryCurve c = build_curve(path, true_gamma, [&](std::span<const std::uint8_t> sel) {
    return recovery_point(sel, true_gamma);
  });
  c.variant = RecoveryCurve::Variant::standard;
  return c;
}

RecoveryCurve support_recovery_alt(const LassoPath& path, std::span<const double> true_gamma, double threshold) {
  RecoveryCurve c = build_curve(path, true_gamma, [&](std::span<const std::uint8_t> sel) {
    return recovery_point_alt(sel, true_gamma, threshold);
  });
  c.variant = RecoveryCurve::Variant::alternative;
  c.threshold = threshold;
  return c;
}

RecoveryCurve average_curves(std::span<const RecoveryCurve> curves) {
  if (curves.empty()) throw InputError("no curves to average");
  RecoveryCurve out = curves.front();
  const std::size_t m = out.points.size();
  for (auto& pt : out.points) pt.fdr = pt.fer = 0.0;
  for (const RecoveryCurve& c : curves) {
    if (c.points.size() != m) throw InputError("curves differ in length");
    for (std::size_t i = 0; i < m; ++i) {
      out.points[i].fdr += c.points[i].fdr;
      out.points[i].fer += c.points[i].fer;
    }
  }
  const auto b = static_cast<double>(curves.size());
  for (auto& pt : out.points) {
    pt.fdr /= b;
    pt.fer /= b;
  }
  return out;
}

double recovery_at_fdr(const RecoveryCurve& curve, double max_fdr) {
  double best = 0.0;
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].fdr <= max_fdr) best = std::max(best, 1.0 - pts[i].fer);
    if (i + 1 == pts.size()) break;
    const RecoveryPoint& a = pts[i];
    const RecoveryPoint& b = pts[i + 1];
    // Crossing of the FDR budget inside a segment.
    if ((a.fdr - max_fdr) * (b.fdr - max_fdr) < 0.0) {
      const double t = (max_fdr - a.fdr) / (b.fdr - a.fdr);
      best = std::max(best, 1.0 - (a.fer + t * (b.fer - a.fer)));
    }
  }
  return best;
}

}  // namespace pcc
