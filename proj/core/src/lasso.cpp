#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/modlearn.hpp"

namespace pcc {

namespace {

struct Column {
  std::vector<double> z;  // centred, optionally scaled
  double mean = 0.0;
  double scale = 1.0;
  bool constant = false;
};

Column make_column(std::vector<double> values, bool scale_to_unit) {
  Column c;
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  c.mean = mean;
  c.constant = !(sd > 1e-12 * (1.0 + std::abs(mean)));
  c.scale = (scale_to_unit && !c.constant) ? sd : 1.0;
  c.z = std::move(values);
  for (double& v : c.z) v = (v - mean) / c.scale;
  return c;
}

double soft_threshold(double x, double t) noexcept {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

constexpr std::size_t kMaxInnerPasses = 1000;
constexpr int kMaxHalvings = 30;
constexpr double kMinWeight = 1e-6;

// Proximal Newton: each outer iteration ("sweep") solves the penalised
// quadratic model of the loss at the current point by cyclic coordinate
// descent, then backtracks along the resulting direction until the true
// objective does not increase. If no Newton step is accepted the model is
// rebuilt with the global curvature bound 1/4, whose minimiser always
// decreases the objective.
class Solver {
 public:
  Solver(std::span<const double> scores, const FeatureMatrix& features, std::span<const std::uint8_t> labels,
         const LassoOptions& options)
      : n_(scores.size()), p_(static_cast<std::size_t>(features.cols())), options_(options), labels_(labels) {
    cols_.reserve(p_ + 2);
    Column intercept;
    intercept.z.assign(n_, 1.0);
    cols_.push_back(std::move(intercept));
    cols_.push_back(make_column(std::vector<double>(scores.begin(), scores.end()), true));
    std::vector<double> buf(n_);
    for (std::size_t j = 0; j < p_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) buf[i] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      cols_.push_back(make_column(buf, options.standardize));
    }
    const std::size_t m = cols_.size();
    beta_.assign(m, 0.0);
    trial_.assign(m, 0.0);
    curvature_.assign(m, 0.0);
    eta_.assign(n_, 0.0);
    weight_.assign(n_, 0.0);
    resid_.assign(n_, 0.0);
    work_.assign(n_, 0.0);
    // Start at the null recalibration, eta = S.
    const Column& s = cols_[1];
    beta_[0] = s.mean;
    if (!s.constant) beta_[1] = s.scale;
    for (std::size_t i = 0; i < n_; ++i) eta_[i] = beta_[0] + beta_[1] * s.z[i];
  }

  std::vector<double> penalty_scale() const {
    std::vector<double> out(p_);
    for (std::size_t j = 0; j < p_; ++j) out[j] = cols_[j + 2].scale;
    return out;
  }

  LassoPoint solve(double lambda, std::size_t lambda_index) {
    lambda_ = lambda;
    LassoPoint pt;
    pt.lambda = lambda;
    double f = objective(eta_, beta_);
    std::size_t sweeps = 0;
    bool converged = false;
    while (sweeps < options_.max_sweeps) {
      ++sweeps;
      double change = 0.0;
      bool moved = step(f, false, change) || step(f, true, change);
      if (options_.on_sweep) options_.on_sweep(lambda_index, sweeps, f);
      if (!moved) {
        converged = change < options_.tolerance;
        break;
      }
      if (change < options_.tolerance) {
        converged = true;
        break;
      }
    }
    pt.converged = converged;
    pt.sweeps = sweeps;
    pt.objective = f;
    to_original(pt);
    return pt;
  }

 private:
  double penalty_for(std::size_t c) const noexcept { return c < 2 ? 0.0 : lambda_; }

  double objective(const std::vector<double>& eta, const std::vector<double>& beta) const {
    double loss = 0.0;
    for (std::size_t i = 0; i < n_; ++i) loss += softplus(eta[i]) - labels_[i] * eta[i];
    double pen = 0.0;
    for (std::size_t c = 2; c < beta.size(); ++c) pen += std::abs(beta[c]);
    return loss + lambda_ * pen;
  }

  // One outer iteration. Returns true if the point moved; `change` receives
  // the largest coefficient change (or the size of the rejected direction).
  bool step(double& f, bool majorize, double& change) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double pr = 1.0 / (1.0 + std::exp(-eta_[i]));
      const double w = majorize ? 0.25 : std::max(pr * (1.0 - pr), kMinWeight);
      weight_[i] = w;
      resid_[i] = (labels_[i] - pr) / w;
    }
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const Column& col = cols_[c];
      double a = 0.0;
      if (!col.constant) {
        for (std::size_t i = 0; i < n_; ++i) a += weight_[i] * col.z[i] * col.z[i];
      }
      curvature_[c] = a;
    }
    trial_ = beta_;
    solve_quadratic();

    // resid = r - Z d, so Z d = r - resid; rebuild r from the current eta.
    double dmax = 0.0;
    for (std::size_t c = 0; c < cols_.size(); ++c) dmax = std::max(dmax, std::abs(trial_[c] - beta_[c]));
    change = dmax;
    if (dmax == 0.0) return false;
    for (std::size_t i = 0; i < n_; ++i) {
      const double pr = 1.0 / (1.0 + std::exp(-eta_[i]));
      work_[i] = (labels_[i] - pr) / weight_[i] - resid_[i];
    }

    std::vector<double> eta_new(n_);
    std::vector<double> beta_new(cols_.size());
    double t = 1.0;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      for (std::size_t i = 0; i < n_; ++i) eta_new[i] = eta_[i] + t * work_[i];
      for (std::size_t c = 0; c < cols_.size(); ++c) beta_new[c] = beta_[c] + t * (trial_[c] - beta_[c]);
      const double f_new = objective(eta_new, beta_new);
      if (f_new <= f) {
        eta_.swap(eta_new);
        beta_.swap(beta_new);
        f = f_new;
        change = t * dmax;
        return true;
      }
    }
    return false;
  }

  // Cyclic coordinate descent on the weighted least-squares model, cycling
  // over the active set between full passes.
  void solve_quadratic() {
    const double inner_tol = 0.1 * options_.tolerance;
    bool full = true;
    for (std::size_t pass = 0; pass < kMaxInnerPasses; ++pass) {
      double delta = 0.0;
      for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (!full && c >= 2 && trial_[c] == 0.0) continue;
        delta = std::max(delta, update(c));
      }
      if (delta < inner_tol) {
        if (full) return;
        full = true;
      } else {
        full = false;
      }
    }
  }

  double update(std::size_t c) {
    const double a = curvature_[c];
    if (!(a > 0.0)) return 0.0;
    const Column& col = cols_[c];
    const double* z = col.z.data();
    double g = 0.0;
    for (std::size_t i = 0; i < n_; ++i) g += weight_[i] * z[i] * resid_[i];
    const double b = trial_[c];
    const double pen = penalty_for(c);
    if (b == 0.0 && std::abs(g) <= pen) return 0.0;
    const double b_new = pen > 0.0 ? soft_threshold(a * b + g, pen) / a : b + g / a;
    const double d = b_new - b;
    if (d == 0.0) return 0.0;
    for (std::size_t i = 0; i < n_; ++i) resid_[i] -= d * z[i];
    trial_[c] = b_new;
    return std::abs(d);
  }

  void to_original(LassoPoint& pt) const {
    const Column& s = cols_[1];
    pt.alpha1 = beta_[1] / s.scale;
    double a0 = beta_[0] - pt.alpha1 * s.mean;
    pt.gamma.assign(p_, 0.0);
    for (std::size_t j = 0; j < p_; ++j) {
      const Column& col = cols_[j + 2];
      const double g = beta_[j + 2] / col.scale;
      pt.gamma[j] = g;
      a0 -= g * col.mean;
    }
    pt.alpha0 = a0;
  }

  std::size_t n_;
  std::size_t p_;
  const LassoOptions& options_;
  std::span<const std::uint8_t> labels_;
  std::vector<Column> cols_;
  std::vector<double> beta_, trial_, curvature_;
  std::vector<double> eta_, weight_, resid_, work_;
  double lambda_ = 0.0;
};

}  // namespace

double lasso_objective(std::span<const double> scores, const FeatureMatrix& features,
                       std::span<const std::uint8_t> labels, double alpha0, double alpha1,
                       std::span<const double> gamma, double lambda, std::span<const double> penalty_scale) {
  const std::size_t n = scores.size();
  const auto p = static_cast<std::size_t>(features.cols());
  if (static_cast<std::size_t>(features.rows()) != n || labels.size() != n || gamma.size() != p)
    throw InputError("lasso objective: dimension mismatch");
  if (!penalty_scale.empty() && penalty_scale.size() != p) throw InputError("lasso objective: penalty scale length");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = alpha0 + alpha1 * scores[i];
    for (std::size_t j = 0; j < p; ++j) eta += features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * gamma[j];
    const double sp = eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    loss += sp - labels[i] * eta;
  }
  double pen = 0.0;
  for (std::size_t j = 0; j < p; ++j) pen += (penalty_scale.empty() ? 1.0 : penalty_scale[j]) * std::abs(gamma[j]);
  return loss + lambda * pen;
}

LassoPath fit_lasso_path(std::span<const double> scores, const FeatureMatrix& features,
                         std::span<const std::uint8_t> labels, std::span<const double> lambda_grid,
                         const LassoOptions& options) {
  const std::size_t n = scores.size();
  if (n == 0) throw InputError("lasso fit on an empty sample");
  if (static_cast<std::size_t>(features.rows()) != n || labels.size() != n)
    throw InputError("lasso fit: scores, features and labels differ in length");
  for (std::uint8_t y : labels) {
    if (y > 1) throw InputError("labels must be 0 or 1");
  }
  if (lambda_grid.empty()) throw InputError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i]))
      throw InputError("lambda grid values must be positive and finite");
    if (i > 0 && lambda_grid[i] > lambda_grid[i - 1]) throw InputError("lambda grid must be descending");
  }
  Solver solver(scores, features, labels, options);
  LassoPath path;
  path.penalty_scale = solver.penalty_scale();
  path.points.reserve(lambda_grid.size());
  for (std::size_t l = 0; l < lambda_grid.size(); ++l) path.points.push_back(solver.solve(lambda_grid[l], l));
  return path;
}

}  // namespace pcc
