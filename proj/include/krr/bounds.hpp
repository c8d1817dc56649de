#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "krr/errors.hpp"
#include "krr/identity.hpp"
#include "krr/kernels.hpp"
#include "krr/linalg.hpp"
#include "krr/regression.hpp"

namespace krr {

// One audited inequality: lhs <= rhs up to a sliver of floating-point
// slack. context carries the parameters the bound was evaluated under.
struct BoundAudit {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double scale = 1.0;  // max(1, |lhs|, |rhs|)
  bool holds = false;
  std::map<std::string, double> context;
};

namespace detail {

inline BoundAudit finish_audit(std::string name, double lhs, double rhs,
                               std::map<std::string, double> context) {
  BoundAudit audit;
  audit.name = std::move(name);
  audit.lhs = lhs;
  audit.rhs = rhs;
  audit.slack = rhs - lhs;
  audit.scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  audit.holds = audit.slack >= -1e-10 * audit.scale;
  audit.context = std::move(context);
  return audit;
}

inline double log_det_scaled(const Sample& sample, const KernelSpec& spec,
                             double a) {
  if (sample.empty()) return 0.0;
  const GramMatrix g = gram(spec, sample.signals());
  const CholFactor f = cholesky_shifted(g.entries, a);
  return logdet(f) - static_cast<double>(sample.size()) * std::log(a);
}

}  // namespace detail

// Cumulative square loss of the unclipped sequential predictor against
// (1 + c_bound^2/a) times the minimal regularized objective. Requires
// the kernel diagonal to stay within c_bound^2 over the sample.
inline BoundAudit audit_multiplicative(const Sample& sample,
                                       const KernelSpec& spec, double a,
                                       double c_bound) {
  if (!(c_bound > 0.0)) throw InputError("audit: c bound must be positive");
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const Signal& x = sample.examples[t].signal;
    if (eval_kernel(spec, x, x) > c_bound * c_bound)
      throw InputError("audit: kernel diagonal exceeds c bound at step " +
                       std::to_string(t + 1));
  }
  const OnlineTrace trace = run_online(sample, spec, a);
  const double term_min = min_regularized_loss(sample, spec, a);
  const double rhs = (1.0 + c_bound * c_bound / a) * term_min;
  return detail::finish_audit(
      "multiplicative", trace.sum_sq(), rhs,
      {{"a", a},
       {"c_bound", c_bound},
       {"steps", static_cast<double>(sample.size())},
       {"term_min", term_min}});
}

// Clipped cumulative square loss against the minimal regularized
// objective plus 4 Y^2 ln det(I + K/a). Requires |y_t| <= y_bound.
inline BoundAudit audit_clipped_kernel(const Sample& sample,
                                       const KernelSpec& spec, double a,
                                       double y_bound) {
  if (!(y_bound > 0.0)) throw InputError("audit: y bound must be positive");
  for (std::size_t t = 0; t < sample.size(); ++t)
    if (std::abs(sample.examples[t].outcome) > y_bound)
      throw InputError("audit: outcome exceeds y bound at step " +
                       std::to_string(t + 1));
  const OnlineTrace trace = run_online(sample, spec, a, y_bound);
  const double lhs = sample.empty() ? 0.0 : trace.sum_sq_clipped();
  const double term_min = min_regularized_loss(sample, spec, a);
  const double ld = detail::log_det_scaled(sample, spec, a);
  const double rhs = term_min + 4.0 * y_bound * y_bound * ld;
  return detail::finish_audit(
      "clipped-kernel", lhs, rhs,
      {{"a", a},
       {"y_bound", y_bound},
       {"steps", static_cast<double>(sample.size())},
       {"term_min", term_min},
       {"log_det_scaled", ld}});
}

// Linear-kernel specialization with the determinant replaced by its
// dimension-based upper bound n ln(1 + T B^2/(a n)). Requires signal
// norms within x_bound and outcomes within y_bound. The context also
// records the kernel-form right side it dominates.
inline BoundAudit audit_clipped_linear(const Sample& sample, double a,
                                       double y_bound, double x_bound) {
  if (!(y_bound > 0.0)) throw InputError("audit: y bound must be positive");
  if (!(x_bound > 0.0)) throw InputError("audit: x bound must be positive");
  const KernelSpec spec = KernelSpec::linear();
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const Example& ex = sample.examples[t];
    if (squared_norm(ex.signal.coords) > x_bound * x_bound)
      throw InputError("audit: signal norm exceeds x bound at step " +
                       std::to_string(t + 1));
    if (std::abs(ex.outcome) > y_bound)
      throw InputError("audit: outcome exceeds y bound at step " +
                       std::to_string(t + 1));
  }
  const double t_count = static_cast<double>(sample.size());
  const double n = static_cast<double>(sample.dimension);
  double lhs = 0.0;
  if (!sample.empty()) lhs = run_online(sample, spec, a, y_bound).sum_sq_clipped();
  const PrimalModel primal = fit_primal(sample, a);
  double term_min = a * squared_norm(primal.theta);
  for (const auto& ex : sample.examples) {
    const double r = predict_primal(primal, ex.signal) - ex.outcome;
    term_min += r * r;
  }
  const double log_bound =
      sample.empty() ? 0.0
                     : n * std::log1p(t_count * x_bound * x_bound / (a * n));
  const double rhs = term_min + 4.0 * y_bound * y_bound * log_bound;
  const double kernel_rhs = min_regularized_loss(sample, spec, a) +
                            4.0 * y_bound * y_bound *
                                detail::log_det_scaled(sample, spec, a);
  return detail::finish_audit("clipped-linear", lhs, rhs,
                              {{"a", a},
                               {"y_bound", y_bound},
                               {"x_bound", x_bound},
                               {"dimension", n},
                               {"steps", t_count},
                               {"term_min", term_min},
                               {"kernel_form_rhs", kernel_rhs}});
}

// det(I + X'X/a) against (1 + T B^2/(a n))^n for a design matrix X of n
// rows (coordinates) and T columns (points), B the largest column norm.
// Both determinant orders are computed and must agree (the two shifted
// products share nonunit eigenvalues); their relative difference is
// folded into the verdict.
inline BoundAudit audit_det_bound(const Matrix& design, double a) {
  if (!(a > 0.0)) throw InputError("audit: ridge must be positive");
  const std::size_t n = design.rows();
  const std::size_t t_count = design.cols();
  if (n == 0) throw InputError("audit: empty design matrix");
  double b_sq = 0.0;
  for (std::size_t j = 0; j < t_count; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += design(i, j) * design(i, j);
    b_sq = std::max(b_sq, col);
  }
  Matrix by_points(t_count, t_count);  // X'X
  for (std::size_t i = 0; i < t_count; ++i)
    for (std::size_t j = i; j < t_count; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += design(k, i) * design(k, j);
      by_points(i, j) = s;
      by_points(j, i) = s;
    }
  Matrix by_coords(n, n);  // X X'
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < t_count; ++k) s += design(i, k) * design(j, k);
      by_coords(i, j) = s;
      by_coords(j, i) = s;
    }
  const double log_by_points =
      logdet(cholesky_shifted(by_points, a)) -
      static_cast<double>(t_count) * std::log(a);
  const double log_by_coords =
      logdet(cholesky_shifted(by_coords, a)) -
      static_cast<double>(n) * std::log(a);
  const double transpose_residual =
      std::abs(std::expm1(log_by_points - log_by_coords));
  const double lhs = std::exp(log_by_points);
  const double rhs = std::exp(
      static_cast<double>(n) *
      std::log1p(static_cast<double>(t_count) * b_sq / (a * static_cast<double>(n))));
  BoundAudit audit = detail::finish_audit(
      "determinant", lhs, rhs,
      {{"a", a},
       {"x_bound", std::sqrt(b_sq)},
       {"dimension", static_cast<double>(n)},
       {"steps", static_cast<double>(t_count)},
       {"transpose_residual", transpose_residual}});
  audit.holds = audit.holds && transpose_residual <= 1e-9;
  return audit;
}

// Per-step information gains with tail statistics. threshold_step is the
// start of the longest suffix kept strictly under eps_d, when one exists.
struct DecayDiagnostic {
  Vector d_sequence;
  double tail_max = 0.0;  // max over the last quarter of the steps
  std::optional<std::size_t> threshold_step;  // 1-based
  double eps_d = 0.0;
};

inline DecayDiagnostic decay_diagnostic(const Sample& sample,
                                        const KernelSpec& spec, double a,
                                        double eps_d = 0.05) {
  if (!(eps_d > 0.0)) throw InputError("decay: eps must be positive");
  DecayDiagnostic diag;
  diag.eps_d = eps_d;
  diag.d_sequence = run_online(sample, spec, a).d_sequence();
  const std::size_t t_count = diag.d_sequence.size();
  if (t_count == 0) return diag;
  const std::size_t tail = std::max<std::size_t>(1, t_count / 4);
  for (std::size_t i = t_count - tail; i < t_count; ++i)
    diag.tail_max = std::max(diag.tail_max, diag.d_sequence[i]);
  std::size_t first = t_count;  // first index of the all-below suffix
  while (first > 0 && diag.d_sequence[first - 1] < eps_d) --first;
  if (first < t_count) diag.threshold_step = first + 1;
  return diag;
}

struct RatioPoint {
  std::size_t step = 0;
  double ratio = 0.0;
};

// Cumulative unclipped square loss over the minimal regularized
// objective of the same prefix, per prefix. Prefixes whose objective is
// below 1e-12 are skipped to keep the division meaningful.
inline std::vector<RatioPoint> asymptotic_ratio(const Sample& sample,
                                                const KernelSpec& spec,
                                                double a) {
  const OnlineTrace trace = run_online(sample, spec, a);
  std::vector<RatioPoint> out;
  CholFactor factor;
  factor.regularizer_a = a;
  std::vector<Signal> seen;
  Vector outcomes;
  double cumulative = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const Signal& x = sample.examples[t].signal;
    const Vector k = cross_vector(spec, seen, x);
    factor = extend(factor, k, eval_kernel(spec, x, x) + a).new_factor;
    seen.push_back(x);
    outcomes.push_back(sample.examples[t].outcome);
    cumulative += trace.steps[t].sq_loss;
    const double term_min = a * dot(outcomes, solve(factor, outcomes));
    if (term_min < 1e-12) continue;
    out.push_back(RatioPoint{t + 1, cumulative / term_min});
  }
  return out;
}

}  // namespace krr
