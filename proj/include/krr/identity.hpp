#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "krr/errors.hpp"
#include "krr/kernels.hpp"
#include "krr/linalg.hpp"
#include "krr/regression.hpp"

namespace krr {

// Three routes to the same number, with their disagreement:
//   term_online  - sum over steps of (gamma_t - y_t)^2 / (1 + d_t/a)
//   term_min     - regularized objective at the fitted batch model
//   term_closed  - a * Y' (K + aI)^{-1} Y
// The routes share no intermediate results beyond the kernel itself.
// frobenius_residual compares the product of per-step (1 + d_t/a)
// factors with det(I + K/a), in relative terms.
struct IdentityCertificate {
  double term_online = 0.0;
  double term_min = 0.0;
  double term_closed = 0.0;
  double residual_pairwise = 0.0;
  double frobenius_residual = 0.0;
  double scale = 1.0;              // max(1, |term_closed|)
  double tol = 0.0;                // effective tolerance applied
  double cond_estimate = 1.0;
  std::size_t steps = 0;
  bool ok = false;                 // residual_pairwise <= tol * scale
};

// Minimal regularized objective by its closed form, one Cholesky solve.
inline double min_regularized_loss(const Sample& sample,
                                   const KernelSpec& spec, double a) {
  if (sample.empty()) return 0.0;
  const GramMatrix g = gram(spec, sample.signals());
  const CholFactor f = cholesky_shifted(g.entries, a);
  const Vector y = sample.outcomes();
  return a * dot(y, solve(f, y));
}

// The default tolerance is loosened to 1e-6 when the regularized Gram
// matrix looks worse than 1e10 in condition, estimated from the factor
// diagonal.
inline IdentityCertificate certify(const Sample& sample,
                                   const KernelSpec& spec, double a,
                                   double tol = 1e-8) {
  if (!(tol > 0.0)) throw InputError("certify: tolerance must be positive");
  IdentityCertificate cert;
  cert.steps = sample.size();
  const OnlineTrace trace = run_online(sample, spec, a);
  cert.term_online = trace.sum_weighted();
  const BatchModel model = fit_batch(sample, spec, a);
  cert.term_min = regularized_loss(sample, spec, a, model);
  double log_det_scaled = 0.0;  // ln det(I + K/a)
  if (!sample.empty()) {
    const GramMatrix g = gram(spec, sample.signals());
    const CholFactor f = cholesky_shifted(g.entries, a);
    const Vector y = sample.outcomes();
    cert.term_closed = a * dot(y, solve(f, y));
    cert.cond_estimate = condition_estimate(f);
    log_det_scaled =
        logdet(f) - static_cast<double>(sample.size()) * std::log(a);
  }
  double log_product = 0.0;  // ln prod (1 + d_t/a)
  for (const auto& step : trace.steps) log_product += std::log1p(step.d / a);
  cert.frobenius_residual = std::abs(std::expm1(log_product - log_det_scaled));
  cert.residual_pairwise = std::max(
      {std::abs(cert.term_online - cert.term_min),
       std::abs(cert.term_online - cert.term_closed),
       std::abs(cert.term_min - cert.term_closed)});
  cert.scale = std::max(1.0, std::abs(cert.term_closed));
  cert.tol = cert.cond_estimate > 1e10 ? std::max(tol, 1e-6) : tol;
  cert.ok = cert.residual_pairwise <= cert.tol * cert.scale;
  return cert;
}

struct ZeroRidgeRow {
  double a = 0.0;
  double term_closed = 0.0;
  double gap = 0.0;  // |term_closed - limit|
};

// As the ridge goes to zero the closed-form term tends to the squared
// norm of the outcome vector's component in the Gram null space. The
// study tabulates the sweep against that eigendecomposition limit.
struct ZeroRidgeStudy {
  std::vector<ZeroRidgeRow> rows;
  double limit = 0.0;
  std::size_t rank = 0;
  bool monotone = false;  // gaps non-increasing along the descending sweep
};

inline std::vector<double> default_ridge_sweep() {
  std::vector<double> sweep;
  for (int k = 0; k <= 8; ++k) sweep.push_back(std::pow(10.0, -k));
  return sweep;
}

inline ZeroRidgeStudy zero_ridge_study(
    const Sample& sample, const KernelSpec& spec,
    const std::vector<double>& sweep = default_ridge_sweep()) {
  if (sweep.empty()) throw InputError("zero_ridge: empty sweep");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!(sweep[i] > 0.0)) throw InputError("zero_ridge: ridge not positive");
    if (i > 0 && !(sweep[i] < sweep[i - 1]))
      throw InputError("zero_ridge: sweep must be strictly decreasing");
  }
  ZeroRidgeStudy study;
  const std::size_t t_count = sample.size();
  if (t_count == 0) {
    for (double a : sweep) study.rows.push_back(ZeroRidgeRow{a, 0.0, 0.0});
    study.monotone = true;
    return study;
  }
  const GramMatrix g = gram(spec, sample.signals());
  const Vector y = sample.outcomes();
  const NullProjection proj = null_space_projection(
      g.entries, y, static_cast<double>(t_count) * 1e-12);
  study.limit = proj.projection_sq_norm;
  study.rank = proj.rank;
  for (double a : sweep) {
    const CholFactor f = cholesky_shifted(g.entries, a);
    const double term = a * dot(y, solve(f, y));
    study.rows.push_back(ZeroRidgeRow{a, term, std::abs(term - study.limit)});
  }
  // Exact gaps decrease along the sweep; the slack absorbs rounding at
  // tiny ridges where the solve runs at high condition.
  const double slack = 1e-6 * std::max(1.0, study.limit);
  study.monotone = true;
  for (std::size_t i = 1; i < study.rows.size(); ++i)
    if (study.rows[i].gap > study.rows[i - 1].gap + slack)
      study.monotone = false;
  return study;
}

}  // namespace krr
