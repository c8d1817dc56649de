#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "krr/errors.hpp"
#include "krr/identity.hpp"
#include "krr/linalg.hpp"
#include "krr/matrix.hpp"
#include "krr/regression.hpp"

namespace krr {

struct GaussianPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// State of the Gaussian expert mixture after `step` observations. The
// posterior over weight vectors is N(posterior_mean, posterior_cov);
// before any data that is the standard normal prior. gram_shifted keeps
// sigma2 I + sum x x', refactorized whole at each update rather than
// downdated, and xy_sum keeps sum y x.
struct MergeState {
  std::size_t step = 0;
  double cumulative_loss = 0.0;
  Vector posterior_mean;
  Matrix posterior_cov;
  Matrix gram_shifted;
  Vector xy_sum;
  double sigma2 = 0.0;

  static MergeState initial(std::size_t dimension, double sigma2) {
    if (dimension == 0) throw InputError("merge: dimension must be positive");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw InputError("merge: sigma2 must be positive and finite");
    MergeState s;
    s.posterior_mean.assign(dimension, 0.0);
    s.posterior_cov = Matrix::identity(dimension);
    s.gram_shifted = Matrix::identity(dimension);
    for (std::size_t i = 0; i < dimension; ++i) s.gram_shifted(i, i) = sigma2;
    s.xy_sum.assign(dimension, 0.0);
    s.sigma2 = sigma2;
    return s;
  }

  std::size_t dimension() const noexcept { return posterior_mean.size(); }
};

namespace detail {

inline void check_merge_args(const MergeState& state, const Signal& x,
                             double sigma2) {
  if (x.coords.size() != state.dimension())
    throw InputError("merge: dimension mismatch");
  if (sigma2 != state.sigma2)
    throw InputError("merge: sigma2 differs from the state it built");
}

}  // namespace detail

// Predictive distribution for the next outcome at x: mean from the
// posterior mean, variance from the posterior spread plus the expert
// noise floor.
inline GaussianPrediction merge_predict(const MergeState& state,
                                        const Signal& x, double sigma2) {
  detail::check_merge_args(state, x, sigma2);
  GaussianPrediction p;
  p.mean = dot(state.posterior_mean, x.coords);
  p.variance = dot(x.coords, multiply(state.posterior_cov, x.coords)) + sigma2;
  return p;
}

// One conjugate observation step. The cumulative loss grows by the
// negative log predictive density of y under merge_predict.
inline MergeState merge_update(const MergeState& state, const Signal& x,
                               double y, double sigma2) {
  detail::check_merge_args(state, x, sigma2);
  if (!std::isfinite(y)) throw InputError("merge: non-finite outcome");
  const GaussianPrediction pred = merge_predict(state, x, sigma2);
  MergeState next = state;
  next.step = state.step + 1;
  const double r = y - pred.mean;
  next.cumulative_loss += 0.5 * std::log(2.0 * std::numbers::pi * pred.variance) +
                          r * r / (2.0 * pred.variance);
  const std::size_t n = state.dimension();
  for (std::size_t i = 0; i < n; ++i) {
    next.xy_sum[i] += y * x.coords[i];
    for (std::size_t j = 0; j < n; ++j)
      next.gram_shifted(i, j) += x.coords[i] * x.coords[j];
  }
  const CholFactor f = cholesky(next.gram_shifted, sigma2);
  next.posterior_mean = solve(f, next.xy_sum);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = sigma2;
    const Vector col = solve(f, e);
    for (std::size_t i = 0; i < n; ++i) next.posterior_cov(i, j) = col[i];
    e[j] = 0.0;
  }
  return next;
}

namespace detail {

// Tensor-grid trapezoid quadrature over [-8, 8]^n, n in {1, 2}. The
// integrands used here decay at least like a standard normal, so the
// truncated box loses far less than the verification tolerances.
template <typename F>
double trapezoid_box(std::size_t n, std::size_t n_grid, F&& f) {
  if (n_grid < 2) throw InputError("quadrature: grid too small");
  const double lo = -8.0, hi = 8.0;
  const double h = (hi - lo) / static_cast<double>(n_grid - 1);
  auto weight = [&](std::size_t i) {
    return i == 0 || i == n_grid - 1 ? 0.5 : 1.0;
  };
  double total = 0.0;
  if (n == 1) {
    Vector theta(1);
    for (std::size_t i = 0; i < n_grid; ++i) {
      theta[0] = lo + static_cast<double>(i) * h;
      total += weight(i) * f(theta);
    }
    return total * h;
  }
  Vector theta(2);
  for (std::size_t i = 0; i < n_grid; ++i) {
    theta[0] = lo + static_cast<double>(i) * h;
    double inner = 0.0;
    for (std::size_t j = 0; j < n_grid; ++j) {
      theta[1] = lo + static_cast<double>(j) * h;
      inner += weight(j) * f(theta);
    }
    total += weight(i) * inner;
  }
  return total * h * h;
}

}  // namespace detail

struct LossAverageCheck {
  double sequential_loss = 0.0;  // accumulated by merge_update
  double mixture_loss = 0.0;     // -ln integral of e^{-loss(theta)} d prior
};

// The accumulated predictive loss must equal the loss of the whole
// mixture, computed by brute-force quadrature over the weight space.
// Only dimensions 1 and 2 are supported; the grid is per axis.
inline LossAverageCheck check_loss_average(const Sample& sample, double sigma2,
                                           std::size_t n_grid) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw InputError("loss average: sigma2 must be positive and finite");
  const std::size_t n = sample.dimension;
  if (sample.empty() && n == 0) return LossAverageCheck{0.0, 0.0};
  if (n < 1 || n > 2)
    throw InputError("loss average: only dimensions 1 and 2 are supported");
  LossAverageCheck check;
  MergeState state = MergeState::initial(n, sigma2);
  for (const auto& ex : sample.examples)
    state = merge_update(state, ex.signal, ex.outcome, sigma2);
  check.sequential_loss = state.cumulative_loss;
  const double t_count = static_cast<double>(sample.size());
  // Constant per-step factors are pulled out of the integral, leaving a
  // pure squared-error exponent against the prior.
  const double integral = detail::trapezoid_box(n, n_grid, [&](const Vector& theta) {
    double sse = 0.0;
    for (const auto& ex : sample.examples) {
      const double r = dot(theta, ex.signal.coords) - ex.outcome;
      sse += r * r;
    }
    return std::exp(-sse / (2.0 * sigma2) - 0.5 * squared_norm(theta));
  });
  check.mixture_loss =
      t_count * 0.5 * std::log(2.0 * std::numbers::pi * sigma2) +
      static_cast<double>(n) * 0.5 * std::log(2.0 * std::numbers::pi) -
      std::log(integral);
  return check;
}

struct GaussianIntegralCheck {
  double closed_form = 0.0;
  double quadrature = 0.0;
};

// integral of e^{-Q(theta)} for Q(theta) = theta' A theta + theta' b + c
// equals e^{-Q(theta0)} pi^{n/2} / sqrt(det A) at the minimizer theta0.
// A must be positive definite and small (1x1 or 2x2).
inline GaussianIntegralCheck check_gaussian_integral(const Matrix& a_mat,
                                                     const Vector& b,
                                                     double c,
                                                     std::size_t n_grid) {
  const std::size_t n = a_mat.rows();
  if (n < 1 || n > 2)
    throw InputError("gaussian integral: only dimensions 1 and 2 supported");
  if (a_mat.cols() != n || b.size() != n)
    throw InputError("gaussian integral: shape mismatch");
  const CholFactor f = cholesky(a_mat);
  Vector half_b(b);
  for (double& v : half_b) v *= -0.5;
  const Vector theta0 = solve(f, half_b);
  const double q0 =
      dot(theta0, multiply(a_mat, theta0)) + dot(theta0, b) + c;
  GaussianIntegralCheck check;
  check.closed_form = std::exp(-q0) *
                      std::pow(std::numbers::pi, static_cast<double>(n) / 2.0) /
                      std::exp(0.5 * logdet(f));
  check.quadrature = detail::trapezoid_box(n, n_grid, [&](const Vector& theta) {
    return std::exp(-(dot(theta, multiply(a_mat, theta)) + dot(theta, b) + c));
  });
  return check;
}

// The sequential/batch identity assembled entirely from the coordinate
// (primal) recursion: predictions and their per-step denominators come
// from the mixture state, the minimum from the primal fit, the closed
// form from the coordinate product matrix. a = sigma2 throughout.
inline IdentityCertificate verify_linear_identity(const Sample& sample,
                                                  double sigma2,
                                                  double tol = 1e-8) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw InputError("linear identity: sigma2 must be positive and finite");
  IdentityCertificate cert;
  cert.steps = sample.size();
  const std::size_t n = sample.dimension;
  double log_product = 0.0;  // ln prod (1 + x' A^{-1} x)
  if (!sample.empty()) {
    MergeState state = MergeState::initial(n, sigma2);
    for (const auto& ex : sample.examples) {
      const GaussianPrediction pred = merge_predict(state, ex.signal, sigma2);
      const double denom = pred.variance / sigma2;  // 1 + x' A^{-1} x
      const double r = pred.mean - ex.outcome;
      cert.term_online += r * r / denom;
      log_product += std::log(denom);
      state = merge_update(state, ex.signal, ex.outcome, sigma2);
    }
    const PrimalModel primal = fit_primal(sample, sigma2);
    cert.term_min = sigma2 * squared_norm(primal.theta);
    for (const auto& ex : sample.examples) {
      const double r = predict_primal(primal, ex.signal) - ex.outcome;
      cert.term_min += r * r;
    }
    const std::size_t t_count = sample.size();
    Matrix products(t_count, t_count);
    for (std::size_t i = 0; i < t_count; ++i)
      for (std::size_t j = i; j < t_count; ++j) {
        const double v = dot(sample.examples[i].signal.coords,
                             sample.examples[j].signal.coords);
        products(i, j) = v;
        products(j, i) = v;
      }
    const CholFactor f = cholesky_shifted(products, sigma2);
    const Vector y = sample.outcomes();
    cert.term_closed = sigma2 * dot(y, solve(f, y));
    cert.cond_estimate = condition_estimate(f);
    // det(A_T)/sigma2^n against the product of per-step denominators.
    Matrix gram_final = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) gram_final(i, i) = sigma2;
    for (const auto& ex : sample.examples)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          gram_final(i, j) += ex.signal.coords[i] * ex.signal.coords[j];
    const double log_det_scaled =
        logdet(cholesky(gram_final, sigma2)) -
        static_cast<double>(n) * std::log(sigma2);
    cert.frobenius_residual = std::abs(std::expm1(log_product - log_det_scaled));
  }
  cert.residual_pairwise =
      std::max({std::abs(cert.term_online - cert.term_min),
                std::abs(cert.term_online - cert.term_closed),
                std::abs(cert.term_min - cert.term_closed)});
  cert.scale = std::max(1.0, std::abs(cert.term_closed));
  cert.tol = cert.cond_estimate > 1e10 ? std::max(tol, 1e-6) : tol;
  cert.ok = cert.residual_pairwise <= cert.tol * cert.scale;
  return cert;
}

}  // namespace krr
