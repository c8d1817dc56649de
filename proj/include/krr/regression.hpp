#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "krr/errors.hpp"
#include "krr/kernels.hpp"
#include "krr/linalg.hpp"
#include "krr/matrix.hpp"

namespace krr {

struct Example {
  Signal signal;
  double outcome = 0.0;
};

// Ordered labelled data. Signals carry ids equal to their 1-based
// position, which is what identity-sensitive kernels see.
struct Sample {
  std::vector<Example> examples;
  std::size_t dimension = 0;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }

  std::vector<Signal> signals() const {
    std::vector<Signal> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.signal);
    return out;
  }

  Vector outcomes() const {
    Vector out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.outcome);
    return out;
  }

  static Sample from_rows(const std::vector<Vector>& coords,
                          const Vector& outcomes, std::size_t dimension = 0) {
    if (coords.size() != outcomes.size())
      throw InputError("sample: row/outcome count mismatch");
    Sample s;
    if (!coords.empty()) dimension = coords.front().size();
    if (!coords.empty() && dimension == 0)
      throw InputError("sample: signals must have at least one coordinate");
    s.dimension = dimension;
    for (std::size_t t = 0; t < coords.size(); ++t) {
      if (coords[t].size() != dimension)
        throw InputError("sample: inconsistent dimensions");
      for (double v : coords[t])
        if (!std::isfinite(v)) throw InputError("sample: non-finite coordinate");
      if (!std::isfinite(outcomes[t]))
        throw InputError("sample: non-finite outcome");
      s.examples.push_back(Example{Signal{coords[t], t + 1}, outcomes[t]});
    }
    return s;
  }
};

// Kernel regressor in dual form: f(x) = sum_i coeffs[i] K(signals[i], x).
// An empty model is the zero function.
struct BatchModel {
  Vector coeffs;
  KernelSpec spec;
  double ridge_a = 0.0;
  std::vector<Signal> train_signals;
};

inline BatchModel fit_batch(const Sample& sample, const KernelSpec& spec,
                            double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw InputError("fit_batch: ridge must be positive and finite");
  BatchModel model;
  model.spec = spec;
  model.ridge_a = a;
  model.train_signals = sample.signals();
  if (sample.empty()) return model;
  const GramMatrix g = gram(spec, model.train_signals);
  const CholFactor f = cholesky_shifted(g.entries, a);
  model.coeffs = solve(f, sample.outcomes());
  return model;
}

inline double predict(const BatchModel& model, const Signal& x) {
  if (model.train_signals.empty()) return 0.0;
  return dot(model.coeffs, cross_vector(model.spec, model.train_signals, x));
}

// Squared loss over the sample plus a times the squared kernel norm of
// the model. The model must have been built on exactly this sample's
// signals, but its coefficients are free, so perturbed models can be
// scored against the fitted one.
inline double regularized_loss(const Sample& sample, const KernelSpec& spec,
                               double a, const BatchModel& model) {
  if (!(model.spec == spec))
    throw InputError("regularized_loss: kernel mismatch");
  if (model.train_signals.size() != sample.size())
    throw InputError("regularized_loss: signal set mismatch");
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Signal& s = sample.examples[i].signal;
    const Signal& t = model.train_signals[i];
    if (s.id != t.id || s.coords != t.coords)
      throw InputError("regularized_loss: signal set mismatch");
  }
  if (sample.empty()) return 0.0;
  const GramMatrix g = gram(spec, model.train_signals);
  const Vector fitted = multiply(g.entries, model.coeffs);
  double loss = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const double r = fitted[t] - sample.examples[t].outcome;
    loss += r * r;
  }
  return loss + a * dot(model.coeffs, fitted);
}

struct OnlineStep {
  double gamma = 0.0;                    // prediction before seeing y_t
  double d = 0.0;                        // information gain of the step
  std::optional<double> gamma_clipped;
  double sq_loss = 0.0;
  std::optional<double> sq_loss_clipped;
  double weighted_loss = 0.0;            // sq_loss / (1 + d/a)
};

struct OnlineTrace {
  std::vector<OnlineStep> steps;
  double ridge_a = 0.0;
  std::optional<double> clip;

  double sum_weighted() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.weighted_loss;
    return s;
  }
  double sum_sq() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.sq_loss;
    return s;
  }
  double sum_sq_clipped() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.sq_loss_clipped.value();
    return s;
  }
  Vector d_sequence() const {
    Vector out;
    out.reserve(steps.size());
    for (const auto& st : steps) out.push_back(st.d);
    return out;
  }
};

// Sequential ridge prediction over the sample in order. One factor of
// the regularized Gram matrix grows across steps, so the whole pass is
// cubic in the sample size. Each step's information gain d is computed
// from the definition and cross-checked against the factorization pivot,
// which must equal a + d.
inline OnlineTrace run_online(const Sample& sample, const KernelSpec& spec,
                              double a, std::optional<double> clip = {}) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw InputError("run_online: ridge must be positive and finite");
  if (clip && !(*clip > 0.0))
    throw InputError("run_online: clip bound must be positive");
  OnlineTrace trace;
  trace.ridge_a = a;
  trace.clip = clip;
  CholFactor factor;
  factor.regularizer_a = a;
  std::vector<Signal> seen;
  Vector outcomes_seen;
  for (const auto& ex : sample.examples) {
    const Signal& x = ex.signal;
    const Vector k = cross_vector(spec, seen, x);
    const double kxx = eval_kernel(spec, x, x);
    OnlineStep step;
    double k_quadratic = 0.0;
    if (!seen.empty()) {
      const Vector z = solve(factor, k);
      step.gamma = dot(outcomes_seen, z);
      k_quadratic = dot(k, z);
    }
    double d = kxx - k_quadratic;
    const ExtensionResult ext = extend(factor, k, kxx + a);
    const double d_from_pivot = ext.pivot - a;
    const double check_scale = std::max({1.0, a, std::abs(kxx)});
    if (std::abs(d - d_from_pivot) > 1e-7 * check_scale)
      throw NumericalError("run_online: information gain disagrees with pivot");
    if (d < 0.0) {
      // Tiny negative values are factorization rounding; anything worse
      // means the Gram matrix was not positive semidefinite.
      if (d >= -1e-12 * kxx)
        d = 0.0;
      else
        throw NumericalError("run_online: negative information gain");
    }
    step.d = d;
    const double r = step.gamma - ex.outcome;
    step.sq_loss = r * r;
    step.weighted_loss = step.sq_loss / (1.0 + d / a);
    if (clip) {
      const double g = std::min(std::max(step.gamma, -*clip), *clip);
      step.gamma_clipped = g;
      const double rc = g - ex.outcome;
      step.sq_loss_clipped = rc * rc;
    }
    trace.steps.push_back(step);
    factor = std::move(ext.new_factor);
    seen.push_back(x);
    outcomes_seen.push_back(ex.outcome);
  }
  return trace;
}

// Linear-in-coordinates regressor fit through its normal equations on
// the coordinate Gram matrix (dimension x dimension).
struct PrimalModel {
  Vector theta;
  double ridge_a = 0.0;
};

inline PrimalModel fit_primal(const Sample& sample, double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw InputError("fit_primal: ridge must be positive and finite");
  const std::size_t n = sample.dimension;
  PrimalModel model;
  model.ridge_a = a;
  model.theta.assign(n, 0.0);
  if (sample.empty() || n == 0) return model;
  Matrix gram_a(n, n);
  Vector rhs(n, 0.0);
  for (const auto& ex : sample.examples) {
    const Vector& x = ex.signal.coords;
    if (x.size() != n) throw InputError("fit_primal: inconsistent dimensions");
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] += ex.outcome * x[i];
      for (std::size_t j = 0; j <= i; ++j) gram_a(i, j) += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) gram_a(i, j) = gram_a(j, i);
  gram_a.add_to_diagonal(a);
  model.theta = solve(cholesky(gram_a, a), rhs);
  return model;
}

inline double predict_primal(const PrimalModel& model, const Signal& x) {
  if (x.coords.size() != model.theta.size())
    throw InputError("predict_primal: dimension mismatch");
  return dot(model.theta, x.coords);
}

}  // namespace krr
