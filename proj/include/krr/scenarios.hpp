#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "krr/errors.hpp"
#include "krr/kernels.hpp"
#include "krr/regression.hpp"

namespace krr {

// Uniform doubles built from raw engine bits, so streams are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(gen_() >> 11) * 0x1.0p-53;  // [0, 1)
    return lo + (hi - lo) * u;
  }

  std::uint64_t integer(std::uint64_t bound) {  // [0, bound)
    return gen_() % bound;
  }

 private:
  std::mt19937_64 gen_;
};

// Canned data generators.
//
//   counterexample_l2: paired unit-coordinate signals with outcomes 1, 0,
//     1, 0, ... where the sequential predictor's relative loss against
//     the zero function stays pinned above one.
//   compact_rbf: signals cycling a fixed grid in [0, 1] with outcomes
//     sin(2 pi x) plus alternating +-0.5, never realizable exactly.
//   orthogonal_drop: a core sample embedded in a larger space together
//     with coordinate-disjoint extra examples, for checking that such
//     examples cannot move predictions over the core block.
struct ScenarioSpec {
  enum class Kind { CounterexampleL2, CompactRbf, OrthogonalDrop };

  Kind kind = Kind::CounterexampleL2;
  std::size_t half_pairs = 0;   // counterexample_l2: number of pairs
  std::size_t steps = 0;        // compact_rbf: sequence length
  std::vector<double> grid;     // compact_rbf: cycled abscissas
  Sample core;                  // orthogonal_drop: sample to embed
  std::size_t ortho_count = 0;  // orthogonal_drop: extra examples
  std::uint64_t seed = 0;

  static ScenarioSpec counterexample_l2(std::size_t half_pairs) {
    if (half_pairs == 0)
      throw InputError("scenario: need at least one pair");
    ScenarioSpec s;
    s.kind = Kind::CounterexampleL2;
    s.half_pairs = half_pairs;
    return s;
  }

  static ScenarioSpec compact_rbf(std::size_t steps,
                                  std::vector<double> grid = {0.0, 0.5, 1.0}) {
    if (steps == 0) throw InputError("scenario: need at least one step");
    if (grid.empty()) throw InputError("scenario: empty grid");
    for (double g : grid)
      if (!(g >= 0.0 && g <= 1.0))
        throw InputError("scenario: grid points must lie in [0, 1]");
    ScenarioSpec s;
    s.kind = Kind::CompactRbf;
    s.steps = steps;
    s.grid = std::move(grid);
    return s;
  }

  static ScenarioSpec orthogonal_drop(Sample core, std::size_t ortho_count,
                                      std::uint64_t seed = 0) {
    if (core.empty()) throw InputError("scenario: empty core sample");
    ScenarioSpec s;
    s.kind = Kind::OrthogonalDrop;
    s.core = std::move(core);
    s.ortho_count = ortho_count;
    s.seed = seed;
    return s;
  }
};

inline Sample generate(const ScenarioSpec& scenario) {
  switch (scenario.kind) {
    case ScenarioSpec::Kind::CounterexampleL2: {
      const std::size_t k = scenario.half_pairs;
      std::vector<Vector> coords;
      Vector outcomes;
      for (std::size_t i = 0; i < k; ++i) {
        Vector unit(k, 0.0);
        unit[i] = 1.0;
        coords.push_back(unit);
        coords.push_back(unit);
        outcomes.push_back(1.0);
        outcomes.push_back(0.0);
      }
      return Sample::from_rows(coords, outcomes);
    }
    case ScenarioSpec::Kind::CompactRbf: {
      std::vector<Vector> coords;
      Vector outcomes;
      for (std::size_t t = 1; t <= scenario.steps; ++t) {
        const double x = scenario.grid[(t - 1) % scenario.grid.size()];
        coords.push_back(Vector{x});
        const double noise = t % 2 == 0 ? 0.5 : -0.5;
        outcomes.push_back(std::sin(2.0 * std::numbers::pi * x) + noise);
      }
      return Sample::from_rows(coords, outcomes);
    }
    case ScenarioSpec::Kind::OrthogonalDrop: {
      // Core signals are padded with zeros; each extra example lives on
      // its own fresh coordinate, so it is orthogonal to the core block,
      // to every probe inside it, and to the other extras.
      const std::size_t core_dim = scenario.core.dimension;
      const std::size_t dim = core_dim + scenario.ortho_count;
      Rng rng(scenario.seed);
      std::vector<Vector> coords;
      Vector outcomes;
      for (const auto& ex : scenario.core.examples) {
        Vector padded(dim, 0.0);
        for (std::size_t i = 0; i < core_dim; ++i)
          padded[i] = ex.signal.coords[i];
        coords.push_back(std::move(padded));
        outcomes.push_back(ex.outcome);
      }
      for (std::size_t j = 0; j < scenario.ortho_count; ++j) {
        Vector padded(dim, 0.0);
        padded[core_dim + j] = rng.uniform(0.5, 2.0);
        coords.push_back(std::move(padded));
        outcomes.push_back(rng.uniform(-2.0, 2.0));
      }
      return Sample::from_rows(coords, outcomes);
    }
  }
  throw InputError("scenario: unknown kind");
}

// Closed forms for the paired-signal scenario at ridge a: predictions
// alternate 0 and 1/(1+a), and at each full pair the cumulative square
// loss relative to the zero function is exactly 1 + 1/(1+a)^2.
struct CounterexampleExpectations {
  Vector predicted_gammas;
  double limit_ratio = 0.0;
};

inline CounterexampleExpectations counterexample_expectations(
    double a, std::size_t half_pairs) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw InputError("counterexample: ridge must be positive and finite");
  CounterexampleExpectations e;
  const double even_gamma = 1.0 / (1.0 + a);
  for (std::size_t i = 0; i < half_pairs; ++i) {
    e.predicted_gammas.push_back(0.0);
    e.predicted_gammas.push_back(even_gamma);
  }
  e.limit_ratio = 1.0 + even_gamma * even_gamma;
  return e;
}

// Cumulative square loss of the trace against the zero function's
// cumulative square loss, per prefix. Prefixes where the zero function
// has no loss yet are skipped.
inline std::vector<std::pair<std::size_t, double>> zero_function_ratios(
    const Sample& sample, const OnlineTrace& trace) {
  std::vector<std::pair<std::size_t, double>> out;
  double cum = 0.0, cum_zero = 0.0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    cum += trace.steps[t].sq_loss;
    const double y = sample.examples[t].outcome;
    cum_zero += y * y;
    if (cum_zero < 1e-12) continue;
    out.emplace_back(t + 1, cum / cum_zero);
  }
  return out;
}

// Text form used by the command line: "counterexample:<k>",
// "compact-rbf:<T>", "ortho-drop:<core-file>:<count>". The core file is
// returned for the caller to load; scenarios do not touch the
// filesystem.
struct ParsedScenario {
  ScenarioSpec::Kind kind;
  std::size_t count = 0;
  std::string core_file;
};

namespace detail {

inline std::size_t parse_count(const std::string& token, const char* what) {
  const int v = parse_int(token, what);
  if (v < 1)
    throw InputError(std::string("scenario: ") + what + " must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline ParsedScenario parse_scenario(const std::string& text) {
  const auto tokens = detail::split(text, ':');
  ParsedScenario p;
  if (tokens.front() == "counterexample") {
    if (tokens.size() != 2)
      throw InputError("scenario: counterexample takes one count");
    p.kind = ScenarioSpec::Kind::CounterexampleL2;
    p.count = detail::parse_count(tokens[1], "count");
    return p;
  }
  if (tokens.front() == "compact-rbf") {
    if (tokens.size() != 2)
      throw InputError("scenario: compact-rbf takes one length");
    p.kind = ScenarioSpec::Kind::CompactRbf;
    p.count = detail::parse_count(tokens[1], "length");
    return p;
  }
  if (tokens.front() == "ortho-drop") {
    if (tokens.size() < 3)
      throw InputError("scenario: ortho-drop takes core-file:count");
    p.kind = ScenarioSpec::Kind::OrthogonalDrop;
    // The file path may itself contain separators; the count is last.
    p.core_file = tokens[1];
    for (std::size_t i = 2; i + 1 < tokens.size(); ++i)
      p.core_file += ":" + tokens[i];
    p.count = detail::parse_count(tokens.back(), "count");
    return p;
  }
  throw InputError("scenario: unknown kind '" + tokens.front() + "'");
}

}  // namespace krr
