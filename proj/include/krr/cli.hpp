#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "krr/bayes.hpp"
#include "krr/bounds.hpp"
#include "krr/csv.hpp"
#include "krr/errors.hpp"
#include "krr/identity.hpp"
#include "krr/kernels.hpp"
#include "krr/regression.hpp"
#include "krr/scenarios.hpp"

namespace krr {

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::string kernel_text = "linear";
  double ridge = 1.0;
  std::optional<double> clip;
  std::string input_path;
  std::string output_path;  // empty means stdout; the tool handles it
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string scenario_text;
};

// Exit codes: 0 clean, 1 bad input, 2 a verified identity or bound
// failed numerically.
struct RunResult {
  std::string body;
  int exit_code = 0;
};

namespace detail {

inline Json config_json(const RunConfig& config) {
  Json j;
  j["command"] = config.command;
  j["kernel"] = config.kernel_text;
  j["ridge"] = config.ridge;
  if (config.clip)
    j["clip"] = *config.clip;
  else
    j["clip"] = nullptr;
  j["input"] = config.input_path;
  j["scenario"] = config.scenario_text;
  j["tol"] = config.tol;
  j["seed"] = config.seed;
  return j;
}

inline Sample load_sample(const RunConfig& config) {
  if (!config.scenario_text.empty()) {
    const ParsedScenario parsed = parse_scenario(config.scenario_text);
    switch (parsed.kind) {
      case ScenarioSpec::Kind::CounterexampleL2:
        return generate(ScenarioSpec::counterexample_l2(parsed.count));
      case ScenarioSpec::Kind::CompactRbf:
        return generate(ScenarioSpec::compact_rbf(parsed.count));
      case ScenarioSpec::Kind::OrthogonalDrop:
        return generate(ScenarioSpec::orthogonal_drop(
            parse_csv_file(parsed.core_file), parsed.count, config.seed));
    }
  }
  if (config.input_path.empty())
    throw InputError("no input: pass --input <csv> or --scenario <spec>");
  return parse_csv_file(config.input_path);
}

inline Json certificate_json(const IdentityCertificate& cert) {
  Json j;
  j["term_online"] = cert.term_online;
  j["term_min"] = cert.term_min;
  j["term_closed"] = cert.term_closed;
  j["residual_pairwise"] = cert.residual_pairwise;
  j["frobenius_residual"] = cert.frobenius_residual;
  j["scale"] = cert.scale;
  j["tol"] = cert.tol;
  j["cond_estimate"] = cert.cond_estimate;
  j["steps"] = cert.steps;
  j["ok"] = cert.ok;
  return j;
}

inline Json audit_json(const BoundAudit& audit) {
  Json j;
  j["name"] = audit.name;
  j["lhs"] = audit.lhs;
  j["rhs"] = audit.rhs;
  j["slack"] = audit.slack;
  j["scale"] = audit.scale;
  j["holds"] = audit.holds;
  Json ctx;
  for (const auto& [key, value] : audit.context) ctx[key] = value;
  j["context"] = ctx;
  return j;
}

inline Json step_json(std::size_t t, const OnlineStep& s) {
  Json j;
  j["t"] = t + 1;
  j["gamma"] = s.gamma;
  j["d"] = s.d;
  if (s.gamma_clipped)
    j["gamma_clipped"] = *s.gamma_clipped;
  else
    j["gamma_clipped"] = nullptr;
  j["sq_loss"] = s.sq_loss;
  if (s.sq_loss_clipped)
    j["sq_loss_clipped"] = *s.sq_loss_clipped;
  else
    j["sq_loss_clipped"] = nullptr;
  j["weighted_loss"] = s.weighted_loss;
  return j;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct CommandOutcome {
  Json results;
  std::string status = "ok";
  std::vector<std::string> messages;
  std::optional<std::string> raw_body;  // replaces the JSON report (CSV trace)
};

inline CommandOutcome cmd_fit(const RunConfig& config, const Sample& sample,
                              const KernelSpec& kernel) {
  CommandOutcome out;
  const BatchModel model = fit_batch(sample, kernel, config.ridge);
  out.results["coefficients"] = model.coeffs;
  out.results["objective"] = regularized_loss(sample, kernel, config.ridge, model);
  Json preds = Json::array();
  for (const auto& ex : sample.examples) preds.push_back(predict(model, ex.signal));
  out.results["training_predictions"] = preds;
  out.messages.push_back("fitted " + std::to_string(sample.size()) +
                         " examples in dimension " +
                         std::to_string(sample.dimension));
  return out;
}

inline CommandOutcome cmd_trace(const RunConfig& config, const Sample& sample,
                                const KernelSpec& kernel) {
  CommandOutcome out;
  const OnlineTrace trace = run_online(sample, kernel, config.ridge, config.clip);
  if (ends_with(config.output_path, ".csv")) {
    out.raw_body = write_trace_csv(trace);
    return out;
  }
  Json steps = Json::array();
  for (std::size_t t = 0; t < trace.steps.size(); ++t)
    steps.push_back(step_json(t, trace.steps[t]));
  out.results["steps"] = steps;
  out.results["sum_sq_loss"] = trace.sum_sq();
  out.results["sum_weighted_loss"] = trace.sum_weighted();
  if (config.clip) out.results["sum_sq_loss_clipped"] = trace.sum_sq_clipped();
  return out;
}

inline CommandOutcome cmd_verify_identity(const RunConfig& config,
                                          const Sample& sample,
                                          const KernelSpec& kernel) {
  CommandOutcome out;
  const IdentityCertificate cert = certify(sample, kernel, config.ridge, config.tol);
  out.results = certificate_json(cert);
  if (!cert.ok) {
    out.status = "violation";
    out.messages.push_back("terms disagree beyond tolerance");
  } else {
    out.messages.push_back("all three terms agree within tolerance");
  }
  return out;
}

inline CommandOutcome cmd_audit_bounds(const RunConfig& config,
                                       const Sample& sample,
                                       const KernelSpec& kernel) {
  CommandOutcome out;
  double max_diag = 0.0;
  double max_sq_norm = 0.0;
  double max_abs_y = 0.0;
  for (const auto& ex : sample.examples) {
    max_diag = std::max(max_diag, eval_kernel(kernel, ex.signal, ex.signal));
    max_sq_norm = std::max(max_sq_norm, squared_norm(ex.signal.coords));
    max_abs_y = std::max(max_abs_y, std::abs(ex.outcome));
  }
  // The hypotheses need strict headroom only against rounding.
  const double c_bound = std::max(std::sqrt(max_diag) * (1.0 + 1e-12), 1e-6);
  const double x_bound = std::max(std::sqrt(max_sq_norm) * (1.0 + 1e-12), 1e-6);
  const double y_bound = config.clip ? *config.clip : std::max(max_abs_y, 1.0);
  std::vector<BoundAudit> audits;
  audits.push_back(audit_multiplicative(sample, kernel, config.ridge, c_bound));
  audits.push_back(audit_clipped_kernel(sample, kernel, config.ridge, y_bound));
  if (kernel.family() == KernelFamily::Linear && !sample.empty()) {
    audits.push_back(
        audit_clipped_linear(sample, config.ridge, y_bound, x_bound));
    Matrix design(sample.dimension, sample.size());
    for (std::size_t t = 0; t < sample.size(); ++t)
      for (std::size_t i = 0; i < sample.dimension; ++i)
        design(i, t) = sample.examples[t].signal.coords[i];
    audits.push_back(audit_det_bound(design, config.ridge));
  }
  Json arr = Json::array();
  bool all_hold = true;
  for (const auto& audit : audits) {
    arr.push_back(audit_json(audit));
    all_hold = all_hold && audit.holds;
  }
  out.results["audits"] = arr;
  if (!all_hold) {
    out.status = "violation";
    out.messages.push_back("at least one bound failed its audit");
  } else {
    out.messages.push_back(std::to_string(audits.size()) + " bounds hold");
  }
  return out;
}

inline CommandOutcome cmd_zero_ridge(const RunConfig& config,
                                     const Sample& sample,
                                     const KernelSpec& kernel) {
  CommandOutcome out;
  const ZeroRidgeStudy study = zero_ridge_study(sample, kernel);
  Json rows = Json::array();
  for (const auto& row : study.rows) {
    Json r;
    r["ridge"] = row.a;
    r["term_closed"] = row.term_closed;
    r["gap"] = row.gap;
    rows.push_back(r);
  }
  out.results["rows"] = rows;
  out.results["limit"] = study.limit;
  out.results["rank"] = study.rank;
  out.results["monotone"] = study.monotone;
  const double final_gap = study.rows.back().gap;
  if (final_gap > 1e-4 * std::max(1.0, study.limit)) {
    out.status = "violation";
    out.messages.push_back("sweep did not reach the eigendecomposition limit");
  }
  return out;
}

inline CommandOutcome cmd_counterexample(const RunConfig& config) {
  CommandOutcome out;
  std::size_t half_pairs = 50;
  if (!config.scenario_text.empty()) {
    const ParsedScenario parsed = parse_scenario(config.scenario_text);
    if (parsed.kind != ScenarioSpec::Kind::CounterexampleL2)
      throw InputError("counterexample: scenario must be counterexample:<k>");
    half_pairs = parsed.count;
  }
  const Sample sample = generate(ScenarioSpec::counterexample_l2(half_pairs));
  const OnlineTrace trace = run_online(sample, KernelSpec::linear(), config.ridge);
  const CounterexampleExpectations expected =
      counterexample_expectations(config.ridge, half_pairs);
  double max_gamma_diff = 0.0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t)
    max_gamma_diff = std::max(
        max_gamma_diff,
        std::abs(trace.steps[t].gamma - expected.predicted_gammas[t]));
  const auto ratios = zero_function_ratios(sample, trace);
  double max_even_ratio_diff = 0.0;
  Json ratio_rows = Json::array();
  for (const auto& [t, ratio] : ratios) {
    Json r;
    r["t"] = t;
    r["ratio"] = ratio;
    ratio_rows.push_back(r);
    if (t % 2 == 0)
      max_even_ratio_diff =
          std::max(max_even_ratio_diff, std::abs(ratio - expected.limit_ratio));
  }
  out.results["half_pairs"] = half_pairs;
  out.results["limit_ratio"] = expected.limit_ratio;
  out.results["ratios"] = ratio_rows;
  out.results["max_gamma_abs_diff"] = max_gamma_diff;
  out.results["max_even_ratio_abs_diff"] = max_even_ratio_diff;
  if (max_gamma_diff > 1e-10 || max_even_ratio_diff > 1e-10) {
    out.status = "violation";
    out.messages.push_back("simulation disagrees with the closed forms");
  } else {
    out.messages.push_back(
        "relative loss stays at the closed-form value above one");
  }
  return out;
}

inline CommandOutcome cmd_bayes_check(const RunConfig& config,
                                      const Sample& sample) {
  CommandOutcome out;
  const double sigma2 = config.ridge;
  const LossAverageCheck loss = check_loss_average(sample, sigma2, 4001);
  const IdentityCertificate cert =
      verify_linear_identity(sample, sigma2, config.tol);
  out.results["sequential_loss"] = loss.sequential_loss;
  out.results["mixture_loss"] = loss.mixture_loss;
  const double loss_diff = std::abs(loss.sequential_loss - loss.mixture_loss);
  out.results["loss_abs_diff"] = loss_diff;
  out.results["identity"] = certificate_json(cert);
  const double loss_scale = std::max(1.0, std::abs(loss.sequential_loss));
  if (loss_diff > 1e-4 * loss_scale || !cert.ok) {
    out.status = "violation";
    out.messages.push_back("mixture route disagrees with the sequential route");
  } else {
    out.messages.push_back("mixture and sequential routes agree");
  }
  return out;
}

inline CommandOutcome cmd_dt_decay(const RunConfig& config,
                                   const Sample& sample,
                                   const KernelSpec& kernel) {
  CommandOutcome out;
  const DecayDiagnostic diag = decay_diagnostic(sample, kernel, config.ridge);
  out.results["d_sequence"] = diag.d_sequence;
  out.results["tail_max"] = diag.tail_max;
  if (diag.threshold_step)
    out.results["threshold_step"] = *diag.threshold_step;
  else
    out.results["threshold_step"] = nullptr;
  out.results["eps_d"] = diag.eps_d;
  return out;
}

}  // namespace detail

inline RunResult run_command(const RunConfig& config) {
  Json doc;
  doc["schema_version"] = "1";
  doc["config"] = detail::config_json(config);
  detail::CommandOutcome outcome;
  int exit_code = 0;
  try {
    if (!(config.ridge > 0.0) || !std::isfinite(config.ridge))
      throw InputError("ridge must be positive and finite");
    if (config.command == "counterexample") {
      outcome = detail::cmd_counterexample(config);
    } else {
      const Sample sample = detail::load_sample(config);
      const KernelSpec kernel = parse_kernel(config.kernel_text);
      if (config.command == "fit")
        outcome = detail::cmd_fit(config, sample, kernel);
      else if (config.command == "trace")
        outcome = detail::cmd_trace(config, sample, kernel);
      else if (config.command == "verify-identity")
        outcome = detail::cmd_verify_identity(config, sample, kernel);
      else if (config.command == "audit-bounds")
        outcome = detail::cmd_audit_bounds(config, sample, kernel);
      else if (config.command == "zero-ridge")
        outcome = detail::cmd_zero_ridge(config, sample, kernel);
      else if (config.command == "bayes-check")
        outcome = detail::cmd_bayes_check(config, sample);
      else if (config.command == "dt-decay")
        outcome = detail::cmd_dt_decay(config, sample, kernel);
      else
        throw InputError("unknown command '" + config.command + "'");
    }
    exit_code = outcome.status == "ok" ? 0 : 2;
  } catch (const InputError& e) {
    outcome.status = "input-error";
    outcome.messages.push_back(e.what());
    exit_code = 1;
  } catch (const NotPositiveDefinite& e) {
    outcome.status = "violation";
    outcome.messages.push_back(e.what());
    exit_code = 2;
  } catch (const NumericalError& e) {
    outcome.status = "violation";
    outcome.messages.push_back(e.what());
    exit_code = 2;
  }
  if (outcome.raw_body) return RunResult{*outcome.raw_body, exit_code};
  doc["status"] = outcome.status;
  doc["results"] = outcome.results;
  doc["messages"] = outcome.messages;
  return RunResult{doc.dump(2) + "\n", exit_code};
}

}  // namespace krr
