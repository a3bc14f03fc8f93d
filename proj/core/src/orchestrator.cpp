// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/orchestrator.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "ckkstune/error.hpp"

namespace ckkstune {

using nlohmann::json;

void validate_run_config(const RunConfig& run) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (run.phase_a_keep < 1) fail("phase_a_keep must be >= 1");
  if (run.budget < run.phase_a_keep) {
    fail("budget " + std::to_string(run.budget) + " cannot cover " + std::to_string(run.phase_a_keep) +
         " Phase B survivors");
  }
  if (run.max_c_iterations < 0) fail("max_c_iterations must be >= 0");
  if (run.top_k < 1) fail("top_k must be >= 1");
  if (run.calibration_batch < 1) fail("calibration_batch must be >= 1");
  run.weights.normalized();
}

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::Schema, "run config must be an object");
  RunConfig run;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "gates") run.gates = gates_from_json(v);
      else if (key == "budget") run.budget = v.get<int>();
      else if (key == "phase_a_keep") run.phase_a_keep = v.get<int>();
      else if (key == "max_c_iterations") run.max_c_iterations = v.get<int>();
      else if (key == "backend") run.backend = backend_binding_from_json(v);
      else if (key == "policy") {
        for (const auto& [pk, pv] : v.items()) {
          if (pk == "endpoint") run.policy_endpoint = pv.get<std::string>();
          else if (pk == "timeout_ms") run.policy_timeout = std::chrono::milliseconds(pv.get<int>());
          else throw Error(ErrorKind::Schema, "unexpected policy field '" + pk + "'");
        }
      } else if (key == "seed") run.seed = v.get<std::uint64_t>();
      else if (key == "weights") {
        const auto w = v.get<std::vector<double>>();
        if (w.size() != 4) throw Error(ErrorKind::Schema, "weights needs 4 entries");
        run.weights = {w[0], w[1], w[2], w[3]};
      } else if (key == "top_k") run.top_k = v.get<int>();
      else if (key == "final_full") run.final_full = v.get<bool>();
      else if (key == "calibration_batch") run.calibration_batch = v.get<int>();
      else if (key == "seed_coefficients") run.seed_coefficients = coefficients_from_json(v);
      else throw Error(ErrorKind::Schema, "unexpected run config field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed run config: ") + e.what());
  }
  if (run.backend.kind == BackendKind::Recorded && run.backend.recorded_path.is_relative() && !base_dir.empty()) {
    run.backend.recorded_path = base_dir / run.backend.recorded_path;
  }
  validate_run_config(run);
  return run;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("run config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(doc, base_dir);
}

json run_config_to_json(const RunConfig& run) {
  json j = {{"gates", gates_to_json(run.gates)},
            {"budget", run.budget},
            {"phase_a_keep", run.phase_a_keep},
            {"max_c_iterations", run.max_c_iterations},
            {"backend", backend_binding_to_json(run.backend)},
            {"seed", run.seed},
            {"weights", {run.weights.w1, run.weights.w2, run.weights.w3, run.weights.w4}},
            {"top_k", run.top_k},
            {"final_full", run.final_full},
            {"calibration_batch", run.calibration_batch},
            {"seed_coefficients", coefficients_to_json(run.seed_coefficients)}};
  if (run.policy_endpoint) {
    j["policy"] = {{"endpoint", *run.policy_endpoint}, {"timeout_ms", run.policy_timeout.count()}};
  }
  return j;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::BudgetExhausted: return "BudgetExhausted";
    case Termination::Converged: return "Converged";
    case Termination::NoFeasibleRegime: return "NoFeasibleRegime";
    case Termination::NoAdmissibleCandidate: return "NoAdmissibleCandidate";
    case Termination::AllSurvivorsFailedEncrypted: return "AllSurvivorsFailedEncrypted";
    case Termination::IterationLimit: return "IterationLimit";
  }
  return "?";
}

bool is_failure(Termination t) {
  return t == Termination::NoFeasibleRegime || t == Termination::AllSurvivorsFailedEncrypted;
}

json report_to_json(const RunReport& r) {
  json ledger = json::array();
  for (const auto& rec : r.ledger) ledger.push_back(record_to_json(rec));
  json obs = json::array();
  for (const auto& o : r.observations) obs.push_back({{"counts", counts_to_json(o.counts)}, {"seconds", o.seconds}});
  json j = {{"model", r.model_name},
            {"termination", to_string(r.termination)},
            {"budget", r.budget},
            {"encrypted_trials", r.encrypted_trials},
            {"accepted_best_latencies", r.accepted_best_latencies},
            {"calibration", {{"observations", std::move(obs)}}},
            {"notes", r.notes},
            {"ledger", std::move(ledger)}};
  j["baseline"] = r.baseline ? record_to_json(*r.baseline) : json(nullptr);
  j["best"] = r.best ? record_to_json(*r.best) : json(nullptr);
  if (r.calibration) j["calibration"]["fit"] = calibration_to_json(*r.calibration);
  return j;
}

Orchestrator::Orchestrator(const ModelGraph& graph, RunConfig run, EncryptedBackend* backend,
                           TraceRepository* trace, Policy* policy)
    : graph_(graph),
      run_(std::move(run)),
      own_trace_(trace ? nullptr : std::make_unique<TraceRepository>()),
      trace_(trace ? trace : own_trace_.get()),
      policy_(policy ? policy : &heuristic_),
      evaluator_(graph_, run_.gates, backend, trace_,
                 make_calibration_batch(graph.input_shape, kDefaultCalibrationSeed + run_.seed,
                                        static_cast<std::size_t>(run_.calibration_batch))) {
  validate_run_config(run_);
  ledger_start_ = trace_->size();
  budget_remaining_ = run_.budget;
  report_.model_name = graph_.name;
  report_.budget = run_.budget;
}

TrialOutcome Orchestrator::encrypted_trial(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs,
                                           const TrialAnnotation& note) {
  if (budget_remaining_ <= 0) throw Error(ErrorKind::InvariantViolation, "encrypted budget exhausted");
  --budget_remaining_;
  ++report_.encrypted_trials;
  return evaluator_.run_trial(config, mode, coeffs, note);
}

std::vector<FheConfig> Orchestrator::phase_a() {
  const auto summary = summarize_model(graph_);
  std::vector<FheConfig> exemplars;
  if (auto ex = trace_->best_exemplar(evaluator_.signature())) {
    exemplars.push_back(ex->config);
    report_.notes.push_back("exemplar from trial " + std::to_string(ex->ordinal) + " seeded Phase A");
  }
  const auto candidates =
      init_propose(summary, exemplars, UserConstraints{run_.gates.security_target_bits});
  const auto& seeds = run_.seed_coefficients;
  const TrialAnnotation note{"A", std::string(to_string(Proposer::HeuristicInit)), {}, "init template grid", seeds};

  auto fan_out = [&](const std::vector<FheConfig>& configs, EvalMode mode) {
    std::vector<std::future<Metrics>> jobs;
    for (const auto& c : configs) {
      jobs.push_back(std::async(std::launch::async, [this, &c, mode, &seeds] {
        return evaluator_.evaluate(c, mode, seeds);
      }));
    }
    std::vector<TrialRecord> records;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      records.push_back(evaluator_.commit(configs[i], jobs[i].get(), note).record);
    }
    return records;
  };

  std::vector<FheConfig> statically_ok;
  for (const auto& r : fan_out(candidates, EvalMode::StaticOnly)) {
    if (r.passed) statically_ok.push_back(r.config);
  }
  const auto clear = fan_out(statically_ok, EvalMode::ClearOnly);
  return regime_select(clear, static_cast<std::size_t>(run_.phase_a_keep));
}

PhaseBResult Orchestrator::phase_b(const std::vector<FheConfig>& survivors) {
  if (static_cast<int>(survivors.size()) > budget_remaining_) {
    throw Error(ErrorKind::Config, "budget cannot cover one FHE_LIGHT run per survivor");
  }
  const auto& seeds = run_.seed_coefficients;
  PhaseBResult out;
  std::optional<TrialRecord> base;
  for (const auto& cfg : survivors) {
    const TrialAnnotation note{"B", std::string(to_string(Proposer::HeuristicRegime)), {}, "regime survivor", seeds};
    auto t = encrypted_trial(cfg, EvalMode::FheLight, seeds, note);
    for (const auto& [id, sec] : *t.metrics.measured_layer_seconds) {
      if (const auto* p = t.metrics.clear->find(id)) out.observations.push_back({p->counts, sec});
    }
    if (t.record.passed &&
        (!base || *t.record.metrics.measured_latency_s < *base->metrics.measured_latency_s)) {
      base = t.record;
    }
  }
  out.calibration = calibrate(out.observations, seeds);
  frozen_ = out.calibration.coeffs;
  report_.observations = out.observations;
  report_.calibration = out.calibration;
  if (!out.calibration.warning.empty()) report_.notes.push_back("calibration: " + out.calibration.warning);
  if (!base) throw Error(ErrorKind::AllSurvivorsFailedEncrypted, "every Phase B survivor failed its gates");
  out.base = *base;
  return out;
}

namespace {

bool numeric_failure(const TrialRecord& r) {
  for (const auto& reason : r.reasons) {
    if (reason.rfind("mae", 0) == 0 || reason.rfind("precision", 0) == 0 || reason.rfind("layer mae", 0) == 0) {
      return true;
    }
  }
  return false;
}

}  // namespace

void Orchestrator::phase_c(const PhaseBResult& b) {
  const CostCoefficients coeffs = frozen_.value_or(b.calibration.coeffs);
  const auto summary = summarize_model(graph_);
  std::vector<TrialRecord> best_stack{b.base};
  report_.baseline = b.base;
  report_.accepted_best_latencies = {*b.base.metrics.measured_latency_s};

  LayerSet encrypted;
  for (const auto& r : trace_->records()) {
    if (is_encrypted(r.mode)) encrypted.insert(r.digest);
  }

  bool repair_mode = false;
  double repair_margin = 0, repair_precision = 0;
  int patience = 0;
  int iterations = 0;
  std::vector<TrialBrief> history;
  std::optional<Termination> term;

  while (!term) {
    if (budget_remaining_ <= 0) {
      term = Termination::BudgetExhausted;
      break;
    }
    if (iterations >= run_.max_c_iterations) {
      term = Termination::IterationLimit;
      break;
    }
    ++iterations;
    const TrialRecord& best = best_stack.back();

    SearchState state;
    state.graph = &graph_;
    state.config = best.config;
    state.estimate = estimate_structure(graph_, best.config, coeffs);
    const auto report = analyze(graph_, best.config);
    state.profiles = structural_profiles(graph_, best.config, report.plan ? &*report.plan : nullptr, coeffs);
    const auto& measured = best.metrics.measured_layer_seconds;
    double measured_total = 0;
    for (const auto& [id, s] : measured) measured_total += s;
    if (measured_total > 0) {
      for (auto& p : state.profiles) {
        auto it = measured.find(p.id);
        p.runtime_fraction = it == measured.end() ? 0.0 : it->second / measured_total;
      }
    }
    state.precision_bits = best.metrics.measured_precision_bits.value_or(0);
    state.gates = run_.gates;
    state.coeffs = coeffs;
    state.weights = run_.weights;
    state.top_k = static_cast<std::size_t>(run_.top_k);
    state.repair_mode = repair_mode;

    auto global = global_tradeoff_propose(state);
    auto layer = layerwise_propose(state, global.bottlenecks);
    PolicyContext ctx;
    ctx.phase = Phase::C;
    ctx.summary = summary;
    ctx.best_digest = best.digest;
    ctx.best_latency_s = best.metrics.measured_latency_s;
    ctx.budget_remaining = budget_remaining_;
    for (auto& o : global.directions) ctx.offered.push_back(std::move(o));
    for (auto& o : layer) ctx.offered.push_back(std::move(o));
    for (std::size_t i = 0; i < ctx.offered.size(); ++i) ctx.offered[i].id = "d" + std::to_string(i);
    for (const auto& id : global.bottlenecks) {
      for (const auto& p : state.profiles) {
        if (p.id == id) ctx.bottlenecks.push_back(p);
      }
    }
    ctx.history = history;

    const auto decision = policy_->decide(ctx);
    std::vector<Direction> chosen;
    for (const auto& id : decision.chosen) {
      for (const auto& o : ctx.offered) {
        if (o.id == id) chosen.push_back(o.direction);
      }
    }
    const auto candidates = build_candidates(graph_, best.config, chosen, state.estimate.depth_mask);
    AdmissionContext actx{state.estimate.proxy_latency, repair_mode, repair_margin, repair_precision, encrypted};
    const TrialAnnotation gate_note{"C", std::string(to_string(decision.proposer)), {}, decision.rationale, coeffs};
    auto admitted = patch_gate_admit(candidates, evaluator_, coeffs, actx, gate_note);
    if (!admitted) {
      term = Termination::NoAdmissibleCandidate;
      break;
    }

    TrialAnnotation note = gate_note;
    note.directions = admitted->candidate.directions;
    auto t = encrypted_trial(admitted->candidate.config, EvalMode::FheLight, coeffs, note);
    encrypted.insert(t.record.digest);
    history.push_back(brief(t.record));
    if (t.record.passed) {
      repair_mode = false;
      if (*t.record.metrics.measured_latency_s < *best.metrics.measured_latency_s) {
        best_stack.push_back(t.record);
        report_.accepted_best_latencies.push_back(*t.record.metrics.measured_latency_s);
        patience = 0;
      } else if (++patience >= 2) {
        term = Termination::Converged;
      }
    } else if (numeric_failure(t.record)) {
      repair_mode = true;
      repair_margin = t.record.metrics.clear_margin_bits.value_or(0);
      repair_precision = t.record.metrics.clear_precision_bits.value_or(0);
    }
  }
  report_.termination = *term;

  report_.best = best_stack.back();
  if (run_.final_full && budget_remaining_ > 0) {
    const TrialAnnotation note{"C", std::nullopt, {}, "final verification", coeffs};
    auto full = encrypted_trial(best_stack.back().config, EvalMode::FheFull, coeffs, note);
    if (full.record.passed) {
      report_.best = full.record;
    } else {
      report_.notes.push_back("FHE_FULL failed gates that FHE_LIGHT passed for " +
                              best_stack.back().digest.substr(0, 12) + "; demoted to the previous feasible best");
      if (best_stack.size() > 1) {
        best_stack.pop_back();
      } else {
        report_.notes.push_back("no earlier feasible best; keeping the FHE_LIGHT baseline");
      }
      report_.best = best_stack.back();
    }
  }
}

void Orchestrator::finalize() {
  const auto all = trace_->records();
  report_.ledger.assign(all.begin() + static_cast<std::ptrdiff_t>(ledger_start_), all.end());
}

RunReport Orchestrator::optimize() {
  try {
    const auto survivors = phase_a();
    const auto base = phase_b(survivors);
    phase_c(base);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoFeasibleRegime) {
      report_.termination = Termination::NoFeasibleRegime;
    } else if (e.kind() == ErrorKind::AllSurvivorsFailedEncrypted) {
      report_.termination = Termination::AllSurvivorsFailedEncrypted;
    } else {
      throw;
    }
    report_.notes.push_back(e.what());
  }
  finalize();
  return report_;
}

}  // namespace ckkstune
