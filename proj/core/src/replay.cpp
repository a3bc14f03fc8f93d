// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/replay.hpp"

#include "ckkstune/controller.hpp"
#include "ckkstune/error.hpp"
#include "ckkstune/evaluation.hpp"
#include "ckkstune/io.hpp"

namespace ckkstune {

using nlohmann::json;

std::string_view to_string(Verdict v) { return v == Verdict::Accept ? "accept" : "reject"; }

Verdict verdict_from_string(std::string_view name) {
  if (name == "accept") return Verdict::Accept;
  if (name == "reject") return Verdict::Reject;
  throw Error(ErrorKind::Schema, "unknown verdict '" + std::string(name) + "'");
}

namespace {

json inline_or_file(const json& v, const std::filesystem::path& base_dir) {
  if (v.is_string()) return read_json(base_dir / v.get<std::string>());
  return v;
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::Schema, "scenario must be an object");
  for (const char* key : {"model", "base_config", "trace", "trials"}) {
    if (!doc.contains(key)) throw Error(ErrorKind::Schema, std::string("scenario missing '") + key + "'");
  }
  Scenario s;
  try {
    s.graph = model_from_json(inline_or_file(doc.at("model"), base_dir));
    s.base = config_from_json(inline_or_file(doc.at("base_config"), base_dir));
    validate_config(s.graph, s.base);
    if (doc.contains("gates")) s.gates = gates_from_json(doc.at("gates"));
    s.trace = base_dir / doc.at("trace").get<std::string>();
    if (doc.contains("workload_ratio")) s.workload_ratio = doc.at("workload_ratio").get<double>();
    for (const auto& t : doc.at("trials")) {
      ScenarioTrial trial;
      trial.alias = t.at("alias").get<std::string>();
      for (const auto& d : t.value("directions", json::array())) trial.directions.push_back(direction_from_json(d));
      trial.expected = verdict_from_string(t.at("expect").get<std::string>());
      s.trials.push_back(std::move(trial));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed scenario: ") + e.what());
  }
  if (s.trials.empty()) throw Error(ErrorKind::Schema, "scenario has no trials");
  if (!s.trials.front().directions.empty()) throw Error(ErrorKind::Schema, "trial 0 is the baseline and takes no directions");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json(path), path.parent_path());
}

bool ReplayResult::all_match() const {
  for (const auto& t : trials) {
    if (!t.matches()) return false;
  }
  return true;
}

ReplayResult replay(const Scenario& scenario) {
  auto backend = RecordedBackend::load(scenario.trace, scenario.workload_ratio);
  TraceRepository trace;
  const Evaluator evaluator(scenario.graph, scenario.gates, &backend, &trace, make_calibration_batch(scenario.graph.input_shape));
  const CostCoefficients coeffs;
  const auto mask = estimate_structure(scenario.graph, scenario.base, coeffs).depth_mask;

  ReplayResult out;
  std::optional<ClearRunReport> best_clear;
  std::optional<double> best_latency;
  std::optional<ClearRunReport> last_failed_clear;
  LayerSet encrypted;

  for (std::size_t i = 0; i < scenario.trials.size(); ++i) {
    const auto& st = scenario.trials[i];
    ReplayTrial rt;
    rt.index = i;
    rt.alias = st.alias;
    rt.directions = st.directions;
    rt.expected = st.expected;

    FheConfig config = scenario.base;
    for (const auto& d : st.directions) config = apply_direction(scenario.graph, config, d, Scope::LayerAgent, mask);
    rt.digest = config_digest(config);
    backend.bind_alias(rt.digest, st.alias);

    TrialAnnotation note{i == 0 ? "B" : "C", std::string(to_string(i == 0 ? Proposer::HeuristicRegime : Proposer::Scripted)),
                         st.directions, "scripted replay", coeffs};
    std::optional<TrialOutcome> clear;
    if (i == 0) {
      auto s = evaluator.run_trial(config, EvalMode::StaticOnly, coeffs, note);
      if (s.record.passed) {
        auto c = evaluator.run_trial(config, EvalMode::ClearOnly, coeffs, note);
        if (c.record.passed) clear = std::move(c);
        else rt.reasons = c.record.reasons;
      } else {
        rt.reasons = s.record.reasons;
      }
    } else if (best_clear) {
      AdmissionContext actx;
      actx.best_proxy_latency = best_clear->proxy_latency;
      actx.repair_mode = last_failed_clear.has_value();
      if (last_failed_clear) {
        actx.repair_margin_bits = last_failed_clear->final_margin_bits;
        actx.repair_precision_bits = last_failed_clear->precision_bits;
      }
      actx.skip_digests = encrypted;
      const std::vector<PatchCandidate> cands{{st.directions, config}};
      if (auto adm = patch_gate_admit(cands, evaluator, coeffs, actx, note)) {
        rt.repair = adm->repair;
        clear = std::move(adm->clear);
      } else {
        rt.reasons.push_back("admission: no latency or repair gain");
      }
    } else {
      rt.reasons.push_back("admission: no feasible baseline");
    }

    if (clear) {
      rt.admitted = true;
      auto light = evaluator.run_trial(config, EvalMode::FheLight, coeffs, note);
      ++out.encrypted_trials;
      encrypted.insert(rt.digest);
      rt.actual = light.record.passed ? Verdict::Accept : Verdict::Reject;
      rt.reasons = light.record.reasons;
      if (light.record.passed) {
        last_failed_clear.reset();
        if (!best_latency || *light.record.metrics.measured_latency_s < *best_latency) {
          best_latency = light.record.metrics.measured_latency_s;
          best_clear = clear->metrics.clear;
          out.best_alias = st.alias;
        }
      } else {
        last_failed_clear = clear->metrics.clear;
      }
      rt.encrypted = std::move(light.record);
    }
    out.trials.push_back(std::move(rt));
  }
  out.ledger = trace.records();
  return out;
}

json replay_to_json(const ReplayResult& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    json dirs = json::array();
    for (const auto& d : t.directions) dirs.push_back(direction_to_json(d));
    json j = {{"index", t.index},
              {"alias", t.alias},
              {"digest", t.digest},
              {"directions", std::move(dirs)},
              {"expected", to_string(t.expected)},
              {"actual", to_string(t.actual)},
              {"match", t.matches()},
              {"admitted", t.admitted},
              {"repair", t.repair},
              {"reasons", t.reasons}};
    if (t.encrypted) {
      const auto& m = t.encrypted->metrics;
      j["total_s"] = *m.measured_latency_s;
      j["mae"] = *m.measured_mae;
      j["precision_bits"] = *m.measured_precision_bits;
      j["layer_s"] = m.measured_layer_seconds;
    }
    trials.push_back(std::move(j));
  }
  json ledger = json::array();
  for (const auto& rec : r.ledger) ledger.push_back(record_to_json(rec));
  return {{"trials", std::move(trials)},
          {"encrypted_trials", r.encrypted_trials},
          {"all_match", r.all_match()},
          {"best", r.best_alias ? json(*r.best_alias) : json(nullptr)},
          {"ledger", std::move(ledger)}};
}

}  // namespace ckkstune
