// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/evaluation.hpp"

#include "ckkstune/error.hpp"
#include "ckkstune/hashing.hpp"

namespace ckkstune {

using nlohmann::json;

MetricsSummary summarize(const Metrics& m) {
  MetricsSummary s;
  s.depth_ok = m.static_report.depth_ok;
  s.scale_ok = m.static_report.scale_ok;
  s.sec_bits = m.static_report.sec_bits;
  s.boot_count = m.static_report.plan ? m.static_report.plan->boot_count : 0;
  if (m.clear) {
    s.clear_mae = m.clear->global_mae;
    s.clear_precision_bits = m.clear->precision_bits;
    s.clear_max_layer_mae = m.clear->max_layer_mae;
    s.clear_margin_bits = m.clear->final_margin_bits;
    s.proxy_latency_s = m.clear->proxy_latency;
  }
  s.measured_latency_s = m.measured_latency_s;
  s.measured_mae = m.measured_mae;
  s.measured_precision_bits = m.measured_precision_bits;
  if (m.measured_layer_seconds) s.measured_layer_seconds = *m.measured_layer_seconds;
  return s;
}

double mock_epsilon(std::string_view digest, std::string_view layer_id, const MockBinding& binding) {
  if (binding.perturbation == 0) return 0;
  std::string key(digest);
  key += '/';
  key += layer_id;
  const double u = static_cast<double>(stable_hash64(key, binding.seed) >> 11) * 0x1.0p-53;
  return binding.perturbation * (2.0 * u - 1.0);
}

std::map<std::string, double> mock_latency(std::string_view digest, std::span<const LayerProfile> profiles,
                                           const MockBinding& binding) {
  std::map<std::string, double> out;
  for (const auto& p : profiles) {
    if (p.counts.zero()) continue;
    out[p.id] = layer_cost(p.counts, binding.hidden) * (1.0 + mock_epsilon(digest, p.id, binding));
  }
  return out;
}

Measurement MockBackend::measure(const BackendRequest& req) {
  Measurement m;
  const double scale = req.mode == EvalMode::FheFull ? binding_.workload_ratio : 1.0;
  for (auto& [id, sec] : mock_latency(req.digest, req.clear.profiles, binding_)) {
    m.layer_seconds[id] = sec * scale;
    m.latency_s += sec * scale;
  }
  m.mae = req.clear.global_mae;
  m.precision_bits = req.clear.precision_bits;
  return m;
}

RecordedEntry recorded_entry_from_json(const json& j) {
  try {
    RecordedEntry e;
    e.key = j.at("key").get<std::string>();
    e.mode = eval_mode_from_string(j.at("mode").get<std::string>());
    if (!is_encrypted(e.mode)) throw Error(ErrorKind::Schema, "recorded entries must be FHE_LIGHT or FHE_FULL");
    e.total_s = j.at("total_s").get<double>();
    e.layer_s = j.at("layer_s").get<std::map<std::string, double>>();
    e.mae = j.at("mae").get<double>();
    e.precision_bits = j.at("precision_bits").get<double>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::Schema, std::string("malformed recorded entry: ") + ex.what());
  }
}

json recorded_entry_to_json(const RecordedEntry& e) {
  return {{"key", e.key},     {"mode", to_string(e.mode)}, {"total_s", e.total_s},
          {"layer_s", e.layer_s}, {"mae", e.mae},          {"precision_bits", e.precision_bits}};
}

RecordedBackend::RecordedBackend(std::vector<RecordedEntry> entries, double workload_ratio)
    : entries_(std::move(entries)), workload_ratio_(workload_ratio) {}

RecordedBackend RecordedBackend::load(const std::filesystem::path& path, double workload_ratio) {
  std::vector<RecordedEntry> entries;
  for (const auto& j : read_checksummed(path)) entries.push_back(recorded_entry_from_json(j));
  return RecordedBackend(std::move(entries), workload_ratio);
}

void RecordedBackend::bind_alias(const std::string& digest, const std::string& alias) { alias_of_[digest] = alias; }

const RecordedEntry* RecordedBackend::lookup(const std::string& key, EvalMode mode) const {
  for (const auto& e : entries_) {
    if (e.key == key && e.mode == mode) return &e;
  }
  return nullptr;
}

Measurement RecordedBackend::measure(const BackendRequest& req) {
  std::vector<std::string> keys{req.digest};
  if (auto it = alias_of_.find(req.digest); it != alias_of_.end()) keys.push_back(it->second);
  for (const auto& key : keys) {
    double scale = 1.0;
    const RecordedEntry* e = lookup(key, req.mode);
    if (!e && req.mode == EvalMode::FheFull) {
      e = lookup(key, EvalMode::FheLight);
      scale = workload_ratio_;
    }
    if (!e) continue;
    Measurement m;
    m.latency_s = e->total_s * scale;
    for (const auto& [id, s] : e->layer_s) m.layer_seconds[id] = s * scale;
    m.mae = e->mae;
    m.precision_bits = e->precision_bits;
    return m;
  }
  throw Error(ErrorKind::RecordedMiss, "no recorded " + std::string(to_string(req.mode)) + " entry for config " +
                                           req.digest.substr(0, 12));
}

Measurement ExternalProcessBackend::measure(const BackendRequest&) {
  throw Error(ErrorKind::BackendUnavailable, "external encrypted runtime '" + command_ + "' is not available");
}

BackendBinding backend_binding_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorKind::Schema, "backend needs a string 'kind'");
  }
  BackendBinding b;
  const auto kind = j["kind"].get<std::string>();
  try {
    if (kind == "mock") {
      b.kind = BackendKind::Mock;
      for (const auto& [key, v] : j.items()) {
        if (key == "kind") continue;
        if (key == "hidden") b.mock.hidden = coefficients_from_json(v);
        else if (key == "perturbation") b.mock.perturbation = v.get<double>();
        else if (key == "seed") b.mock.seed = v.get<std::uint64_t>();
        else if (key == "workload_ratio") b.mock.workload_ratio = v.get<double>();
        else throw Error(ErrorKind::Schema, "unexpected mock backend field '" + key + "'");
      }
      if (b.mock.perturbation < 0 || b.mock.perturbation >= 1) {
        throw Error(ErrorKind::Schema, "mock perturbation must be in [0, 1)");
      }
      if (!(b.mock.workload_ratio > 0)) throw Error(ErrorKind::Schema, "workload_ratio must be positive");
    } else if (kind == "recorded") {
      b.kind = BackendKind::Recorded;
      for (const auto& [key, v] : j.items()) {
        if (key == "kind") continue;
        if (key == "trace") b.recorded_path = v.get<std::string>();
        else if (key == "aliases") b.aliases = v.get<std::map<std::string, std::string>>();
        else if (key == "workload_ratio") b.mock.workload_ratio = v.get<double>();
        else throw Error(ErrorKind::Schema, "unexpected recorded backend field '" + key + "'");
      }
      if (b.recorded_path.empty()) throw Error(ErrorKind::Schema, "recorded backend needs 'trace'");
    } else {
      throw Error(ErrorKind::Schema, "unknown backend kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed backend binding: ") + e.what());
  }
  return b;
}

json backend_binding_to_json(const BackendBinding& b) {
  if (b.kind == BackendKind::Mock) {
    return {{"kind", "mock"},
            {"hidden", coefficients_to_json(b.mock.hidden)},
            {"perturbation", b.mock.perturbation},
            {"seed", b.mock.seed},
            {"workload_ratio", b.mock.workload_ratio}};
  }
  return {{"kind", "recorded"},
          {"trace", b.recorded_path.string()},
          {"aliases", b.aliases},
          {"workload_ratio", b.mock.workload_ratio}};
}

std::unique_ptr<EncryptedBackend> make_backend(const BackendBinding& binding) {
  if (binding.kind == BackendKind::Mock) return std::make_unique<MockBackend>(binding.mock);
  auto rec = std::make_unique<RecordedBackend>(RecordedBackend::load(binding.recorded_path, binding.mock.workload_ratio));
  for (const auto& [digest, alias] : binding.aliases) rec->bind_alias(digest, alias);
  return rec;
}

Evaluator::Evaluator(const ModelGraph& graph, GateConfig gates, EncryptedBackend* backend, TraceRepository* trace,
                     Tensor batch)
    : graph_(graph),
      gates_(gates),
      backend_(backend),
      trace_(trace),
      batch_(std::move(batch)),
      signature_(architecture_signature(graph)) {}

Metrics Evaluator::evaluate(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs) const {
  Metrics m;
  m.mode = mode;
  m.static_report = analyze(graph_, config);
  if (mode == EvalMode::StaticOnly) return m;
  const auto* plan = m.static_report.plan ? &*m.static_report.plan : nullptr;
  m.clear = simulate(graph_, config, plan, batch_, coeffs);
  if (!is_encrypted(mode)) return m;
  if (!backend_) throw Error(ErrorKind::BackendUnavailable, "no encrypted backend configured");
  const std::string digest = config_digest(config);
  Measurement meas;
  {
    std::lock_guard slot(encrypted_slot_);
    meas = backend_->measure(BackendRequest{graph_, config, digest, *m.clear, mode});
  }
  m.measured_latency_s = meas.latency_s;
  m.measured_layer_seconds = std::move(meas.layer_seconds);
  m.measured_mae = meas.mae;
  m.measured_precision_bits = meas.precision_bits;
  return m;
}

GateVerdict Evaluator::verdict(const Metrics& m) const {
  if (m.mode == EvalMode::StaticOnly || !m.clear) return check_static_gates(m.static_report, gates_);
  if (!is_encrypted(m.mode)) return check_gates(m.static_report, *m.clear, gates_);
  NumericOutcome o{*m.measured_mae, *m.measured_precision_bits, std::max(m.clear->max_layer_mae, *m.measured_mae),
                   m.measured_latency_s};
  return check_gates(m.static_report, o, gates_);
}

TrialOutcome Evaluator::commit(const FheConfig& config, Metrics metrics, const TrialAnnotation& note) const {
  const auto v = verdict(metrics);
  TrialRecord r;
  r.phase = note.phase;
  r.arch_signature = signature_;
  r.config = config;
  r.digest = config_digest(config);
  r.mode = metrics.mode;
  r.metrics = summarize(metrics);
  r.passed = v.passed;
  r.reasons = v.reasons;
  r.proposer = note.proposer;
  r.directions = note.directions;
  r.rationale = note.rationale;
  r.coefficients = note.coefficients;
  if (trace_) r = trace_->append(std::move(r));
  return TrialOutcome{std::move(metrics), std::move(r)};
}

TrialOutcome Evaluator::run_trial(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs,
                                  const TrialAnnotation& note) const {
  return commit(config, evaluate(config, mode, coeffs), note);
}

}  // namespace ckkstune
