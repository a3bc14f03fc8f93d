// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/trace.hpp"

#include <fstream>
#include <sstream>

#include "ckkstune/error.hpp"
#include "ckkstune/hashing.hpp"

namespace ckkstune {

using nlohmann::json;

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::StaticOnly: return "STATIC_ONLY";
    case EvalMode::ClearOnly: return "CLEAR_ONLY";
    case EvalMode::FheLight: return "FHE_LIGHT";
    case EvalMode::FheFull: return "FHE_FULL";
  }
  return "?";
}

EvalMode eval_mode_from_string(std::string_view name) {
  for (auto m : {EvalMode::StaticOnly, EvalMode::ClearOnly, EvalMode::FheLight, EvalMode::FheFull}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::Schema, "unknown eval mode '" + std::string(name) + "'");
}

namespace {

void put(json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

std::optional<double> get(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return j.at(key).get<double>();
}

json summary_to_json(const MetricsSummary& m) {
  json j = {{"depth_ok", m.depth_ok}, {"scale_ok", m.scale_ok}, {"sec_bits", m.sec_bits}, {"boot_count", m.boot_count}};
  put(j, "clear_mae", m.clear_mae);
  put(j, "clear_precision_bits", m.clear_precision_bits);
  put(j, "clear_max_layer_mae", m.clear_max_layer_mae);
  put(j, "clear_margin_bits", m.clear_margin_bits);
  put(j, "proxy_latency_s", m.proxy_latency_s);
  put(j, "measured_latency_s", m.measured_latency_s);
  put(j, "measured_mae", m.measured_mae);
  put(j, "measured_precision_bits", m.measured_precision_bits);
  if (!m.measured_layer_seconds.empty()) j["measured_layer_seconds"] = m.measured_layer_seconds;
  return j;
}

MetricsSummary summary_from_json(const json& j) {
  MetricsSummary m;
  m.depth_ok = j.at("depth_ok").get<bool>();
  m.scale_ok = j.at("scale_ok").get<bool>();
  m.sec_bits = j.at("sec_bits").get<int>();
  m.boot_count = j.at("boot_count").get<int>();
  m.clear_mae = get(j, "clear_mae");
  m.clear_precision_bits = get(j, "clear_precision_bits");
  m.clear_max_layer_mae = get(j, "clear_max_layer_mae");
  m.clear_margin_bits = get(j, "clear_margin_bits");
  m.proxy_latency_s = get(j, "proxy_latency_s");
  m.measured_latency_s = get(j, "measured_latency_s");
  m.measured_mae = get(j, "measured_mae");
  m.measured_precision_bits = get(j, "measured_precision_bits");
  if (j.contains("measured_layer_seconds")) {
    m.measured_layer_seconds = j.at("measured_layer_seconds").get<std::map<std::string, double>>();
  }
  return m;
}

}  // namespace

json record_to_json(const TrialRecord& r) {
  json dirs = json::array();
  for (const auto& d : r.directions) dirs.push_back(direction_to_json(d));
  json j = {{"ordinal", r.ordinal},
            {"phase", r.phase},
            {"arch_signature", r.arch_signature},
            {"config", config_to_json(r.config)},
            {"digest", r.digest},
            {"mode", to_string(r.mode)},
            {"metrics", summary_to_json(r.metrics)},
            {"passed", r.passed},
            {"reasons", r.reasons},
            {"directions", std::move(dirs)},
            {"rationale", r.rationale},
            {"timestamp", r.timestamp}};
  if (r.proposer) j["proposer"] = *r.proposer;
  if (r.coefficients) j["coefficients"] = coefficients_to_json(*r.coefficients);
  return j;
}

TrialRecord record_from_json(const json& j) {
  try {
    TrialRecord r;
    r.ordinal = j.at("ordinal").get<std::int64_t>();
    r.phase = j.at("phase").get<std::string>();
    r.arch_signature = j.at("arch_signature").get<std::string>();
    r.config = config_from_json(j.at("config"));
    r.digest = j.at("digest").get<std::string>();
    r.mode = eval_mode_from_string(j.at("mode").get<std::string>());
    r.metrics = summary_from_json(j.at("metrics"));
    r.passed = j.at("passed").get<bool>();
    r.reasons = j.at("reasons").get<std::vector<std::string>>();
    for (const auto& d : j.at("directions")) r.directions.push_back(direction_from_json(d));
    r.rationale = j.at("rationale").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    if (j.contains("proposer")) r.proposer = j.at("proposer").get<std::string>();
    if (j.contains("coefficients")) r.coefficients = coefficients_from_json(j.at("coefficients"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed trial record: ") + e.what());
  }
}

std::string checksum_line(const json& record) {
  json line = {{"record", record}, {"sha256", sha256_hex(record.dump())}};
  return line.dump();
}

json verify_line(std::string_view text) {
  json line;
  try {
    line = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::CorruptTrace, "trace line is not valid JSON");
  }
  if (!line.is_object() || !line.contains("record") || !line.contains("sha256") || !line["sha256"].is_string()) {
    throw Error(ErrorKind::CorruptTrace, "trace line lacks record/sha256");
  }
  if (sha256_hex(line["record"].dump()) != line["sha256"].get<std::string>()) {
    throw Error(ErrorKind::CorruptTrace, "trace record checksum mismatch");
  }
  return line["record"];
}

std::vector<json> read_checksummed(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot open trace file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (!text.empty() && text.back() != '\n') {
    throw Error(ErrorKind::CorruptTrace, "trace file " + path.string() + " is truncated");
  }
  std::vector<json> out;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line(text.data() + pos, nl - pos);
    ++lineno;
    if (!line.empty()) {
      try {
        out.push_back(verify_line(line));
      } catch (const Error& e) {
        throw Error(ErrorKind::CorruptTrace, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    pos = nl + 1;
  }
  return out;
}

TraceRepository::TraceRepository(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    for (const auto& j : read_checksummed(*path_)) {
      auto rec = record_from_json(j);
      if (rec.ordinal < next_ordinal_) {
        throw Error(ErrorKind::CorruptTrace, "trace ordinals are not increasing");
      }
      next_ordinal_ = rec.ordinal + 1;
      records_.push_back(std::move(rec));
    }
  }
}

TrialRecord TraceRepository::append(TrialRecord record) {
  std::lock_guard lock(mu_);
  record.ordinal = next_ordinal_;
  record.timestamp = next_ordinal_;
  if (path_) {
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot append to trace file " + path_->string());
    out << checksum_line(record_to_json(record)) << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::Config, "write to trace file " + path_->string() + " failed");
  }
  ++next_ordinal_;
  records_.push_back(record);
  return record;
}

std::vector<TrialRecord> TraceRepository::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<TrialRecord> TraceRepository::query_digest(std::string_view digest) const {
  std::lock_guard lock(mu_);
  std::vector<TrialRecord> out;
  for (const auto& r : records_) {
    if (r.digest == digest) out.push_back(r);
  }
  return out;
}

std::vector<TrialRecord> TraceRepository::query_signature(std::string_view signature) const {
  std::lock_guard lock(mu_);
  std::vector<TrialRecord> out;
  for (const auto& r : records_) {
    if (r.arch_signature == signature) out.push_back(r);
  }
  return out;
}

std::optional<TrialRecord> TraceRepository::best_exemplar(std::string_view signature) const {
  std::optional<TrialRecord> best;
  for (auto& r : query_signature(signature)) {
    if (!is_encrypted(r.mode) || !r.passed || !r.metrics.measured_latency_s) continue;
    if (!best || *r.metrics.measured_latency_s < *best->metrics.measured_latency_s) best = std::move(r);
  }
  return best;
}

std::size_t TraceRepository::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

}  // namespace ckkstune
