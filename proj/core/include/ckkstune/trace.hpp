// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/config_space.hpp"
#include "ckkstune/cost_model.hpp"

namespace ckkstune {

enum class EvalMode { StaticOnly, ClearOnly, FheLight, FheFull };

std::string_view to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view name);
inline bool is_encrypted(EvalMode mode) { return mode == EvalMode::FheLight || mode == EvalMode::FheFull; }

/// The persisted view of a trial's metrics.
struct MetricsSummary {
  bool depth_ok = false;
  bool scale_ok = false;
  int sec_bits = 0;
  int boot_count = 0;
  std::optional<double> clear_mae;
  std::optional<double> clear_precision_bits;
  std::optional<double> clear_max_layer_mae;
  std::optional<double> clear_margin_bits;
  std::optional<double> proxy_latency_s;
  std::optional<double> measured_latency_s;
  std::optional<double> measured_mae;
  std::optional<double> measured_precision_bits;
  std::map<std::string, double> measured_layer_seconds;

  bool operator==(const MetricsSummary&) const = default;
};

struct TrialRecord {
  std::int64_t ordinal = 0;
  std::string phase;
  std::string arch_signature;
  FheConfig config;
  std::string digest;
  EvalMode mode = EvalMode::StaticOnly;
  MetricsSummary metrics;
  bool passed = false;
  std::vector<std::string> reasons;
  std::optional<std::string> proposer;
  std::vector<Direction> directions;
  std::string rationale;
  std::optional<CostCoefficients> coefficients;
  std::int64_t timestamp = 0;  // logical tick

  bool operator==(const TrialRecord&) const = default;
};

nlohmann::json record_to_json(const TrialRecord& r);
TrialRecord record_from_json(const nlohmann::json& j);

// --- checksummed newline-delimited JSON ---------------------------------

/// {"record": ..., "sha256": hex(record.dump())} on one line, no newline.
std::string checksum_line(const nlohmann::json& record);
/// Throws CorruptTrace on malformed lines or checksum mismatch.
nlohmann::json verify_line(std::string_view line);
/// Every record of a checksummed file; a missing trailing newline is
/// treated as truncation.
std::vector<nlohmann::json> read_checksummed(const std::filesystem::path& path);

/// Append-only, ordinal-monotone store of trial records, optionally
/// mirrored to a checksummed file. Thread-safe.
class TraceRepository {
 public:
  TraceRepository() = default;
  /// Loads existing records from `path` (if the file exists) and appends
  /// new ones to it.
  explicit TraceRepository(std::filesystem::path path);

  /// Assigns ordinal and timestamp, persists, and returns the stored record.
  TrialRecord append(TrialRecord record);

  std::vector<TrialRecord> records() const;
  std::vector<TrialRecord> query_digest(std::string_view digest) const;
  std::vector<TrialRecord> query_signature(std::string_view signature) const;
  /// Fastest gate-passing encrypted record for an architecture.
  std::optional<TrialRecord> best_exemplar(std::string_view signature) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<TrialRecord> records_;
  std::optional<std::filesystem::path> path_;
  std::int64_t next_ordinal_ = 0;
};

}  // namespace ckkstune
