// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/clear_simulator.hpp"
#include "ckkstune/static_analyzer.hpp"
#include "ckkstune/trace.hpp"

namespace ckkstune {

struct Metrics {
  EvalMode mode = EvalMode::StaticOnly;
  StaticReport static_report;
  std::optional<ClearRunReport> clear;
  std::optional<double> measured_latency_s;
  std::optional<std::map<std::string, double>> measured_layer_seconds;
  std::optional<double> measured_mae;
  std::optional<double> measured_precision_bits;
};

MetricsSummary summarize(const Metrics& m);

/// What an encrypted backend reports for one run.
struct Measurement {
  double latency_s = 0;
  std::map<std::string, double> layer_seconds;
  double mae = 0;
  double precision_bits = 0;
};

struct BackendRequest {
  const ModelGraph& graph;
  const FheConfig& config;
  const std::string& digest;
  const ClearRunReport& clear;
  EvalMode mode;
};

class EncryptedBackend {
 public:
  virtual ~EncryptedBackend() = default;
  virtual std::string name() const = 0;
  /// Throws BackendUnavailable or RecordedMiss.
  virtual Measurement measure(const BackendRequest& request) = 0;
};

inline constexpr double kDefaultWorkloadRatio = 10.0;

struct MockBinding {
  CostCoefficients hidden{2e-3, 5e-3, 0.8, 2e-4};
  double perturbation = 0;
  std::uint64_t seed = 0;
  double workload_ratio = kDefaultWorkloadRatio;
};

/// Deterministic multiplicative perturbation in [-amplitude, amplitude].
double mock_epsilon(std::string_view digest, std::string_view layer_id, const MockBinding& binding);

/// Per-layer seconds of the hidden linear model, perturbed. Layers without
/// primitive work are omitted.
std::map<std::string, double> mock_latency(std::string_view digest, std::span<const LayerProfile> profiles,
                                           const MockBinding& binding);

/// Synthetic ground truth: latency from hidden coefficients, numerics passed
/// through from the cleartext simulation.
class MockBackend final : public EncryptedBackend {
 public:
  explicit MockBackend(MockBinding binding) : binding_(binding) {}
  std::string name() const override { return "mock"; }
  Measurement measure(const BackendRequest& request) override;
  const MockBinding& binding() const { return binding_; }

 private:
  MockBinding binding_;
};

struct RecordedEntry {
  std::string key;  // config digest or alias
  EvalMode mode = EvalMode::FheLight;
  double total_s = 0;
  std::map<std::string, double> layer_s;
  double mae = 0;
  double precision_bits = 0;
};

RecordedEntry recorded_entry_from_json(const nlohmann::json& j);
nlohmann::json recorded_entry_to_json(const RecordedEntry& e);

/// Replays measurements from a recorded trace keyed by digest or alias.
class RecordedBackend final : public EncryptedBackend {
 public:
  RecordedBackend(std::vector<RecordedEntry> entries, double workload_ratio = kDefaultWorkloadRatio);
  /// Loads a checksummed trace file; throws CorruptTrace.
  static RecordedBackend load(const std::filesystem::path& path, double workload_ratio = kDefaultWorkloadRatio);

  /// Lets entries recorded under `alias` answer for `digest`.
  void bind_alias(const std::string& digest, const std::string& alias);
  std::string name() const override { return "recorded"; }
  Measurement measure(const BackendRequest& request) override;
  const std::vector<RecordedEntry>& entries() const { return entries_; }

 private:
  const RecordedEntry* lookup(const std::string& key, EvalMode mode) const;

  std::vector<RecordedEntry> entries_;
  std::map<std::string, std::string> alias_of_;
  double workload_ratio_;
};

/// Adapter for an external encrypted runtime (spawned process reporting
/// per-layer timings). No runtime ships with this build, so every call
/// raises BackendUnavailable.
class ExternalProcessBackend final : public EncryptedBackend {
 public:
  explicit ExternalProcessBackend(std::string command) : command_(std::move(command)) {}
  std::string name() const override { return "external"; }
  Measurement measure(const BackendRequest& request) override;

 private:
  std::string command_;
};

enum class BackendKind { Mock, Recorded };

struct BackendBinding {
  BackendKind kind = BackendKind::Mock;
  MockBinding mock;
  std::filesystem::path recorded_path;
  std::map<std::string, std::string> aliases;  // digest -> alias
};

BackendBinding backend_binding_from_json(const nlohmann::json& j);
nlohmann::json backend_binding_to_json(const BackendBinding& b);
std::unique_ptr<EncryptedBackend> make_backend(const BackendBinding& binding);

/// Origin of a trial: phase, proposer, directions and rationale.
struct TrialAnnotation {
  std::string phase;
  std::optional<std::string> proposer;
  std::vector<Direction> directions;
  std::string rationale;
  std::optional<CostCoefficients> coefficients;
};

struct TrialOutcome {
  Metrics metrics;
  TrialRecord record;
};

/// The run_trial oracle bound to one model, gate set, backend and trace.
/// Static and clear evaluations may run concurrently; encrypted runs are
/// serialized through a single slot.
class Evaluator {
 public:
  Evaluator(const ModelGraph& graph, GateConfig gates, EncryptedBackend* backend, TraceRepository* trace,
            Tensor batch);

  /// Computes metrics without recording anything.
  Metrics evaluate(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs) const;
  GateVerdict verdict(const Metrics& metrics) const;
  /// Records an evaluated trial; appends exactly one record when a trace
  /// is attached.
  TrialOutcome commit(const FheConfig& config, Metrics metrics, const TrialAnnotation& note) const;
  TrialOutcome run_trial(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs,
                         const TrialAnnotation& note) const;

  const ModelGraph& graph() const { return graph_; }
  const GateConfig& gates() const { return gates_; }
  const std::string& signature() const { return signature_; }

 private:
  const ModelGraph& graph_;
  GateConfig gates_;
  EncryptedBackend* backend_;
  TraceRepository* trace_;
  Tensor batch_;
  std::string signature_;
  mutable std::mutex encrypted_slot_;
};

}  // namespace ckkstune
