// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/controller.hpp"
#include "ckkstune/evaluation.hpp"
#include "ckkstune/trace.hpp"

namespace ckkstune {

struct RunConfig {
  GateConfig gates;
  int budget = 6;  // FHE_LIGHT + FHE_FULL trials, Phases B and C together
  int phase_a_keep = 2;
  int max_c_iterations = 8;
  BackendBinding backend;
  std::optional<std::string> policy_endpoint;
  std::chrono::milliseconds policy_timeout = kDefaultPolicyTimeout;
  std::uint64_t seed = 0;
  BottleneckWeights weights;
  int top_k = 2;
  bool final_full = true;
  int calibration_batch = static_cast<int>(kDefaultCalibrationBatch);
  CostCoefficients seed_coefficients;
};

/// Throws Config when the budget cannot cover Phase B or a count is negative.
void validate_run_config(const RunConfig& run);
/// Relative recorded-trace paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& run);

enum class Termination {
  BudgetExhausted,
  Converged,
  NoFeasibleRegime,
  NoAdmissibleCandidate,
  AllSurvivorsFailedEncrypted,
  IterationLimit,
};
std::string_view to_string(Termination t);
/// True for outcomes without a feasible best configuration.
bool is_failure(Termination t);

struct RunReport {
  std::string model_name;
  int budget = 0;
  int encrypted_trials = 0;
  Termination termination = Termination::NoFeasibleRegime;
  std::optional<TrialRecord> baseline;  // Phase B pick
  std::optional<TrialRecord> best;      // highest-fidelity passing record of the best config
  std::vector<double> accepted_best_latencies;
  std::vector<Observation> observations;
  std::optional<Calibration> calibration;
  std::vector<TrialRecord> ledger;
  std::vector<std::string> notes;
};

nlohmann::json report_to_json(const RunReport& report);

struct PhaseBResult {
  TrialRecord base;
  Calibration calibration;
  std::vector<Observation> observations;
};

/// Drives Phases A, B and C for one model under one RunConfig. Owns the
/// encrypted budget; all trials go through one Evaluator and one trace.
class Orchestrator {
 public:
  /// `trace` and `policy` may be null (in-memory trace, heuristic policy).
  Orchestrator(const ModelGraph& graph, RunConfig run, EncryptedBackend* backend, TraceRepository* trace = nullptr,
               Policy* policy = nullptr);

  /// Throws NoFeasibleRegime.
  std::vector<FheConfig> phase_a();
  /// Throws AllSurvivorsFailedEncrypted.
  PhaseBResult phase_b(const std::vector<FheConfig>& survivors);
  void phase_c(const PhaseBResult& base);
  RunReport optimize();

  int budget_remaining() const { return budget_remaining_; }
  const RunReport& report() const { return report_; }
  const Evaluator& evaluator() const { return evaluator_; }

 private:
  TrialOutcome encrypted_trial(const FheConfig& config, EvalMode mode, const CostCoefficients& coeffs,
                               const TrialAnnotation& note);
  void finalize();

  const ModelGraph& graph_;
  RunConfig run_;
  std::unique_ptr<TraceRepository> own_trace_;
  TraceRepository* trace_;
  HeuristicPolicy heuristic_;
  Policy* policy_;
  Evaluator evaluator_;
  std::size_t ledger_start_ = 0;
  int budget_remaining_ = 0;
  RunReport report_;
  std::optional<CostCoefficients> frozen_;
};

}  // namespace ckkstune
