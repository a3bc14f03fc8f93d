// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/config_space.hpp"
#include "ckkstune/cost_model.hpp"
#include "ckkstune/evaluation.hpp"
#include "ckkstune/model_ir.hpp"

namespace ckkstune {

enum class Phase { A, B, C };
std::string_view to_string(Phase p);

enum class Proposer { HeuristicInit, HeuristicRegime, HeuristicGlobal, HeuristicLayer, RemoteLLM, Fallback, Scripted };
std::string_view to_string(Proposer p);

// --- init and regime -------------------------------------------------------

struct InitTemplate {
  std::string_view name;
  int log_scale;
  Embedding embedding;
};

inline constexpr std::array<InitTemplate, 2> kInitTemplates = {{
    {"high-precision", 40, Embedding::Diagonal},
    {"aggressive-packing", 30, Embedding::Hybrid},
}};
inline constexpr std::array<int, 3> kInitLogN = {14, 15, 16};
inline constexpr int kMinInitChain = 3;

struct UserConstraints {
  int security_target_bits = 128;
};

/// Exemplars first, then the template grid; duplicates dropped.
std::vector<FheConfig> init_propose(const ModelSummary& summary, std::span<const FheConfig> exemplars,
                                    const UserConstraints& constraints);

/// Gate-passing CLEAR_ONLY trials ranked by proxy latency, then precision.
/// Throws NoFeasibleRegime when none pass.
std::vector<FheConfig> regime_select(std::span<const TrialRecord> trials, std::size_t keep);

// --- refinement heuristics -------------------------------------------------

/// Cheap structural forecast of a config (no numerics).
struct StructuralEstimate {
  bool feasible = false;  // depth and scale
  int sec_bits = 0;
  double proxy_latency = 0;
  double final_margin_bits = 0;
  int min_slack = 0;
  int boot_count = 0;
  LayerSet depth_mask;
};

StructuralEstimate estimate_structure(const ModelGraph& graph, const FheConfig& config,
                                      const CostCoefficients& coeffs);

struct OfferedDirection {
  std::string id;
  Direction direction;
  double predicted_delta = 0;        // proxy seconds, negative is faster
  double predicted_margin_gain = 0;  // final noise margin bits
};

/// What the refinement agents know about the incumbent.
struct SearchState {
  const ModelGraph* graph = nullptr;
  FheConfig config;
  StructuralEstimate estimate;
  std::vector<LayerProfile> profiles;  // runtime shares from measurement when available
  double precision_bits = 0;
  GateConfig gates;
  CostCoefficients coeffs;
  BottleneckWeights weights;
  std::size_t top_k = 2;
  bool repair_mode = false;
};

struct GlobalProposal {
  std::vector<OfferedDirection> directions;
  std::vector<std::string> bottlenecks;
};

OfferedDirection price_direction(const SearchState& state, const Direction& dir, Scope scope);

GlobalProposal global_tradeoff_propose(const SearchState& state);
std::vector<OfferedDirection> layerwise_propose(const SearchState& state, std::span<const std::string> bottlenecks);

// --- policies --------------------------------------------------------------

struct TrialBrief {
  std::int64_t ordinal = 0;
  std::string mode;
  std::string digest;
  bool passed = false;
  std::optional<double> latency_s;
  std::vector<std::string> directions;
};

inline constexpr std::size_t kMaxHistory = 10;
inline constexpr std::size_t kMaxBottleneckProfiles = 2;
inline constexpr std::size_t kMaxRationale = 2000;

struct PolicyContext {
  Phase phase = Phase::C;
  ModelSummary summary;
  std::string best_digest;
  std::optional<double> best_latency_s;
  int budget_remaining = 0;
  std::vector<OfferedDirection> offered;
  std::vector<LayerProfile> bottlenecks;
  std::vector<TrialBrief> history;
};

TrialBrief brief(const TrialRecord& r);
/// The request document sent to a remote policy.
nlohmann::json context_to_json(const PolicyContext& ctx);

struct PolicyDecision {
  std::vector<std::string> chosen;
  std::string rationale;
  Proposer proposer = Proposer::HeuristicLayer;
};

/// Parses and validates a policy response against the offered ids.
/// Throws Schema on any violation.
PolicyDecision validate_decision(const nlohmann::json& response, const PolicyContext& ctx);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyDecision decide(const PolicyContext& ctx) = 0;
};

/// Takes every offered direction in the order the heuristics ranked them.
class HeuristicPolicy final : public Policy {
 public:
  PolicyDecision decide(const PolicyContext& ctx) override;
};

/// Replays a fixed sequence of direction sets, one per decision.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::vector<Direction>> script) : script_(std::move(script)) {}
  PolicyDecision decide(const PolicyContext& ctx) override;

 private:
  std::vector<std::vector<Direction>> script_;
  std::size_t next_ = 0;
};

inline constexpr auto kDefaultPolicyTimeout = std::chrono::milliseconds(5000);

/// HTTP JSON policy; any transport or schema failure falls back to the
/// heuristic decision with proposer Fallback.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(std::string endpoint, std::string token,
               std::chrono::milliseconds timeout = kDefaultPolicyTimeout);
  PolicyDecision decide(const PolicyContext& ctx) override;
  const std::string& last_error() const { return last_error_; }

 private:
  std::string endpoint_;
  std::string token_;
  std::chrono::milliseconds timeout_;
  HeuristicPolicy fallback_;
  std::string last_error_;
};

// --- admission -------------------------------------------------------------

struct PatchCandidate {
  std::vector<Direction> directions;
  FheConfig config;
};

/// Builds single-direction patches plus one composite per layer that has
/// several chosen directions. Patches that fail to apply are dropped.
std::vector<PatchCandidate> build_candidates(const ModelGraph& graph, const FheConfig& base,
                                             const std::vector<Direction>& chosen, const LayerSet& mask);

struct AdmissionContext {
  double best_proxy_latency = 0;
  bool repair_mode = false;
  double repair_margin_bits = 0;     // CLEAR margin of the failed latest config
  double repair_precision_bits = 0;  // CLEAR precision of the failed latest config
  LayerSet skip_digests;             // already evaluated encrypted
};

struct Admission {
  PatchCandidate candidate;
  TrialOutcome clear;
  double latency_gain = 0;
  bool repair = false;
};

/// Gates every candidate at STATIC_ONLY then CLEAR_ONLY (each recorded as a
/// trial) and admits at most one.
std::optional<Admission> patch_gate_admit(std::span<const PatchCandidate> candidates, const Evaluator& evaluator,
                                          const CostCoefficients& coeffs, const AdmissionContext& ctx,
                                          const TrialAnnotation& note);

}  // namespace ckkstune
