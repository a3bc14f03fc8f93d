// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/model_ir.hpp"

namespace ckkstune {

enum class Embedding { Square, Hybrid, Diagonal };

std::string_view to_string(Embedding e);
Embedding embedding_from_string(std::string_view name);

inline constexpr int kMinLogN = 10;
inline constexpr int kMaxLogN = 17;
inline constexpr int kMinPrimeBits = 20;
inline constexpr int kMaxPrimeBits = 60;
inline constexpr int kSpecialPrimeBits = 60;
/// Bits moved by RelaxScaleOneStep / TightenScaleOneStep.
inline constexpr int kScaleStep = 2;
/// Degrees LowerActivationDegree walks down.
inline constexpr std::array<int, 4> kActivationLadder = {31, 15, 7, 3};

/// Scheme-level CKKS parameters plus global backend options.
struct GlobalConfig {
  int log_n = 15;
  std::vector<int> modulus_chain;  // bits per prime; head is the special prime
  int log_scale = 40;
  double sigma = 3.2;
  Embedding default_embedding = Embedding::Square;
  int bootstrap_interval = 1;
  int security_target_bits = 128;

  int log_q_total() const;
  /// Levels available to a fresh ciphertext; one prime stays reserved.
  int usable_levels() const { return static_cast<int>(modulus_chain.size()) - 1; }
  int slots() const { return 1 << (log_n - 1); }

  bool operator==(const GlobalConfig&) const = default;
};

struct LayerOverride {
  std::optional<Embedding> embedding_method;
  std::optional<int> bsgs_gap;
  std::optional<int> max_parallel_blocks;
  std::optional<int> act_degree;

  bool empty() const {
    return !embedding_method && !bsgs_gap && !max_parallel_blocks && !act_degree;
  }
  bool operator==(const LayerOverride&) const = default;
};

struct FheConfig {
  GlobalConfig global;
  std::map<std::string, LayerOverride> overrides;

  const LayerOverride* override_for(std::string_view layer_id) const;

  bool operator==(const FheConfig&) const = default;
};

// Standard layout: special prime followed by `levels` primes of log_scale bits.
GlobalConfig make_global(int log_n, int levels, int log_scale, Embedding embedding,
                         int security_target_bits = 128);

enum class DirectionKind {
  ShortenModulusTail,
  ExtendModulusTail,
  RelaxScaleOneStep,
  TightenScaleOneStep,
  IncreaseBootstrapInterval,
  DecreaseBootstrapInterval,
  SwitchPackingSquareToHybrid,
  SwitchPackingHybridToSquare,
  AdjustBsgsGapUp,
  AdjustBsgsGapDown,
  LowerActivationDegree,
  CapParallelBlocks,
};

inline constexpr std::array<DirectionKind, 12> kAllDirectionKinds = {
    DirectionKind::ShortenModulusTail,         DirectionKind::ExtendModulusTail,
    DirectionKind::RelaxScaleOneStep,          DirectionKind::TightenScaleOneStep,
    DirectionKind::IncreaseBootstrapInterval,  DirectionKind::DecreaseBootstrapInterval,
    DirectionKind::SwitchPackingSquareToHybrid, DirectionKind::SwitchPackingHybridToSquare,
    DirectionKind::AdjustBsgsGapUp,            DirectionKind::AdjustBsgsGapDown,
    DirectionKind::LowerActivationDegree,      DirectionKind::CapParallelBlocks,
};

std::string_view to_string(DirectionKind kind);
DirectionKind direction_kind_from_string(std::string_view name);
bool is_layer_local(DirectionKind kind);
/// True for edits that can raise a layer's multiplicative depth. None of the
/// current layer-local kinds do; the depth mask still guards the hook.
bool increases_depth(DirectionKind kind);

struct Direction {
  DirectionKind kind = DirectionKind::ShortenModulusTail;
  std::optional<std::string> target_layer;
  std::optional<int> arg;

  auto operator<=>(const Direction&) const = default;
};

std::string describe(const Direction& d);
nlohmann::json direction_to_json(const Direction& d);
Direction direction_from_json(const nlohmann::json& j);

enum class Scope { GlobalAgent, LayerAgent };
std::string_view to_string(Scope scope);

using LayerSet = std::set<std::string, std::less<>>;

// --- packing parameters derived from the graph --------------------------

Embedding effective_embedding(const FheConfig& config, const LayerSpec& layer);
/// Diagonals a packed layer is decomposed into: padded fan-in for Linear,
/// k*k for Conv2d, zero otherwise.
std::int64_t diagonal_count(const LayerSpec& layer);
int default_bsgs_gap(const LayerSpec& layer);
int effective_bsgs_gap(const FheConfig& config, const LayerSpec& layer);
int effective_act_degree(const FheConfig& config, const LayerSpec& layer);
/// The ActPoly layer a LowerActivationDegree edit on `layer_id` lands on.
const LayerSpec* activation_target(const ModelGraph& graph, std::string_view layer_id);

// --- validation and patching ---------------------------------------------

/// Structural invariants of the global block (ranges, chain length).
void validate_global(const GlobalConfig& global);
/// Full validation against a graph: global invariants plus every override
/// referring to an existing layer with fields legal for its kind.
void validate_config(const ModelGraph& graph, const FheConfig& config);
/// log_scale fits under every interior chain prime.
bool scale_consistent(const GlobalConfig& global);

/// Returns a new config with `dir` applied. Throws ScopeViolation,
/// MaskViolation or InvariantViolation; the input is never modified.
FheConfig apply_direction(const ModelGraph& graph, const FheConfig& config, const Direction& dir,
                          Scope scope, const LayerSet& depth_mask);

/// Every returned direction is accepted by apply_direction with the same
/// arguments. LayerAgent scope only yields layer-local kinds on `bottlenecks`.
std::vector<Direction> enumerate_directions(const ModelGraph& graph, const FheConfig& config, Scope scope,
                                            std::span<const std::string> bottlenecks,
                                            const LayerSet& depth_mask);

nlohmann::json config_to_json(const FheConfig& config);
FheConfig config_from_json(const nlohmann::json& doc);
FheConfig parse_config(std::string_view text);

/// SHA-256 over the canonical JSON serialization.
std::string config_digest(const FheConfig& config);

}  // namespace ckkstune
