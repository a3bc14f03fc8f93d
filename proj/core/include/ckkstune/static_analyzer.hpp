// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/bootstrap_scheduler.hpp"
#include "ckkstune/config_space.hpp"
#include "ckkstune/model_ir.hpp"

namespace ckkstune {

int layer_depth_cost(const LayerSpec& layer, const LayerOverride* override_entry);
/// Per-layer depth costs, indexed like graph.layers.
std::vector<int> layer_depth_costs(const ModelGraph& graph, const FheConfig& config);

struct DepthReport {
  std::vector<std::string> layer_ids;
  std::vector<int> cost;
  std::vector<int> cumulative;  // levels consumed through each layer
  std::vector<int> remaining;   // levels left after each layer (and its bootstrap)
  bool depth_ok = true;
  std::optional<std::string> first_overflow_layer;
};

/// Walks the graph spending levels; a planned bootstrap resets the budget
/// to L - kBootstrapLevels. Never throws on overflow.
DepthReport check_depth(const ModelGraph& graph, const FheConfig& config, const BootstrapPlan* plan = nullptr);

/// Largest total modulus (bits) with 128-bit classical security for a
/// ternary secret at sigma 3.2. Throws UnsupportedRing outside [10, 17].
int max_log_q_128(int log_n);
int estimate_security(int log_n, int log_q_total, double sigma = 3.2);

struct StaticReport {
  bool depth_ok = false;
  int sec_bits = 0;
  bool security_ok = false;
  bool scale_ok = false;
  std::vector<std::string> reasons;
  DepthReport depth;
  std::optional<BootstrapPlan> plan;

  bool passed() const { return reasons.empty(); }
};

/// Scale, depth (under a scheduled plan) and security checks against the
/// config's own security target.
StaticReport analyze(const ModelGraph& graph, const FheConfig& config);

nlohmann::json static_report_to_json(const StaticReport& report);

}  // namespace ckkstune
