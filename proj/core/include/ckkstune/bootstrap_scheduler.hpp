// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/config_space.hpp"
#include "ckkstune/model_ir.hpp"

namespace ckkstune {

/// Levels a bootstrap consumes internally; a refreshed ciphertext has L - 3.
inline constexpr int kBootstrapLevels = 3;
/// Segments with less residual slack than this are flagged in the mask.
inline constexpr int kMaskSlackLevels = 1;

/// Layers [begin, end) evaluated between two bootstraps.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  int budget = 0;

  int slack() const { return budget - depth; }
  bool operator==(const Segment&) const = default;
};

struct BootstrapPlan {
  std::vector<std::string> boot_after;
  std::vector<Segment> segments;
  LayerSet depth_mask;
  int boot_count = 0;

  /// Smallest residual slack over all segments.
  int min_slack() const;
  bool boots_after(std::string_view layer_id) const;
  bool operator==(const BootstrapPlan&) const = default;
};

/// Minimum-bootstrap placement; among minimal plans each bootstrap sits as
/// late as possible. `depth_costs` is indexed like graph.layers. Throws
/// Infeasible when no placement fits.
BootstrapPlan schedule(const ModelGraph& graph, const FheConfig& config, std::span<const int> depth_costs);

/// Builds segments and mask for an explicit placement. Segment budgets are
/// not checked; use check_depth for that.
BootstrapPlan plan_from_boots(const ModelGraph& graph, const FheConfig& config, std::span<const int> depth_costs,
                              const std::vector<std::string>& boot_after);

/// True when `dir` would raise depth on a masked layer or widen a segment
/// while any layer is masked.
bool mask_blocks(const BootstrapPlan& plan, const Direction& dir);

nlohmann::json plan_to_json(const BootstrapPlan& plan);

}  // namespace ckkstune
