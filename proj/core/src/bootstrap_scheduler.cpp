// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/bootstrap_scheduler.hpp"

#include <algorithm>
#include <limits>

#include "ckkstune/error.hpp"

namespace ckkstune {

int BootstrapPlan::min_slack() const {
  int s = std::numeric_limits<int>::max();
  for (const auto& seg : segments) s = std::min(s, seg.slack());
  return segments.empty() ? 0 : s;
}

bool BootstrapPlan::boots_after(std::string_view layer_id) const {
  return std::find(boot_after.begin(), boot_after.end(), layer_id) != boot_after.end();
}

namespace {

BootstrapPlan assemble(const ModelGraph& graph, const FheConfig& config, std::span<const int> costs,
                       const std::vector<std::size_t>& cuts) {
  const int fresh = config.global.usable_levels();
  BootstrapPlan plan;
  std::size_t begin = 0;
  auto close = [&](std::size_t end) {
    Segment seg{begin, end, 0, plan.segments.empty() ? fresh : fresh - kBootstrapLevels};
    for (std::size_t i = begin; i < end; ++i) seg.depth += costs[i];
    if (seg.slack() < kMaskSlackLevels) {
      for (std::size_t i = begin; i < end; ++i) plan.depth_mask.insert(graph.layers[i].id);
    }
    plan.segments.push_back(seg);
    begin = end;
  };
  for (std::size_t cut : cuts) {
    plan.boot_after.push_back(graph.layers[cut].id);
    close(cut + 1);
  }
  close(graph.layers.size());
  plan.boot_count = static_cast<int>(plan.boot_after.size());
  return plan;
}

}  // namespace

BootstrapPlan schedule(const ModelGraph& graph, const FheConfig& config, std::span<const int> depth_costs) {
  const std::size_t n = graph.layers.size();
  if (depth_costs.size() != n) throw Error(ErrorKind::InvariantViolation, "depth cost vector does not match graph");
  const int fresh = config.global.usable_levels();
  const int refreshed = fresh - kBootstrapLevels;
  const std::size_t interval = static_cast<std::size_t>(std::max(1, config.global.bootstrap_interval));
  constexpr int kInf = std::numeric_limits<int>::max() / 2;

  // best[first][i]: fewest bootstraps covering layers i.. when a segment
  // starts at i (first: no bootstrap precedes it).
  std::vector<std::vector<int>> best(2, std::vector<int>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> next(2, std::vector<std::size_t>(n + 1, n));
  for (int first = 0; first < 2; ++first) best[first][n] = 0;
  for (std::size_t i = n; i-- > 0;) {
    for (int first = 0; first < 2; ++first) {
      const int budget = first ? fresh : refreshed;
      int depth = 0;
      for (std::size_t j = i + 1; j <= n; ++j) {
        depth += depth_costs[j - 1];
        if (depth > budget) break;
        int total;
        if (j == n) {
          total = 0;
        } else {
          if (!first && j - i < interval) continue;
          if (best[0][j] >= kInf) continue;
          total = 1 + best[0][j];
        }
        // <= keeps the latest end for equal counts.
        if (total <= best[first][i]) {
          best[first][i] = total;
          next[first][i] = j;
        }
      }
    }
  }
  if (best[1][0] >= kInf) {
    throw Error(ErrorKind::Infeasible, "no bootstrap placement fits: fresh budget " + std::to_string(fresh) +
                                           " levels, post-bootstrap budget " + std::to_string(refreshed));
  }
  std::vector<std::size_t> cuts;
  std::size_t i = 0;
  int first = 1;
  while (i < n) {
    const std::size_t j = next[first][i];
    if (j < n) cuts.push_back(j - 1);
    i = j;
    first = 0;
  }
  return assemble(graph, config, depth_costs, cuts);
}

BootstrapPlan plan_from_boots(const ModelGraph& graph, const FheConfig& config, std::span<const int> depth_costs,
                              const std::vector<std::string>& boot_after) {
  if (depth_costs.size() != graph.layers.size()) {
    throw Error(ErrorKind::InvariantViolation, "depth cost vector does not match graph");
  }
  std::vector<std::size_t> cuts;
  for (const auto& id : boot_after) {
    const auto idx = graph.index_of(id);
    if (!idx) throw Error(ErrorKind::InvariantViolation, "bootstrap after unknown layer '" + id + "'");
    if (!cuts.empty() && *idx <= cuts.back()) throw Error(ErrorKind::InvariantViolation, "bootstraps out of order");
    if (*idx + 1 == graph.layers.size()) throw Error(ErrorKind::InvariantViolation, "bootstrap after the last layer");
    cuts.push_back(*idx);
  }
  return assemble(graph, config, depth_costs, cuts);
}

bool mask_blocks(const BootstrapPlan& plan, const Direction& dir) {
  if (dir.kind == DirectionKind::IncreaseBootstrapInterval) return !plan.depth_mask.empty();
  return increases_depth(dir.kind) && dir.target_layer && plan.depth_mask.count(*dir.target_layer) > 0;
}

nlohmann::json plan_to_json(const BootstrapPlan& plan) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : plan.segments) {
    segments.push_back({{"begin", s.begin}, {"end", s.end}, {"depth", s.depth}, {"budget", s.budget}});
  }
  return {{"boot_after", plan.boot_after},
          {"boot_count", plan.boot_count},
          {"segments", std::move(segments)},
          {"depth_mask", std::vector<std::string>(plan.depth_mask.begin(), plan.depth_mask.end())}};
}

}  // namespace ckkstune
