// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/static_analyzer.hpp"

#include <array>

#include "ckkstune/error.hpp"

namespace ckkstune {

int layer_depth_cost(const LayerSpec& layer, const LayerOverride* override_entry) {
  const int degree = override_entry && override_entry->act_degree ? *override_entry->act_degree : layer.act_degree;
  return depth_cost(layer.kind, degree);
}

std::vector<int> layer_depth_costs(const ModelGraph& graph, const FheConfig& config) {
  std::vector<int> costs;
  costs.reserve(graph.layers.size());
  for (const auto& layer : graph.layers) costs.push_back(layer_depth_cost(layer, config.override_for(layer.id)));
  return costs;
}

DepthReport check_depth(const ModelGraph& graph, const FheConfig& config, const BootstrapPlan* plan) {
  DepthReport report;
  const int fresh = config.global.usable_levels();
  int remaining = fresh;
  int consumed = 0;
  auto overflow = [&](const std::string& id) {
    if (report.depth_ok) report.first_overflow_layer = id;
    report.depth_ok = false;
  };
  for (const auto& layer : graph.layers) {
    const int cost = layer_depth_cost(layer, config.override_for(layer.id));
    consumed += cost;
    remaining -= cost;
    if (remaining < 0) overflow(layer.id);
    if (plan && plan->boots_after(layer.id)) {
      remaining = fresh - kBootstrapLevels;
      if (remaining < 0) overflow(layer.id);
    }
    report.layer_ids.push_back(layer.id);
    report.cost.push_back(cost);
    report.cumulative.push_back(consumed);
    report.remaining.push_back(remaining);
  }
  return report;
}

// 128-bit classical security, ternary secret, sigma 3.2. log_n 10..15 from
// the homomorphic encryption security standard tables; 16 and 17 from the
// OpenFHE standard lattice parameter set.
int max_log_q_128(int log_n) {
  static constexpr std::array<int, 8> kTable = {27, 54, 109, 218, 438, 881, 1747, 3523};
  if (log_n < kMinLogN || log_n > kMaxLogN) {
    throw Error(ErrorKind::UnsupportedRing, "no security table entry for log_n " + std::to_string(log_n));
  }
  return kTable[static_cast<std::size_t>(log_n - kMinLogN)];
}

int estimate_security(int log_n, int log_q_total, double /*sigma*/) {
  const int anchor = max_log_q_128(log_n);
  if (log_q_total <= 0) throw Error(ErrorKind::InvariantViolation, "log_q_total must be positive");
  return static_cast<int>((128LL * anchor) / log_q_total);
}

StaticReport analyze(const ModelGraph& graph, const FheConfig& config) {
  StaticReport report;
  const auto& g = config.global;

  report.scale_ok = true;
  for (std::size_t i = 1; i < g.modulus_chain.size(); ++i) {
    if (g.log_scale > g.modulus_chain[i]) {
      report.scale_ok = false;
      report.reasons.push_back("scale: log_scale " + std::to_string(g.log_scale) + " exceeds chain prime " +
                               std::to_string(i) + " (" + std::to_string(g.modulus_chain[i]) + " bits)");
      break;
    }
  }

  const auto costs = layer_depth_costs(graph, config);
  try {
    report.plan = schedule(graph, config, costs);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Infeasible) throw;
  }
  report.depth = check_depth(graph, config, report.plan ? &*report.plan : nullptr);
  report.depth_ok = report.plan.has_value() && report.depth.depth_ok;
  if (!report.depth_ok) {
    std::string msg = "depth: " + std::to_string(report.depth.cumulative.empty() ? 0 : report.depth.cumulative.back()) +
                      " levels needed, " + std::to_string(g.usable_levels()) + " usable";
    if (report.depth.first_overflow_layer) msg += ", overflow at layer '" + *report.depth.first_overflow_layer + "'";
    if (!report.plan) msg += ", no bootstrap placement fits";
    report.reasons.push_back(std::move(msg));
  }

  report.sec_bits = estimate_security(g.log_n, g.log_q_total(), g.sigma);
  report.security_ok = report.sec_bits >= g.security_target_bits;
  if (!report.security_ok) {
    report.reasons.push_back("security: " + std::to_string(report.sec_bits) + " bits < target " +
                             std::to_string(g.security_target_bits) + " (logQ " + std::to_string(g.log_q_total()) +
                             " at log_n " + std::to_string(g.log_n) + ")");
  }
  return report;
}

nlohmann::json static_report_to_json(const StaticReport& r) {
  nlohmann::json depth = nlohmann::json::object();
  for (std::size_t i = 0; i < r.depth.layer_ids.size(); ++i) {
    depth[r.depth.layer_ids[i]] = {{"cost", r.depth.cost[i]},
                                   {"cumulative", r.depth.cumulative[i]},
                                   {"remaining", r.depth.remaining[i]}};
  }
  nlohmann::json j = {{"depth_ok", r.depth_ok},        {"sec_bits", r.sec_bits}, {"security_ok", r.security_ok},
                      {"scale_ok", r.scale_ok},        {"reasons", r.reasons},   {"layers", std::move(depth)},
                      {"plan", r.plan ? plan_to_json(*r.plan) : nlohmann::json(nullptr)}};
  if (r.depth.first_overflow_layer) j["first_overflow_layer"] = *r.depth.first_overflow_layer;
  return j;
}

}  // namespace ckkstune
