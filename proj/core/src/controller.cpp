// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/controller.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ckkstune/error.hpp"

namespace ckkstune {

using nlohmann::json;

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::A: return "A";
    case Phase::B: return "B";
    case Phase::C: return "C";
  }
  return "?";
}

std::string_view to_string(Proposer p) {
  switch (p) {
    case Proposer::HeuristicInit: return "HeuristicInit";
    case Proposer::HeuristicRegime: return "HeuristicRegime";
    case Proposer::HeuristicGlobal: return "HeuristicGlobal";
    case Proposer::HeuristicLayer: return "HeuristicLayer";
    case Proposer::RemoteLLM: return "RemoteLLM";
    case Proposer::Fallback: return "Fallback";
    case Proposer::Scripted: return "Scripted";
  }
  return "?";
}

std::vector<FheConfig> init_propose(const ModelSummary& summary, std::span<const FheConfig> exemplars,
                                    const UserConstraints& constraints) {
  std::vector<FheConfig> out;
  std::set<std::string> seen;
  auto add = [&](FheConfig c) {
    if (seen.insert(config_digest(c)).second) out.push_back(std::move(c));
  };
  for (const auto& e : exemplars) add(e);
  const int chain_len = std::max(summary.depth_lower_bound + 2, kMinInitChain);
  for (int log_n : kInitLogN) {
    for (const auto& t : kInitTemplates) {
      FheConfig c;
      c.global = make_global(log_n, chain_len - 1, t.log_scale, t.embedding, constraints.security_target_bits);
      add(std::move(c));
    }
  }
  return out;
}

std::vector<FheConfig> regime_select(std::span<const TrialRecord> trials, std::size_t keep) {
  std::vector<const TrialRecord*> feasible;
  for (const auto& t : trials) {
    if (t.mode == EvalMode::ClearOnly && t.passed && t.metrics.proxy_latency_s) feasible.push_back(&t);
  }
  if (feasible.empty()) throw Error(ErrorKind::NoFeasibleRegime, "no candidate passed the Phase A gates");
  std::stable_sort(feasible.begin(), feasible.end(), [](const TrialRecord* a, const TrialRecord* b) {
    if (*a->metrics.proxy_latency_s != *b->metrics.proxy_latency_s) {
      return *a->metrics.proxy_latency_s < *b->metrics.proxy_latency_s;
    }
    return a->metrics.clear_precision_bits.value_or(0) > b->metrics.clear_precision_bits.value_or(0);
  });
  std::vector<FheConfig> out;
  for (std::size_t i = 0; i < std::min(keep, feasible.size()); ++i) out.push_back(feasible[i]->config);
  return out;
}

StructuralEstimate estimate_structure(const ModelGraph& graph, const FheConfig& config,
                                      const CostCoefficients& coeffs) {
  StructuralEstimate e;
  const auto report = analyze(graph, config);
  e.feasible = report.depth_ok && report.scale_ok;
  e.sec_bits = report.sec_bits;
  const auto* plan = report.plan ? &*report.plan : nullptr;
  if (plan) {
    e.min_slack = plan->min_slack();
    e.boot_count = plan->boot_count;
    e.depth_mask = plan->depth_mask;
  }
  const auto profiles = structural_profiles(graph, config, plan, coeffs);
  try {
    e.proxy_latency = predict(profiles, coeffs).total;
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::ZeroCost) throw;
  }
  e.final_margin_bits = profiles.back().noise_margin_bits;
  return e;
}

OfferedDirection price_direction(const SearchState& state, const Direction& dir, Scope scope) {
  const auto patched = apply_direction(*state.graph, state.config, dir, scope, state.estimate.depth_mask);
  const auto est = estimate_structure(*state.graph, patched, state.coeffs);
  return OfferedDirection{"", dir, est.proxy_latency - state.estimate.proxy_latency,
                          est.final_margin_bits - state.estimate.final_margin_bits};
}

GlobalProposal global_tradeoff_propose(const SearchState& state) {
  GlobalProposal out;
  for (const auto& s : bottleneck_scores(state.profiles, state.weights, state.top_k)) {
    out.bottlenecks.push_back(s.layer_id);
  }
  std::vector<DirectionKind> kinds;
  if (state.estimate.min_slack >= 2) kinds.push_back(DirectionKind::ShortenModulusTail);
  if (state.precision_bits >= state.gates.precision_min_bits + 4) kinds.push_back(DirectionKind::RelaxScaleOneStep);
  if (state.estimate.boot_count > 0 && state.estimate.depth_mask.empty()) {
    kinds.push_back(DirectionKind::IncreaseBootstrapInterval);
  }
  for (auto k : kinds) {
    try {
      out.directions.push_back(price_direction(state, Direction{k, std::nullopt, std::nullopt}, Scope::GlobalAgent));
    } catch (const Error&) {
    }
  }
  std::stable_sort(out.directions.begin(), out.directions.end(),
                   [](const OfferedDirection& a, const OfferedDirection& b) {
                     return a.predicted_delta < b.predicted_delta;
                   });
  return out;
}

namespace {

bool is_repair_kind(DirectionKind k) {
  return k == DirectionKind::LowerActivationDegree || k == DirectionKind::CapParallelBlocks;
}

}  // namespace

std::vector<OfferedDirection> layerwise_propose(const SearchState& state, std::span<const std::string> bottlenecks) {
  std::vector<OfferedDirection> out;
  for (const auto& d : enumerate_directions(*state.graph, state.config, Scope::LayerAgent, bottlenecks,
                                            state.estimate.depth_mask)) {
    auto offer = price_direction(state, d, Scope::LayerAgent);
    const bool repair = state.repair_mode && (offer.predicted_margin_gain > 0 || is_repair_kind(d.kind));
    if (offer.predicted_delta < 0 || repair) out.push_back(std::move(offer));
  }
  if (state.repair_mode) {
    std::stable_sort(out.begin(), out.end(), [](const OfferedDirection& a, const OfferedDirection& b) {
      const bool ra = a.predicted_margin_gain > 0 || is_repair_kind(a.direction.kind);
      const bool rb = b.predicted_margin_gain > 0 || is_repair_kind(b.direction.kind);
      if (ra != rb) return ra;
      if (a.predicted_margin_gain != b.predicted_margin_gain) return a.predicted_margin_gain > b.predicted_margin_gain;
      return a.predicted_delta < b.predicted_delta;
    });
  } else {
    std::stable_sort(out.begin(), out.end(), [](const OfferedDirection& a, const OfferedDirection& b) {
      return a.predicted_delta < b.predicted_delta;
    });
  }
  return out;
}

TrialBrief brief(const TrialRecord& r) {
  TrialBrief b;
  b.ordinal = r.ordinal;
  b.mode = std::string(to_string(r.mode));
  b.digest = r.digest.substr(0, 12);
  b.passed = r.passed;
  b.latency_s = r.metrics.measured_latency_s;
  for (const auto& d : r.directions) b.directions.push_back(describe(d));
  return b;
}

json context_to_json(const PolicyContext& ctx) {
  json offered = json::array();
  for (const auto& o : ctx.offered) {
    offered.push_back({{"id", o.id}, {"direction", direction_to_json(o.direction)}, {"predicted_delta", o.predicted_delta}});
  }
  json bottlenecks = json::array();
  for (std::size_t i = 0; i < std::min(ctx.bottlenecks.size(), kMaxBottleneckProfiles); ++i) {
    const auto& p = ctx.bottlenecks[i];
    bottlenecks.push_back({{"id", p.id},
                           {"kind", to_string(p.kind)},
                           {"runtime_fraction", p.runtime_fraction},
                           {"slot_utilization", p.slot_utilization},
                           {"rot_norm", p.rot_norm},
                           {"low_margin", p.low_margin},
                           {"counts", counts_to_json(p.counts)}});
  }
  json history = json::array();
  const std::size_t start = ctx.history.size() > kMaxHistory ? ctx.history.size() - kMaxHistory : 0;
  for (std::size_t i = start; i < ctx.history.size(); ++i) {
    const auto& h = ctx.history[i];
    json e = {{"ordinal", h.ordinal}, {"mode", h.mode}, {"digest", h.digest}, {"passed", h.passed},
              {"directions", h.directions}};
    if (h.latency_s) e["latency_s"] = *h.latency_s;
    history.push_back(std::move(e));
  }
  return {{"phase", to_string(ctx.phase)},
          {"model_summary", summary_to_json(ctx.summary)},
          {"budget_remaining", ctx.budget_remaining},
          {"offered", std::move(offered)},
          {"bottlenecks", std::move(bottlenecks)},
          {"history", std::move(history)}};
}

PolicyDecision validate_decision(const json& response, const PolicyContext& ctx) {
  if (!response.is_object()) throw Error(ErrorKind::Schema, "policy response must be an object");
  for (const auto& [key, _] : response.items()) {
    if (key != "chosen" && key != "rationale") throw Error(ErrorKind::Schema, "unexpected response field '" + key + "'");
  }
  if (!response.contains("chosen") || !response["chosen"].is_array()) {
    throw Error(ErrorKind::Schema, "policy response needs a 'chosen' list");
  }
  if (!response.contains("rationale") || !response["rationale"].is_string()) {
    throw Error(ErrorKind::Schema, "policy response needs a string 'rationale'");
  }
  std::set<std::string> offered;
  for (const auto& o : ctx.offered) offered.insert(o.id);
  PolicyDecision d;
  d.proposer = Proposer::RemoteLLM;
  std::set<std::string> seen;
  for (const auto& c : response["chosen"]) {
    if (!c.is_string()) throw Error(ErrorKind::Schema, "chosen ids must be strings");
    auto id = c.get<std::string>();
    if (!offered.count(id)) throw Error(ErrorKind::Schema, "chosen id '" + id + "' was not offered");
    if (!seen.insert(id).second) throw Error(ErrorKind::Schema, "chosen id '" + id + "' repeated");
    d.chosen.push_back(std::move(id));
  }
  d.rationale = response["rationale"].get<std::string>();
  if (d.rationale.size() > kMaxRationale) d.rationale.resize(kMaxRationale);
  return d;
}

PolicyDecision HeuristicPolicy::decide(const PolicyContext& ctx) {
  PolicyDecision d;
  d.proposer = Proposer::HeuristicGlobal;
  std::string layer_part, global_part;
  for (const auto& o : ctx.offered) {
    d.chosen.push_back(o.id);
    auto& part = is_layer_local(o.direction.kind) ? layer_part : global_part;
    if (!part.empty()) part += ", ";
    part += describe(o.direction);
    if (is_layer_local(o.direction.kind)) d.proposer = Proposer::HeuristicLayer;
  }
  if (!global_part.empty()) d.rationale += "global: " + global_part;
  if (!layer_part.empty()) d.rationale += (d.rationale.empty() ? "" : "; ") + std::string("layer: ") + layer_part;
  if (d.rationale.empty()) d.rationale = "no direction offered";
  return d;
}

PolicyDecision ScriptedPolicy::decide(const PolicyContext& ctx) {
  PolicyDecision d;
  d.proposer = Proposer::Scripted;
  if (next_ >= script_.size()) {
    d.rationale = "script exhausted";
    return d;
  }
  const auto& step = script_[next_++];
  for (const auto& want : step) {
    for (const auto& o : ctx.offered) {
      if (o.direction == want) {
        d.chosen.push_back(o.id);
        break;
      }
    }
    if (!d.rationale.empty()) d.rationale += " + ";
    d.rationale += describe(want);
  }
  return d;
}

std::vector<PatchCandidate> build_candidates(const ModelGraph& graph, const FheConfig& base,
                                             const std::vector<Direction>& chosen, const LayerSet& mask) {
  std::vector<PatchCandidate> out;
  std::set<std::string> seen;
  auto scope_of = [](const Direction& d) { return is_layer_local(d.kind) ? Scope::LayerAgent : Scope::GlobalAgent; };
  auto add = [&](std::vector<Direction> dirs) {
    FheConfig cfg = base;
    try {
      for (const auto& d : dirs) cfg = apply_direction(graph, cfg, d, scope_of(d), mask);
    } catch (const Error&) {
      return;
    }
    if (seen.insert(config_digest(cfg)).second) out.push_back(PatchCandidate{std::move(dirs), std::move(cfg)});
  };
  for (const auto& d : chosen) add({d});
  std::vector<std::string> layers;
  for (const auto& d : chosen) {
    if (d.target_layer && std::find(layers.begin(), layers.end(), *d.target_layer) == layers.end()) {
      layers.push_back(*d.target_layer);
    }
  }
  for (const auto& layer : layers) {
    std::vector<Direction> group;
    for (const auto& d : chosen) {
      if (d.target_layer == layer) group.push_back(d);
    }
    if (group.size() >= 2) add(std::move(group));
  }
  return out;
}

namespace {

constexpr double kGainEpsilon = 1e-9;

}  // namespace

std::optional<Admission> patch_gate_admit(std::span<const PatchCandidate> candidates, const Evaluator& evaluator,
                                          const CostCoefficients& coeffs, const AdmissionContext& ctx,
                                          const TrialAnnotation& note) {
  std::optional<Admission> best_latency;
  std::optional<Admission> best_repair;
  std::pair<double, double> best_repair_gain{0, 0};
  for (const auto& cand : candidates) {
    if (ctx.skip_digests.count(config_digest(cand.config))) continue;
    TrialAnnotation n = note;
    n.directions = cand.directions;
    auto st = evaluator.run_trial(cand.config, EvalMode::StaticOnly, coeffs, n);
    if (!st.record.passed) continue;
    auto cl = evaluator.run_trial(cand.config, EvalMode::ClearOnly, coeffs, n);
    if (!cl.record.passed) continue;
    const auto& clear = *cl.metrics.clear;
    const double gain = ctx.best_proxy_latency - clear.proxy_latency;
    if (ctx.repair_mode) {
      const std::pair<double, double> rg{clear.final_margin_bits - ctx.repair_margin_bits,
                                         clear.precision_bits - ctx.repair_precision_bits};
      const bool positive = rg.first > kGainEpsilon || (std::abs(rg.first) <= kGainEpsilon && rg.second > kGainEpsilon);
      if (positive && (!best_repair || rg > best_repair_gain ||
                       (rg == best_repair_gain && cand.directions.size() < best_repair->candidate.directions.size()))) {
        best_repair_gain = rg;
        best_repair = Admission{cand, cl, gain, true};
      }
    }
    if (gain > kGainEpsilon && (!best_latency || gain > best_latency->latency_gain)) {
      best_latency = Admission{cand, std::move(cl), gain, false};
    }
  }
  if (best_repair) return best_repair;
  return best_latency;
}

}  // namespace ckkstune
