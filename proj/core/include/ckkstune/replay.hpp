// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/clear_simulator.hpp"
#include "ckkstune/config_space.hpp"
#include "ckkstune/model_ir.hpp"
#include "ckkstune/trace.hpp"

namespace ckkstune {

enum class Verdict { Accept, Reject };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view name);

/// One scripted refinement. Directions apply to the scenario's base config;
/// trial 0 carries none and is the baseline.
struct ScenarioTrial {
  std::string alias;  // key of the recorded measurement
  std::vector<Direction> directions;
  Verdict expected = Verdict::Accept;
};

struct Scenario {
  ModelGraph graph;
  FheConfig base;
  GateConfig gates;
  std::filesystem::path trace;
  double workload_ratio = 10.0;
  std::vector<ScenarioTrial> trials;
};

/// Model, base config and trace may be inline objects or paths relative to
/// `base_dir`. Throws Schema.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct ReplayTrial {
  std::size_t index = 0;
  std::string alias;
  std::string digest;
  std::vector<Direction> directions;
  Verdict expected = Verdict::Accept;
  Verdict actual = Verdict::Reject;
  bool admitted = false;
  bool repair = false;
  std::optional<TrialRecord> encrypted;  // the FHE_LIGHT record when admitted
  std::vector<std::string> reasons;

  bool matches() const { return expected == actual; }
};

struct ReplayResult {
  std::vector<ReplayTrial> trials;
  std::vector<TrialRecord> ledger;  // every recorded trial, all fidelities
  int encrypted_trials = 0;
  std::optional<std::string> best_alias;

  bool all_match() const;
};

/// Re-executes static, clear and admission decisions for each scripted
/// trial and gates the recorded FHE_LIGHT measurement. Throws RecordedMiss
/// and CorruptTrace.
ReplayResult replay(const Scenario& scenario);
nlohmann::json replay_to_json(const ReplayResult& result);

}  // namespace ckkstune
