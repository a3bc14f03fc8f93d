// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0
//
// ckkstune: CKKS configuration search from the command line.
//
// Exit codes: 0 success, 1 domain failure, 2 input or configuration error.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ckkstune/controller.hpp"
#include "ckkstune/error.hpp"
#include "ckkstune/evaluation.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/model_ir.hpp"
#include "ckkstune/orchestrator.hpp"
#include "ckkstune/replay.hpp"
#include "ckkstune/report.hpp"
#include "ckkstune/static_analyzer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ckkstune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitInput = 2;

constexpr const char* kTokenEnv = "CKKSTUNE_POLICY_TOKEN";

struct Options {
  std::string model;
  std::string config;
  std::string run_config;
  std::string trace;
  std::string out;
  std::string scenario;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> policy_endpoint;
  std::optional<int> budget;
};

// Input documents are parsed up front; any failure there is an input error.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
auto load(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

bool is_input_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::Schema:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::UnknownKind:
    case ErrorKind::ScopeViolation:
    case ErrorKind::MaskViolation:
    case ErrorKind::InvariantViolation:
    case ErrorKind::UnsupportedRing:
    case ErrorKind::BatchShapeMismatch:
    case ErrorKind::CorruptTrace:
    case ErrorKind::Config:
      return true;
    default:
      return false;
  }
}

void emit(const Options& o, const json& doc) {
  const auto text = doc.dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, text);
  std::cout << text;
}

int cmd_analyze(const Options& o) {
  const auto graph = load([&] { return model_from_json(read_json(o.model)); });
  const auto config = load([&] {
    auto c = config_from_json(read_json(o.config));
    validate_config(graph, c);
    return c;
  });
  const auto report = analyze(graph, config);
  emit(o, static_report_to_json(report));
  return report.passed() ? kExitOk : kExitDomain;
}

int cmd_profile(const Options& o) {
  const auto graph = load([&] { return model_from_json(read_json(o.model)); });
  const auto config = load([&] {
    auto c = config_from_json(read_json(o.config));
    validate_config(graph, c);
    return c;
  });
  const auto run = load([&] {
    return o.run_config.empty() ? RunConfig{} : run_config_from_json(read_json(o.run_config), fs::path(o.run_config).parent_path());
  });
  const std::uint64_t seed = o.seed.value_or(run.seed);
  const Evaluator evaluator(graph, run.gates, nullptr, nullptr,
                            make_calibration_batch(graph.input_shape, kDefaultCalibrationSeed + seed,
                                                   static_cast<std::size_t>(run.calibration_batch)));
  const auto metrics = evaluator.evaluate(config, EvalMode::ClearOnly, run.seed_coefficients);
  const auto verdict = evaluator.verdict(metrics);
  json doc = {{"static", static_report_to_json(metrics.static_report)},
              {"passed", verdict.passed},
              {"reasons", verdict.reasons}};
  if (metrics.clear) doc["clear"] = clear_report_to_json(*metrics.clear);
  emit(o, doc);
  return verdict.passed ? kExitOk : kExitDomain;
}

int cmd_optimize(const Options& o) {
  const auto graph = load([&] { return model_from_json(read_json(o.model)); });
  auto run = load([&] {
    auto r = run_config_from_json(read_json(o.run_config), fs::path(o.run_config).parent_path());
    if (o.seed) r.seed = *o.seed;
    if (o.budget) r.budget = *o.budget;
    if (o.backend) r.backend.kind = *o.backend == "recorded" ? BackendKind::Recorded : BackendKind::Mock;
    if (o.policy_endpoint) r.policy_endpoint = *o.policy_endpoint;
    if (r.backend.kind == BackendKind::Recorded && r.backend.recorded_path.empty()) {
      throw Error(ErrorKind::Config, "recorded backend needs a trace path in the run config");
    }
    validate_run_config(r);
    return r;
  });
  auto backend = load([&] { return make_backend(run.backend); });
  std::optional<TraceRepository> trace;
  if (!o.trace.empty()) load([&] { return trace.emplace(fs::path(o.trace)), 0; });

  std::unique_ptr<Policy> policy;
  if (run.policy_endpoint) {
    const char* token = std::getenv(kTokenEnv);
    policy = std::make_unique<RemotePolicy>(*run.policy_endpoint, token ? token : "", run.policy_timeout);
  }
  Orchestrator orch(graph, run, backend.get(), trace ? &*trace : nullptr, policy.get());
  const auto report = orch.optimize();
  emit(o, report_to_json(report));
  return is_failure(report.termination) || !report.best ? kExitDomain : kExitOk;
}

int cmd_replay(const Options& o) {
  auto scenario = load([&] {
    auto s = load_scenario(o.scenario);
    if (!o.trace.empty()) s.trace = o.trace;
    return s;
  });
  const auto result = replay(scenario);
  emit(o, replay_to_json(result));
  return result.all_match() ? kExitOk : kExitDomain;
}

int cmd_report(const Options& o) {
  const auto doc = load([&] { return read_json(o.input); });
  const auto text = render_report(doc);
  if (!o.out.empty()) write_text(o.out, text);
  std::cout << text;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CKKS configuration search for encrypted inference"};
  app.require_subcommand(1);
  Options o;

  auto* analyze_cmd = app.add_subcommand("analyze", "Static depth, scale and security checks");
  analyze_cmd->add_option("--model", o.model, "Model graph JSON")->required();
  analyze_cmd->add_option("--config", o.config, "FHE configuration JSON")->required();
  analyze_cmd->add_option("--out", o.out, "Write the report here as well");

  auto* profile_cmd = app.add_subcommand("profile", "Cleartext simulation and per-layer profile");
  profile_cmd->add_option("--model", o.model, "Model graph JSON")->required();
  profile_cmd->add_option("--config", o.config, "FHE configuration JSON")->required();
  profile_cmd->add_option("--run-config", o.run_config, "Run configuration (gates, seed coefficients)");
  profile_cmd->add_option("--seed", o.seed, "Calibration batch seed");
  profile_cmd->add_option("--out", o.out, "Write the profile here as well");

  auto* optimize_cmd = app.add_subcommand("optimize", "Run the full search");
  optimize_cmd->add_option("--model", o.model, "Model graph JSON")->required();
  optimize_cmd->add_option("--run-config", o.run_config, "Run configuration JSON")->required();
  optimize_cmd->add_option("--trace", o.trace, "Persistent trial trace (checksummed JSON lines)");
  optimize_cmd->add_option("--out", o.out, "Write the run report here as well");
  optimize_cmd->add_option("--seed", o.seed, "Override the run seed");
  optimize_cmd->add_option("--backend", o.backend, "Encrypted backend")->check(CLI::IsMember({"mock", "recorded"}));
  optimize_cmd->add_option("--policy-endpoint", o.policy_endpoint,
                           std::string("Remote policy URL; bearer token from ") + kTokenEnv);
  optimize_cmd->add_option("--budget", o.budget, "Encrypted trial budget");

  auto* replay_cmd = app.add_subcommand("replay", "Replay a scripted scenario against a recorded trace");
  replay_cmd->add_option("scenario", o.scenario, "Scenario JSON")->required();
  replay_cmd->add_option("--trace", o.trace, "Recorded trace overriding the scenario's");
  replay_cmd->add_option("--out", o.out, "Write the verdict table here as well");

  auto* report_cmd = app.add_subcommand("report", "Render a run or replay document as a table");
  report_cmd->add_option("input", o.input, "Run report or replay JSON")->required();
  report_cmd->add_option("--out", o.out, "Write the table here as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  const std::map<CLI::App*, std::function<int(const Options&)>> handlers = {
      {analyze_cmd, cmd_analyze}, {profile_cmd, cmd_profile}, {optimize_cmd, cmd_optimize},
      {replay_cmd, cmd_replay},   {report_cmd, cmd_report},
  };
  try {
    for (const auto& [cmd, handler] : handlers) {
      if (cmd->parsed()) return handler(o);
    }
  } catch (const InputError& e) {
    std::cerr << "ckkstune: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "ckkstune: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return is_input_kind(e.kind()) ? kExitInput : kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "ckkstune: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitInput;
}
