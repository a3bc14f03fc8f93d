// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion carries its own wall-clock limit.

#include <httplib.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ckkstune/bootstrap_scheduler.hpp"
#include "ckkstune/clear_simulator.hpp"
#include "ckkstune/controller.hpp"
#include "ckkstune/error.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/orchestrator.hpp"
#include "ckkstune/replay.hpp"
#include "ckkstune/static_analyzer.hpp"
#include "level_interpreter.hpp"
#include "lsq_oracle.hpp"
#include "test_support.hpp"

namespace ckkstune {
namespace {

using nlohmann::json;

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failed expectation.
class Checker {
 public:
  bool check(bool cond, const std::string& what) {
    if (!cond && out_.ok) {
      out_.ok = false;
      out_.detail = what;
    }
    return cond;
  }
  Outcome outcome(std::string summary = {}) {
    if (out_.ok) out_.detail = std::move(summary);
    return out_;
  }

 private:
  Outcome out_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

RunConfig mlp_run() {
  const auto dir = testing::fixtures_dir() / "runs";
  return run_config_from_json(read_json(dir / "mlp_mock.json"), dir);
}

// ---------------------------------------------------------------------------

Outcome precision_rule() {
  Checker c;
  const std::array<std::pair<double, double>, 5> pairs{
      {{5.89e-6, 17.37}, {1.13e-7, 23.07}, {1.31e-6, 19.54}, {2.9e-2, 5.12}, {1.6e-3, 9.27}}};
  double worst = 0;
  for (const auto& [mae, bits] : pairs) {
    const double got = precision_from_mae(mae, 64);
    worst = std::max(worst, std::abs(got - bits));
    c.check(std::abs(got - bits) <= 0.1, "mae " + fmt(mae) + " gives " + fmt(got) + " bits, expected " + fmt(bits));
  }
  return c.outcome("max deviation " + fmt(worst) + " bits");
}

Outcome lenet_replay() {
  Checker c;
  const auto result = replay(load_scenario(testing::fixtures_dir() / "lenet_replay" / "scenario.json"));
  const std::vector<Verdict> want{Verdict::Accept, Verdict::Reject, Verdict::Reject, Verdict::Accept};
  c.check(result.trials.size() == want.size(), "expected 4 trials");
  std::string verdicts;
  for (std::size_t i = 0; i < result.trials.size() && i < want.size(); ++i) {
    verdicts += std::string(i ? "/" : "") + std::string(to_string(result.trials[i].actual));
    c.check(result.trials[i].actual == want[i], "trial " + std::to_string(i) + " verdict mismatch");
  }
  int encrypted = 0;
  for (const auto& r : result.ledger) encrypted += is_encrypted(r.mode) ? 1 : 0;
  c.check(result.encrypted_trials == 4 && encrypted == 4,
          "expected 4 encrypted trials, got " + std::to_string(encrypted));
  return c.outcome(verdicts + ", " + std::to_string(encrypted) + " encrypted trials");
}

// LeNet survivors with short chains so Phase B sees bootstraps and varied
// primitive mixes.
std::vector<FheConfig> calibration_survivors() {
  std::vector<FheConfig> out;
  for (const int levels : {8, 9, 11, 14}) {
    for (const auto emb : {Embedding::Square, Embedding::Hybrid}) {
      FheConfig cfg{make_global(16, levels, 30, emb), {}};
      out.push_back(cfg);
    }
  }
  return out;
}

Outcome calibration_recovery() {
  Checker c;
  const auto g = testing::load_fixture_model("lenet");
  const auto survivors = calibration_survivors();
  RunConfig run;
  run.gates.mae_max = 1;
  run.gates.precision_min_bits = 0;
  run.gates.layer_mae_max = 1e3;
  run.budget = static_cast<int>(survivors.size());
  run.phase_a_keep = 1;
  const CostCoefficients hidden{2e-3, 5e-3, 0.8, 2e-4};
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  auto worst_rel = [&](const CostCoefficients& x, const CostCoefficients& y) {
    return std::max({rel(x.alpha, y.alpha), rel(x.beta, y.beta), rel(x.gamma, y.gamma), rel(x.delta, y.delta)});
  };
  std::string summary;
  for (const double amp : {0.0, 0.01}) {
    MockBinding b;
    b.hidden = hidden;
    b.perturbation = amp;
    b.seed = 17;
    MockBackend backend(b);
    Orchestrator orch(g, run, &backend);
    const auto res = orch.phase_b(survivors);
    const auto& fit = res.calibration;
    c.check(!fit.fallback && !fit.partial, "calibration fell back or was partial: " + fit.warning);
    const double err = worst_rel(fit.coeffs, hidden);
    const double tol = amp == 0 ? 1e-6 : 0.05;
    c.check(err <= tol, "amplitude " + fmt(amp) + ": worst relative error " + fmt(err));
    const auto oracle = testing::normal_equation_fit(res.observations, {0, 1, 2, 3});
    c.check(oracle.has_value(), "oracle design is singular");
    if (oracle) {
      const CostCoefficients o{(*oracle)[0], (*oracle)[1], (*oracle)[2], (*oracle)[3]};
      c.check(worst_rel(o, hidden) <= tol, "oracle disagrees with hidden coefficients");
      c.check(worst_rel(fit.coeffs, o) <= 1e-6, "fit disagrees with oracle: " + fmt(worst_rel(fit.coeffs, o)));
    }
    summary += (summary.empty() ? "" : ", ") + std::string("amp ") + fmt(amp) + " err " + fmt(err);
  }
  return c.outcome(summary);
}

// Counts Phase C iterations and the LIGHT trials between them.
class CountingPolicy final : public Policy {
 public:
  CountingPolicy(const TraceRepository& trace, Policy& inner) : trace_(trace), inner_(inner) {}
  PolicyDecision decide(const PolicyContext& ctx) override {
    marks.push_back(trace_.size());
    return inner_.decide(ctx);
  }
  std::vector<std::size_t> marks;

 private:
  const TraceRepository& trace_;
  Policy& inner_;
};

struct RunAudit {
  bool budget_ok = true;
  bool one_light_per_iteration = true;
  bool admission_ok = true;
  bool best_ok = true;
  std::string detail;
};

bool passes_gates(const ModelGraph& g, const TrialRecord& best, const GateConfig& gates) {
  if (!best.passed || !best.metrics.measured_mae || !best.metrics.measured_precision_bits) return false;
  const auto report = analyze(g, best.config);
  NumericOutcome num;
  num.mae = *best.metrics.measured_mae;
  num.precision_bits = *best.metrics.measured_precision_bits;
  num.max_layer_mae = std::max(best.metrics.clear_max_layer_mae.value_or(0), num.mae);
  num.latency_s = best.metrics.measured_latency_s;
  return check_gates(report, num, gates).passed;
}

RunAudit audit(const ModelGraph& g, const RunConfig& run, const RunReport& report, const TraceRepository& trace,
               const std::vector<std::size_t>& marks) {
  RunAudit a;
  const auto records = trace.records();
  int encrypted = 0;
  for (const auto& r : records) encrypted += is_encrypted(r.mode) ? 1 : 0;
  a.budget_ok = encrypted <= run.budget && report.encrypted_trials == encrypted;
  if (!a.budget_ok) a.detail = "encrypted " + std::to_string(encrypted) + " > budget " + std::to_string(run.budget);

  std::vector<std::size_t> bounds = marks;
  bounds.push_back(records.size());
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    int light = 0;
    for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i) {
      light += records[i].phase == "C" && records[i].mode == EvalMode::FheLight ? 1 : 0;
    }
    if (light > 1) a.one_light_per_iteration = false;
  }
  if (marks.empty()) {
    for (const auto& r : records) {
      if (r.phase == "C" && r.mode == EvalMode::FheLight) a.one_light_per_iteration = false;
    }
  }
  if (!a.one_light_per_iteration) a.detail = "more than one LIGHT trial in a Phase C iteration";

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!is_encrypted(records[i].mode)) continue;
    bool prior = false;
    for (std::size_t j = 0; j < i && !prior; ++j) {
      prior = records[j].digest == records[i].digest && records[j].mode == EvalMode::ClearOnly && records[j].passed;
    }
    if (!prior) {
      a.admission_ok = false;
      a.detail = "encrypted trial " + std::to_string(i) + " lacks a prior CLEAR pass";
    }
  }
  if (report.best) {
    a.best_ok = passes_gates(g, *report.best, run.gates);
    if (!a.best_ok) a.detail = "reported best fails a gate";
  }
  return a;
}

struct RandomCorpus {
  int runs = 0;
  int failures_budget = 0;
  int failures_light = 0;
  int failures_admission = 0;
  int failures_best = 0;
  int errors = 0;
  std::map<std::string, int> terminations;
  std::string first_detail;
};

const RandomCorpus& random_corpus() {
  static const RandomCorpus corpus = [] {
    RandomCorpus out;
    std::mt19937_64 rng(20260101);
    auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int i = 0; i < 200; ++i) {
      const auto g = testing::random_graph(rng, pick(3, 8));
      RunConfig run;
      run.budget = pick(2, 8);
      run.phase_a_keep = pick(1, std::min(3, run.budget));
      run.max_c_iterations = pick(0, 6);
      run.final_full = pick(0, 1) == 1;
      run.seed = static_cast<std::uint64_t>(i);
      run.gates.precision_min_bits = static_cast<double>(pick(6, 24));
      run.backend.mock.perturbation = 0.01 * pick(0, 5);
      run.backend.mock.seed = static_cast<std::uint64_t>(i);
      auto backend = make_backend(run.backend);
      TraceRepository trace;
      HeuristicPolicy heuristic;
      CountingPolicy policy(trace, heuristic);
      ++out.runs;
      try {
        Orchestrator orch(g, run, backend.get(), &trace, &policy);
        const auto report = orch.optimize();
        ++out.terminations[std::string(to_string(report.termination))];
        const auto a = audit(g, run, report, trace, policy.marks);
        out.failures_budget += a.budget_ok ? 0 : 1;
        out.failures_light += a.one_light_per_iteration ? 0 : 1;
        out.failures_admission += a.admission_ok ? 0 : 1;
        out.failures_best += a.best_ok ? 0 : 1;
        if (out.first_detail.empty() && !a.detail.empty()) out.first_detail = "run " + std::to_string(i) + ": " + a.detail;
      } catch (const std::exception& e) {
        ++out.errors;
        if (out.first_detail.empty()) out.first_detail = "run " + std::to_string(i) + " threw: " + e.what();
      }
    }
    return out;
  }();
  return corpus;
}

std::string terminations_summary(const RandomCorpus& c) {
  std::string s;
  for (const auto& [k, v] : c.terminations) s += (s.empty() ? "" : " ") + k + "=" + std::to_string(v);
  return s;
}

Outcome budget_safety() {
  Checker c;
  const auto& corpus = random_corpus();
  c.check(corpus.runs >= 200, "fewer than 200 runs");
  c.check(corpus.errors == 0, corpus.first_detail);
  c.check(corpus.failures_budget == 0, corpus.first_detail);
  c.check(corpus.failures_light == 0, corpus.first_detail);
  return c.outcome(std::to_string(corpus.runs) + " runs, " + terminations_summary(corpus));
}

Outcome admission_soundness() {
  Checker c;
  const auto& corpus = random_corpus();
  c.check(corpus.errors == 0, corpus.first_detail);
  c.check(corpus.failures_admission == 0, corpus.first_detail);
  c.check(corpus.failures_best == 0, corpus.first_detail);
  return c.outcome(std::to_string(corpus.runs) + " runs audited");
}

Outcome depth_oracle() {
  Checker c;
  std::mt19937_64 rng(99);
  int boots_seen = 0;
  int overflows = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = testing::random_graph(rng, std::uniform_int_distribution<int>(1, 12)(rng));
    std::vector<int> chain{kSpecialPrimeBits};
    const int levels = std::uniform_int_distribution<int>(1, 16)(rng);
    for (int l = 0; l < levels; ++l) chain.push_back(std::uniform_int_distribution<int>(30, 50)(rng));
    FheConfig cfg;
    cfg.global.log_n = 16;
    cfg.global.modulus_chain = chain;
    cfg.global.log_scale = 30;
    std::vector<std::string> boots;
    for (std::size_t i = 0; i + 1 < g.layers.size(); ++i) {
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) boots.push_back(g.layers[i].id);
    }
    boots_seen += static_cast<int>(boots.size());
    const auto plan = plan_from_boots(g, cfg, layer_depth_costs(g, cfg), boots);
    const auto r = check_depth(g, cfg, &plan);
    const auto o = testing::interpret_levels(g, cfg, boots);
    overflows += o.ok ? 0 : 1;
    c.check(r.depth_ok == o.ok && r.remaining == o.remaining && r.first_overflow_layer == o.first_overflow,
            "triple " + std::to_string(trial) + " disagrees with the level interpreter");
  }
  return c.outcome("500 triples, " + std::to_string(boots_seen) + " bootstraps, " + std::to_string(overflows) +
                   " overflows");
}

Outcome security_properties() {
  Checker c;
  // 128-bit maximum log Q per ring dimension, ternary secret, sigma 3.2.
  const std::map<int, int> anchors{{10, 27},  {11, 54},  {12, 109},  {13, 218},
                                   {14, 438}, {15, 881}, {16, 1747}, {17, 3523}};
  for (const auto& [n, q] : anchors) {
    c.check(std::abs(max_log_q_128(n) - q) <= 2, "anchor log_n " + std::to_string(n));
    c.check(std::abs(estimate_security(n, q) - 128) <= 2, "security at anchor log_n " + std::to_string(n));
  }
  for (int n = kMinLogN; n <= kMaxLogN; ++n) {
    int prev = std::numeric_limits<int>::max();
    for (int q = 1; q <= 4 * anchors.at(kMaxLogN); ++q) {
      const int s = estimate_security(n, q);
      c.check(s <= prev, "not monotone in log Q at log_n " + std::to_string(n));
      if (n > kMinLogN) c.check(s >= estimate_security(n - 1, q), "not monotone in log N at " + std::to_string(n));
      prev = s;
    }
  }
  return c.outcome("log_n " + std::to_string(kMinLogN) + ".." + std::to_string(kMaxLogN) + ", 8 anchors");
}

Outcome mock_improvement() {
  Checker c;
  const auto g = testing::load_fixture_model("mlp");
  const auto run = mlp_run();
  auto backend = make_backend(run.backend);
  Orchestrator orch(g, run, backend.get());
  const auto report = orch.optimize();
  c.check(!is_failure(report.termination), "run failed: " + std::string(to_string(report.termination)));
  c.check(report.best.has_value() && report.baseline.has_value(), "no best or baseline");
  if (!report.best || !report.baseline) return c.outcome();
  const auto& lat = report.accepted_best_latencies;
  c.check(lat.size() >= 2, "no improvement accepted");
  for (std::size_t i = 1; i < lat.size(); ++i) c.check(lat[i] < lat[i - 1], "accepted-best sequence not monotone");
  const double base = *report.baseline->metrics.measured_latency_s;
  double best_light = std::numeric_limits<double>::infinity();
  for (const auto& r : report.ledger) {
    if (r.digest == report.best->digest && r.mode == EvalMode::FheLight) best_light = *r.metrics.measured_latency_s;
  }
  c.check(best_light < base, "best LIGHT latency " + fmt(best_light) + " not below baseline " + fmt(base));
  c.check(passes_gates(g, *report.best, run.gates), "best fails gates");
  bool hybrid = false;
  for (const auto& [id, o] : report.best->config.overrides) hybrid |= o.embedding_method == Embedding::Hybrid;
  c.check(hybrid || report.best->config.global.default_embedding == Embedding::Hybrid, "best does not use Hybrid");
  return c.outcome("baseline " + fmt(base) + " s -> best " + fmt(best_light) + " s over " +
                   std::to_string(lat.size()) + " accepted configs");
}

Outcome honest_infeasibility() {
  Checker c;
  const auto g = testing::load_fixture_model("deep");
  auto run = mlp_run();
  run.gates.precision_min_bits = 8;
  // Independent check that no template chain is secure for this depth.
  const int depth = summarize_model(g).depth_lower_bound;
  for (const int n : kInitLogN) {
    for (const auto& t : kInitTemplates) {
      const int log_q = kSpecialPrimeBits + (depth + 1) * t.log_scale;
      c.check(log_q > max_log_q_128(n), "fixture fits a secure chain at log_n " + std::to_string(n));
    }
  }
  auto backend = make_backend(run.backend);
  Orchestrator orch(g, run, backend.get());
  const auto report = orch.optimize();
  c.check(report.termination == Termination::NoFeasibleRegime,
          "terminated " + std::string(to_string(report.termination)));
  c.check(report.encrypted_trials == 0, "encrypted trials were spent");
  c.check(!report.best, "a best config was reported");
  return c.outcome("depth " + std::to_string(depth) + ", " + std::string(to_string(report.termination)) + ", " +
                   std::to_string(report.encrypted_trials) + " encrypted trials");
}

// Serves a rotating set of malformed, out-of-vocabulary and scope-violating
// policy answers.
std::string adversarial_body(int n, const json& request) {
  std::vector<std::string> ids;
  for (const auto& o : request.value("offered", json::array())) ids.push_back(o.value("id", ""));
  const std::string first = ids.empty() ? "d0" : ids.front();
  switch (n % 12) {
    case 0: return "not json at all";
    case 1: return R"({"chosen":["d999"],"rationale":"invented id"})";
    case 2: return R"({"chosen":["ShortenModulusTail"],"rationale":"kind instead of id"})";
    case 3: return json{{"chosen", {first, first}}, {"rationale", "repeat"}}.dump();
    case 4: return json{{"chosen", {first}}}.dump();
    case 5:
      return json{{"chosen", {first}},
                  {"rationale", "global edit"},
                  {"directions", {{{"kind", "ExtendModulusTail"}}, {{"kind", "RelaxScaleOneStep"}}}}}
          .dump();
    case 6: return json{{"chosen", first}, {"rationale", "scalar"}}.dump();
    case 7: return "[]";
    case 8: return json{{"chosen", {{{"kind", "TightenScaleOneStep"}}}}, {"rationale", "objects"}}.dump();
    case 9: return json{{"chosen", {first}}, {"rationale", "patch"}, {"global", {{"log_n", 10}}}}.dump();
    case 10: return "{\"chosen\": [\"" + first + "\"], \"rationale\": ";
    default: return json{{"chosen", {1, 2}}, {"rationale", 7}}.dump();
  }
}

Outcome policy_safety() {
  Checker c;
  std::atomic<int> served{0};
  httplib::Server server;
  server.Post("/decide", [&](const httplib::Request& req, httplib::Response& res) {
    json request;
    try {
      request = json::parse(req.body);
    } catch (...) {
    }
    const int n = served++;
    res.status = n % 17 == 16 ? 500 : 200;
    res.set_content(adversarial_body(n, request), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port) + "/decide";

  const auto g = testing::load_fixture_model("mlp");
  int runs = 0;
  int decisions = 0;
  int fallbacks = 0;
  int direct = 0;
  std::mt19937_64 rng(5);
  while (served < 100 && runs < 200) {
    auto run = mlp_run();
    run.budget = std::uniform_int_distribution<int>(2, 8)(rng);
    run.phase_a_keep = std::min(run.phase_a_keep, run.budget);
    run.seed = static_cast<std::uint64_t>(runs);
    run.backend.mock.seed = static_cast<std::uint64_t>(runs);
    auto backend = make_backend(run.backend);
    TraceRepository trace;
    RemotePolicy remote(endpoint, "token", std::chrono::milliseconds(2000));
    CountingPolicy policy(trace, remote);
    Orchestrator orch(g, run, backend.get(), &trace, &policy);
    const auto report = orch.optimize();
    ++runs;
    const auto a = audit(g, run, report, trace, policy.marks);
    c.check(a.budget_ok && a.one_light_per_iteration, "run " + std::to_string(runs) + ": " + a.detail);
    c.check(a.admission_ok && a.best_ok, "run " + std::to_string(runs) + ": " + a.detail);
    decisions += static_cast<int>(policy.marks.size());

    // Every Phase C decision fell back, and layer-local patches never
    // touched global parameters of the config they were built from.
    std::set<std::string> globals_seen;
    for (const auto& r : trace.records()) {
      if (r.phase != "C") {
        if (r.passed && is_encrypted(r.mode)) globals_seen.insert(config_to_json(FheConfig{r.config.global, {}}).dump());
        continue;
      }
      if (r.proposer) {
        fallbacks += *r.proposer == to_string(Proposer::Fallback) ? 1 : 0;
        c.check(*r.proposer == to_string(Proposer::Fallback) || r.directions.empty(),
                "non-fallback proposer " + *r.proposer);
      }
      const bool layer_only = !r.directions.empty() &&
                              std::all_of(r.directions.begin(), r.directions.end(),
                                          [](const Direction& d) { return is_layer_local(d.kind); });
      const auto global_key = config_to_json(FheConfig{r.config.global, {}}).dump();
      if (layer_only) c.check(globals_seen.count(global_key) > 0, "layer-only patch changed global parameters");
      if (r.passed && is_encrypted(r.mode)) globals_seen.insert(global_key);
    }
  }

  // Direct fuzz of the decision path against a fixed offer list.
  PolicyContext ctx;
  ctx.offered = {OfferedDirection{"d0", Direction{DirectionKind::CapParallelBlocks, "fc1", 2}, -1, 0},
                 OfferedDirection{"d1", Direction{DirectionKind::SwitchPackingSquareToHybrid, "fc2", std::nullopt}, -1, 0}};
  RemotePolicy remote(endpoint, "", std::chrono::milliseconds(2000));
  for (int i = 0; i < 60; ++i) {
    const auto d = remote.decide(ctx);
    ++direct;
    c.check(d.proposer == Proposer::Fallback, "malformed response accepted: " + remote.last_error());
    for (const auto& id : d.chosen) c.check(id == "d0" || id == "d1", "un-offered id leaked");
  }
  server.stop();
  listener.join();
  c.check(served >= 100, "only " + std::to_string(served.load()) + " malformed responses served");
  c.check(fallbacks > 0, "no Phase C trial came from a fallback decision");
  return c.outcome(std::to_string(served.load()) + " malformed responses, " + std::to_string(runs) + " runs, " +
                   std::to_string(decisions) + " in-run decisions, " + std::to_string(direct) + " direct");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace ckkstune

int main() {
  using namespace ckkstune;
  const std::vector<Criterion> criteria{
      {1, "precision rule consistency", 1, precision_rule},
      {2, "recorded LeNet replay", 5, lenet_replay},
      {3, "calibration recovery", 5, calibration_recovery},
      {4, "budget safety", 60, budget_safety},
      {5, "admission soundness", 60, admission_soundness},
      {6, "depth oracle equivalence", 10, depth_oracle},
      {7, "security estimator properties", 1, security_properties},
      {8, "end-to-end improvement on mock", 10, mock_improvement},
      {9, "honest infeasibility", 5, honest_infeasibility},
      {10, "policy safety under adversarial responses", 10, policy_safety},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.ok && secs > c.limit_s) {
      out = {false, "took " + fmt(secs) + " s, limit " + fmt(c.limit_s) + " s"};
    }
    failed += out.ok ? 0 : 1;
    std::printf("%s  %2d  %-44s %8.3f s  %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
