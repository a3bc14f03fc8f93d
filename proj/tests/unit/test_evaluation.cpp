// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "ckkstune/error.hpp"
#include "ckkstune/evaluation.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/replay.hpp"
#include "test_support.hpp"

namespace ckkstune {
namespace {

LayerProfile counted(std::string id, std::int64_t mul, std::int64_t rot) {
  LayerProfile p;
  p.id = std::move(id);
  p.counts = {mul, rot, 0, 0};
  return p;
}

class Evaluation : public ::testing::Test {
 protected:
  ModelGraph mlp = testing::load_fixture_model("mlp");
  FheConfig cfg{make_global(15, 6, 40, Embedding::Diagonal), {}};
  GateConfig gates;
};

TEST_F(Evaluation, MockExactLinear) {
  MockBinding b;
  b.hidden = {0.002, 0.005, 0, 0};
  const std::vector<LayerProfile> p{counted("x", 100, 200)};
  const auto lat = mock_latency("digest", p, b);
  EXPECT_NEAR(lat.at("x"), 1.2, 1e-12);
}

TEST_F(Evaluation, MockPerturbationBoundedAndDeterministic) {
  MockBinding b;
  b.perturbation = 0.01;
  b.seed = 5;
  std::vector<LayerProfile> p;
  for (int i = 0; i < 50; ++i) p.push_back(counted("l" + std::to_string(i), 10 + i, 3 * i));
  const auto a = mock_latency("d", p, b);
  EXPECT_EQ(a, mock_latency("d", p, b));
  EXPECT_NE(a, mock_latency("e", p, b));
  for (const auto& q : p) {
    const double exact = layer_cost(q.counts, b.hidden);
    EXPECT_LE(std::abs(a.at(q.id) - exact), 0.01 * exact + 1e-15);
  }
}

TEST_F(Evaluation, StaticOnlyHasNoClearReport) {
  auto insecure = cfg;
  insecure.global.log_n = 12;
  const Evaluator ev(mlp, gates, nullptr, nullptr, make_calibration_batch(mlp.input_shape));
  const auto m = ev.evaluate(insecure, EvalMode::StaticOnly, {});
  EXPECT_FALSE(m.clear);
  EXPECT_FALSE(ev.verdict(m).passed);
}

TEST_F(Evaluation, EncryptedNeedsBackend) {
  const Evaluator ev(mlp, gates, nullptr, nullptr, make_calibration_batch(mlp.input_shape));
  try {
    ev.evaluate(cfg, EvalMode::FheLight, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BackendUnavailable);
  }
}

TEST_F(Evaluation, MockFullScalesLight) {
  MockBackend backend(MockBinding{});
  TraceRepository trace;
  const Evaluator ev(mlp, gates, &backend, &trace, make_calibration_batch(mlp.input_shape));
  const auto light = ev.run_trial(cfg, EvalMode::FheLight, {}, {"B", std::nullopt, {}, "", std::nullopt});
  const auto full = ev.run_trial(cfg, EvalMode::FheFull, {}, {"C", std::nullopt, {}, "", std::nullopt});
  EXPECT_NEAR(*full.metrics.measured_latency_s, kDefaultWorkloadRatio * *light.metrics.measured_latency_s, 1e-9);
  EXPECT_EQ(*light.metrics.measured_mae, light.metrics.clear->global_mae);
  EXPECT_EQ(trace.size(), 2u);
  EXPECT_EQ(light.record.digest, config_digest(cfg));
}

TEST_F(Evaluation, RecordedTrialZero) {
  const auto scenario = load_scenario(testing::fixtures_dir() / "lenet_replay" / "scenario.json");
  auto backend = RecordedBackend::load(scenario.trace);
  const auto digest = config_digest(scenario.base);
  backend.bind_alias(digest, "lenet-t0");
  const Evaluator ev(scenario.graph, scenario.gates, &backend, nullptr, make_calibration_batch(scenario.graph.input_shape));
  const auto m = ev.evaluate(scenario.base, EvalMode::FheLight, {});
  EXPECT_DOUBLE_EQ(*m.measured_latency_s, 7.89);
  const std::map<std::string, double> want{{"conv1", 2.483}, {"conv2", 4.006}, {"fc1", 0.906}, {"fc2", 0.368}};
  EXPECT_EQ(*m.measured_layer_seconds, want);
  EXPECT_TRUE(ev.verdict(m).passed);

  const auto full = ev.evaluate(scenario.base, EvalMode::FheFull, {});
  EXPECT_NEAR(*full.measured_latency_s, 78.9, 1e-9);
}

TEST_F(Evaluation, RecordedMiss) {
  RecordedBackend backend({});
  const Evaluator ev(mlp, gates, &backend, nullptr, make_calibration_batch(mlp.input_shape));
  try {
    ev.evaluate(cfg, EvalMode::FheLight, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RecordedMiss);
  }
}

TEST_F(Evaluation, ExternalBackendUnavailable) {
  ExternalProcessBackend backend("fhe-runner");
  const Evaluator ev(mlp, gates, &backend, nullptr, make_calibration_batch(mlp.input_shape));
  EXPECT_THROW(ev.evaluate(cfg, EvalMode::FheLight, {}), Error);
}

TEST_F(Evaluation, BindingJson) {
  const auto b = backend_binding_from_json(nlohmann::json{{"kind", "mock"}, {"perturbation", 0.01}, {"seed", 3}});
  EXPECT_EQ(b.kind, BackendKind::Mock);
  EXPECT_EQ(b.mock.perturbation, 0.01);
  EXPECT_THROW(backend_binding_from_json(nlohmann::json{{"kind", "quantum"}}), Error);
  const auto back = backend_binding_from_json(backend_binding_to_json(b));
  EXPECT_EQ(back.mock.seed, 3u);
}

TEST_F(Evaluation, EncryptedVerdictUsesMeasuredNumerics) {
  RecordedBackend backend({RecordedEntry{config_digest(cfg), EvalMode::FheLight, 1.0, {{"fc1", 1.0}}, 2.9e-2, 5.12}});
  const Evaluator ev(mlp, gates, &backend, nullptr, make_calibration_batch(mlp.input_shape));
  const auto m = ev.evaluate(cfg, EvalMode::FheLight, {});
  EXPECT_TRUE(check_gates(m.static_report, *m.clear, gates).passed);
  EXPECT_FALSE(ev.verdict(m).passed);
}

}  // namespace
}  // namespace ckkstune
