// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "ckkstune/error.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/orchestrator.hpp"
#include "ckkstune/replay.hpp"
#include "ckkstune/report.hpp"
#include "test_support.hpp"

namespace ckkstune {
namespace {

namespace fs = std::filesystem;

fs::path scenario_path() { return testing::fixtures_dir() / "lenet_replay" / "scenario.json"; }

TEST(Replay, CaseStudyVerdicts) {
  const auto result = replay(load_scenario(scenario_path()));
  ASSERT_EQ(result.trials.size(), 4u);
  EXPECT_TRUE(result.all_match());
  EXPECT_EQ(result.encrypted_trials, 4);
  const std::vector<Verdict> want{Verdict::Accept, Verdict::Reject, Verdict::Reject, Verdict::Accept};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(result.trials[i].actual, want[i]) << i;
  EXPECT_EQ(result.trials[0].encrypted->metrics.measured_latency_s, 7.89);
  EXPECT_EQ(result.trials[3].encrypted->metrics.measured_latency_s, 8.51);
  EXPECT_TRUE(result.trials[3].repair);
  EXPECT_EQ(result.best_alias, "lenet-t0");
  for (std::size_t i = 1; i < 4; ++i) EXPECT_TRUE(result.trials[i].admitted);
}

TEST(Replay, EveryEncryptedRunHasPriorClearPass) {
  const auto result = replay(load_scenario(scenario_path()));
  for (std::size_t i = 0; i < result.ledger.size(); ++i) {
    const auto& r = result.ledger[i];
    if (!is_encrypted(r.mode)) continue;
    bool found = false;
    for (std::size_t j = 0; j < i; ++j) {
      found |= result.ledger[j].digest == r.digest && result.ledger[j].mode == EvalMode::ClearOnly &&
               result.ledger[j].passed;
    }
    EXPECT_TRUE(found) << i;
  }
}

TEST(Replay, UnknownAliasMisses) {
  auto s = load_scenario(scenario_path());
  s.trials[1].alias = "lenet-t9";
  try {
    replay(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RecordedMiss);
  }
}

TEST(Replay, TamperedTraceIsCorrupt) {
  auto s = load_scenario(scenario_path());
  const auto tmp = fs::temp_directory_path() / "ckkstune_tampered.jsonl";
  auto text = read_text(s.trace);
  text.replace(text.find("7.89"), 4, "1.89");
  write_text(tmp, text);
  s.trace = tmp;
  try {
    replay(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CorruptTrace);
  }
  fs::remove(tmp);
}

TEST(Replay, ScenarioSchema) {
  const auto dir = testing::fixtures_dir() / "lenet_replay";
  auto doc = read_json(scenario_path());
  doc.erase("trials");
  EXPECT_THROW(scenario_from_json(doc, dir), Error);
  doc = read_json(scenario_path());
  doc["trials"][0]["expect"] = "maybe";
  EXPECT_THROW(scenario_from_json(doc, dir), Error);
  doc = read_json(scenario_path());
  doc["trials"][0]["directions"] = doc["trials"][1]["directions"];
  EXPECT_THROW(scenario_from_json(doc, dir), Error);
}

TEST(Replay, JsonSummary) {
  const auto j = replay_to_json(replay(load_scenario(scenario_path())));
  EXPECT_TRUE(j["all_match"].get<bool>());
  EXPECT_EQ(j["trials"].size(), 4u);
  EXPECT_EQ(j["best"], "lenet-t0");
}

TEST(Report, RendersReplayLedger) {
  const auto text = render_report(replay_to_json(replay(load_scenario(scenario_path()))));
  for (const char* s : {"Total runtime [s]", "7.89", "8.51", "conv2", "Precision [bits]", "log N"}) {
    EXPECT_NE(text.find(s), std::string::npos) << s;
  }
}

TEST(Report, RendersOptimizeReport) {
  const auto g = testing::load_fixture_model("mlp");
  const auto dir = testing::fixtures_dir() / "runs";
  const auto run = run_config_from_json(read_json(dir / "mlp_mock.json"), dir);
  auto backend = make_backend(run.backend);
  const auto text = render_report(report_to_json(Orchestrator(g, run, backend.get()).optimize()));
  EXPECT_NE(text.find("mlp"), std::string::npos);
  EXPECT_NE(text.find("FHE_FULL"), std::string::npos);
}

TEST(Report, MissingLedgerIsSchemaError) {
  try {
    render_report(nlohmann::json::object());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
  }
}

}  // namespace
}  // namespace ckkstune
