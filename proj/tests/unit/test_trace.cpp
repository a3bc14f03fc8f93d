// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "ckkstune/error.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/trace.hpp"

namespace ckkstune {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("ckkstune_trace_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TrialRecord sample(std::string digest, EvalMode mode, bool passed, std::optional<double> latency) {
  TrialRecord r;
  r.phase = "B";
  r.arch_signature = "sig";
  r.config.global = make_global(15, 4, 40, Embedding::Square);
  r.digest = std::move(digest);
  r.mode = mode;
  r.passed = passed;
  r.metrics.measured_latency_s = latency;
  r.metrics.measured_layer_seconds = {{"fc", latency.value_or(0)}};
  r.directions = {Direction{DirectionKind::CapParallelBlocks, "fc", 2}};
  r.coefficients = CostCoefficients{};
  return r;
}

TEST(Trace, RecordJsonRoundTrip) {
  auto r = sample("abc", EvalMode::FheLight, true, 1.5);
  r.reasons = {"x"};
  r.proposer = "Scripted";
  r.metrics.clear_mae = 1e-4;
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Trace, AppendAssignsOrdinalsAndQueries) {
  TraceRepository repo;
  const auto a = repo.append(sample("d1", EvalMode::StaticOnly, true, std::nullopt));
  const auto b = repo.append(sample("d1", EvalMode::FheLight, true, 2.0));
  repo.append(sample("d2", EvalMode::FheLight, true, 1.0));
  EXPECT_EQ(a.ordinal, 0);
  EXPECT_EQ(b.ordinal, 1);
  EXPECT_LT(a.timestamp, b.timestamp);
  EXPECT_EQ(repo.query_digest("d1").size(), 2u);
  EXPECT_EQ(repo.query_signature("sig").size(), 3u);
  EXPECT_TRUE(repo.query_signature("other").empty());
  ASSERT_TRUE(repo.best_exemplar("sig"));
  EXPECT_EQ(repo.best_exemplar("sig")->digest, "d2");
}

TEST(Trace, ExemplarIgnoresFailuresAndClearRuns) {
  TraceRepository repo;
  repo.append(sample("fast-but-failed", EvalMode::FheLight, false, 0.1));
  repo.append(sample("clear", EvalMode::ClearOnly, true, std::nullopt));
  EXPECT_FALSE(repo.best_exemplar("sig"));
  repo.append(sample("ok", EvalMode::FheFull, true, 5.0));
  EXPECT_EQ(repo.best_exemplar("sig")->digest, "ok");
}

TEST(Trace, PersistsAndReloads) {
  TempDir dir;
  const auto path = dir.path() / "trace.jsonl";
  {
    TraceRepository repo(path);
    repo.append(sample("d1", EvalMode::FheLight, true, 1.0));
    repo.append(sample("d2", EvalMode::FheLight, true, 2.0));
  }
  TraceRepository again(path);
  EXPECT_EQ(again.size(), 2u);
  const auto c = again.append(sample("d3", EvalMode::ClearOnly, true, std::nullopt));
  EXPECT_EQ(c.ordinal, 2);
  EXPECT_EQ(read_checksummed(path).size(), 3u);
}

TEST(Trace, TruncationAndTamperingDetected) {
  TempDir dir;
  const auto path = dir.path() / "trace.jsonl";
  {
    TraceRepository repo(path);
    repo.append(sample("d1", EvalMode::FheLight, true, 1.0));
  }
  const auto text = read_text(path);

  write_text(path, text.substr(0, text.size() - 1));
  EXPECT_THROW(TraceRepository{path}, Error);

  write_text(path, text.substr(0, text.size() / 2) + "\n");
  try {
    TraceRepository repo(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CorruptTrace);
  }

  auto tampered = text;
  tampered.replace(tampered.find("\"d1\""), 4, "\"d9\"");
  write_text(path, tampered);
  try {
    TraceRepository repo(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CorruptTrace);
  }
}

TEST(Trace, ChecksumLine) {
  const nlohmann::json rec = {{"a", 1}};
  const auto line = checksum_line(rec);
  EXPECT_EQ(verify_line(line), rec);
  EXPECT_THROW(verify_line("{\"record\":{\"a\":2},\"sha256\":\"00\"}"), Error);
  EXPECT_THROW(verify_line("nope"), Error);
}

TEST(Trace, ConcurrentAppendsKeepOrdinalsUnique) {
  TraceRepository repo;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&repo, t] {
      for (int i = 0; i < 50; ++i) repo.append(sample("t" + std::to_string(t), EvalMode::StaticOnly, true, std::nullopt));
    });
  }
  for (auto& th : threads) th.join();
  const auto all = repo.records();
  ASSERT_EQ(all.size(), 400u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].ordinal, static_cast<std::int64_t>(i));
}

}  // namespace
}  // namespace ckkstune
