// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "ckkstune/bootstrap_scheduler.hpp"
#include "ckkstune/error.hpp"
#include "ckkstune/static_analyzer.hpp"
#include "level_interpreter.hpp"
#include "test_support.hpp"

namespace ckkstune {
namespace {

using testing::act;
using testing::flatten;
using testing::linear;

FheConfig chain_config(int log_n, std::vector<int> chain, int log_scale) {
  FheConfig c;
  c.global.log_n = log_n;
  c.global.modulus_chain = std::move(chain);
  c.global.log_scale = log_scale;
  return c;
}

TEST(StaticAnalyzer, LayerDepthCost) {
  EXPECT_EQ(layer_depth_cost(act("a", 31), nullptr), 5);
  EXPECT_EQ(layer_depth_cost(act("a", 15), nullptr), 4);
  EXPECT_EQ(layer_depth_cost(flatten("f"), nullptr), 0);
  LayerOverride o;
  o.act_degree = 15;
  EXPECT_EQ(layer_depth_cost(act("a", 31), &o), 4);
}

TEST(StaticAnalyzer, CheckDepthExamples) {
  // Six levels on a chain of eight entries.
  const auto g = build_graph("six", {16}, {linear("a", 8), act("b", 3), linear("c", 8), linear("d", 4), linear("e", 2)});
  auto c = make_global(15, 7, 40, Embedding::Square);
  const auto r = check_depth(g, FheConfig{c, {}});
  EXPECT_TRUE(r.depth_ok);
  EXPECT_EQ(r.cumulative.back(), 6);

  const auto lenet = testing::load_fixture_model("lenet");
  const auto shallow = FheConfig{make_global(15, 3, 40, Embedding::Square), {}};
  const auto lr = check_depth(lenet, shallow);
  EXPECT_FALSE(lr.depth_ok);
  ASSERT_TRUE(lr.first_overflow_layer);
  EXPECT_EQ(*lr.first_overflow_layer, "act1");

  const auto flat = build_graph("flat", {2, 2, 2}, {flatten("f")});
  EXPECT_TRUE(check_depth(flat, FheConfig{make_global(12, 1, 30, Embedding::Square), {}}).depth_ok);
}

TEST(StaticAnalyzer, SecurityExamples) {
  EXPECT_EQ(estimate_security(15, 881), 128);
  EXPECT_EQ(estimate_security(15, 1000), 112);
  EXPECT_EQ(estimate_security(14, 600), 93);
  EXPECT_GE(estimate_security(16, 881), 128);
  EXPECT_THROW(estimate_security(9, 100), Error);
  EXPECT_THROW(estimate_security(18, 100), Error);
}

TEST(StaticAnalyzer, SecurityMonotone) {
  for (int n = kMinLogN; n <= kMaxLogN; ++n) {
    int prev = std::numeric_limits<int>::max();
    for (int q = 20; q <= 4000; q += 7) {
      const int s = estimate_security(n, q);
      EXPECT_LE(s, prev);
      prev = s;
      if (n > kMinLogN) {
        EXPECT_GE(s, estimate_security(n - 1, q));
      }
    }
  }
}

TEST(StaticAnalyzer, AnalyzeExamples) {
  const auto g = build_graph("g", {16}, {linear("a", 8), act("b", 3), linear("c", 4)});
  // log_n 15, chain sum 880.
  std::vector<int> chain{60};
  for (int i = 0; i < 20; ++i) chain.push_back(41);
  auto ok = analyze(g, chain_config(15, chain, 40));
  EXPECT_TRUE(ok.depth_ok);
  EXPECT_EQ(ok.sec_bits, 128);
  EXPECT_TRUE(ok.scale_ok);
  EXPECT_TRUE(ok.reasons.empty());

  // log_n 14, chain sum 600.
  std::vector<int> wide{60};
  for (int i = 0; i < 12; ++i) wide.push_back(45);
  const auto insecure = analyze(g, chain_config(14, wide, 40));
  EXPECT_EQ(insecure.sec_bits, 93);
  ASSERT_FALSE(insecure.reasons.empty());
  bool names_security = false;
  for (const auto& r : insecure.reasons) names_security |= r.rfind("security", 0) == 0;
  EXPECT_TRUE(names_security);

  const auto bad_scale = analyze(g, chain_config(15, {60, 40, 40, 40, 40}, 45));
  EXPECT_FALSE(bad_scale.scale_ok);
  ASSERT_FALSE(bad_scale.reasons.empty());
  EXPECT_NE(bad_scale.reasons.front().find("log_scale"), std::string::npos);
}

TEST(StaticAnalyzer, AnalyzeUsesBootstrapPlan) {
  const auto lenet = testing::load_fixture_model("lenet");
  const auto r = analyze(lenet, FheConfig{make_global(16, 9, 40, Embedding::Square), {}});
  EXPECT_TRUE(r.depth_ok);
  ASSERT_TRUE(r.plan);
  EXPECT_EQ(r.plan->boot_count, 2);
}

TEST(StaticAnalyzer, MatchesLevelInterpreter) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 8)(rng);
    const auto g = testing::random_graph(rng, n);
    const int levels = std::uniform_int_distribution<int>(1, 14)(rng);
    FheConfig c{make_global(15, levels, 30, Embedding::Square), {}};
    std::vector<std::string> boots;
    for (std::size_t i = 0; i + 1 < g.layers.size(); ++i) {
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) boots.push_back(g.layers[i].id);
    }
    const auto costs = layer_depth_costs(g, c);
    const auto plan = plan_from_boots(g, c, costs, boots);
    const auto r = check_depth(g, c, &plan);
    const auto oracle = testing::interpret_levels(g, c, boots);
    ASSERT_EQ(r.depth_ok, oracle.ok) << trial;
    ASSERT_EQ(r.remaining, oracle.remaining) << trial;
    ASSERT_EQ(r.first_overflow_layer, oracle.first_overflow) << trial;
  }
}

}  // namespace
}  // namespace ckkstune
