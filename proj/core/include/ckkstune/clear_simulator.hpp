// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/bootstrap_scheduler.hpp"
#include "ckkstune/config_space.hpp"
#include "ckkstune/cost_model.hpp"
#include "ckkstune/profile.hpp"
#include "ckkstune/static_analyzer.hpp"

namespace ckkstune {

/// Ciphertext blocks the layer output occupies, after any parallelism cap.
std::int64_t layer_blocks(const LayerSpec& layer, const FheConfig& config);

/// Primitive counts under the layer's effective packing. `levels_live` is
/// the number of levels the output blocks carry; boot is left at zero.
PrimitiveCounts count_primitives(const LayerSpec& layer, const FheConfig& config, int levels_live = 1);

/// A batch of samples, each of `sample_shape`, stored sample-major.
struct Tensor {
  std::size_t batch = 0;
  Shape sample_shape;
  std::vector<double> data;
};

inline constexpr std::size_t kDefaultCalibrationBatch = 4;
inline constexpr std::uint64_t kDefaultCalibrationSeed = 0x5eed;

/// Uniform [-1, 1] samples from a seeded generator.
Tensor make_calibration_batch(const Shape& sample_shape, std::uint64_t seed = kDefaultCalibrationSeed,
                              std::size_t batch = kDefaultCalibrationBatch);

/// Structural and cost-share parts of every layer profile (no numerics).
std::vector<LayerProfile> structural_profiles(const ModelGraph& graph, const FheConfig& config,
                                              const BootstrapPlan* plan, const CostCoefficients& coeffs);

struct ClearRunReport {
  std::vector<LayerProfile> profiles;
  double global_mae = 0;
  double precision_bits = 0;
  double proxy_latency = 0;
  double final_margin_bits = 0;
  double max_layer_mae = 0;
  int boot_count = 0;

  const LayerProfile* find(std::string_view layer_id) const;
};

/// -log2(mae) for mae > 0, else `cap_bits`.
double precision_from_mae(double mae, double cap_bits);

/// Cleartext forward pass with injected rounding noise, compared against an
/// exact reference pass. Throws BatchShapeMismatch.
ClearRunReport simulate(const ModelGraph& graph, const FheConfig& config, const BootstrapPlan* plan,
                        const Tensor& batch, const CostCoefficients& coeffs);

struct GateConfig {
  double mae_max = 1e-2;
  double precision_min_bits = 8;
  double layer_mae_max = 5e-2;
  int security_target_bits = 128;
  std::optional<double> latency_budget_s;
};

GateConfig gates_from_json(const nlohmann::json& j);
nlohmann::json gates_to_json(const GateConfig& g);

struct GateVerdict {
  bool passed = true;
  std::vector<std::string> reasons;
};

/// Numbers a numeric gate check looks at, from simulation or measurement.
struct NumericOutcome {
  double mae = 0;
  double precision_bits = 0;
  double max_layer_mae = 0;
  std::optional<double> latency_s;
};

GateVerdict check_static_gates(const StaticReport& report, const GateConfig& gates);
GateVerdict check_gates(const StaticReport& report, const NumericOutcome& outcome, const GateConfig& gates);
GateVerdict check_gates(const StaticReport& report, const ClearRunReport& clear, const GateConfig& gates);

nlohmann::json clear_report_to_json(const ClearRunReport& r);

}  // namespace ckkstune
