// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckkstune/profile.hpp"

namespace ckkstune {

/// Seconds per multiplication, rotation, bootstrap and memory unit.
/// Defaults are the pre-calibration microbenchmark seeds.
struct CostCoefficients {
  double alpha = 1e-3;
  double beta = 3e-3;
  double gamma = 0.5;
  double delta = 1e-4;

  std::array<double, 4> as_array() const { return {alpha, beta, gamma, delta}; }
  static CostCoefficients from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
  bool operator==(const CostCoefficients&) const = default;
};

double layer_cost(const PrimitiveCounts& counts, const CostCoefficients& coeffs);

struct CostPrediction {
  double total = 0;
  std::vector<double> terms;   // per layer, seconds
  std::vector<double> shares;  // terms / total
};

/// Throws ZeroCost when the total is zero.
CostPrediction predict(std::span<const LayerProfile> profiles, const CostCoefficients& coeffs);

struct Observation {
  PrimitiveCounts counts;
  double seconds = 0;
};

struct Calibration {
  CostCoefficients coeffs;
  bool fallback = false;  // seeds returned unchanged
  bool partial = false;   // some columns never observed; those keep their seed
  std::string warning;
  double r_squared = 0;
  double rss = 0;
  std::vector<double> residuals;
  std::size_t observations = 0;
};

/// Minimum uncentered R^2 for a fit to replace the seeds.
inline constexpr double kMinFitQuality = 0.9;
inline constexpr std::size_t kMinObservations = 4;

/// Least squares on relative residuals (rows weighted by 1/seconds), clipped
/// at zero with one refit on the remaining columns.
/// Too few observations, a rank-deficient design or a poor fit fall back
/// to `seeds` with a warning instead of throwing.
Calibration calibrate(std::span<const Observation> observations, const CostCoefficients& seeds = {});

struct BottleneckWeights {
  double w1 = 0.4;  // runtime share
  double w2 = 0.2;  // slot under-utilization
  double w3 = 0.2;  // normalized rotations
  double w4 = 0.2;  // low noise margin

  BottleneckWeights normalized() const;
};

struct BottleneckScore {
  std::string layer_id;
  std::size_t index = 0;
  double score = 0;
};

double bottleneck_score(const LayerProfile& p, const BottleneckWeights& weights);

/// Descending scores, earlier layers first on ties. Layers without any
/// primitive work are never ranked.
std::vector<BottleneckScore> bottleneck_scores(std::span<const LayerProfile> profiles,
                                               const BottleneckWeights& weights, std::size_t top_k);

nlohmann::json coefficients_to_json(const CostCoefficients& c);
CostCoefficients coefficients_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const Calibration& c);

}  // namespace ckkstune
