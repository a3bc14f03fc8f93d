// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ckkstune/model_ir.hpp"

namespace ckkstune {

struct PrimitiveCounts {
  std::int64_t mul = 0;
  std::int64_t rot = 0;
  std::int64_t boot = 0;
  double mem_cost = 0;

  bool zero() const { return mul == 0 && rot == 0 && boot == 0 && mem_cost == 0; }
  PrimitiveCounts& operator+=(const PrimitiveCounts& o) {
    mul += o.mul;
    rot += o.rot;
    boot += o.boot;
    mem_cost += o.mem_cost;
    return *this;
  }
  friend PrimitiveCounts operator+(PrimitiveCounts a, const PrimitiveCounts& b) { return a += b; }
  bool operator==(const PrimitiveCounts&) const = default;
};

// Structural, performance and numeric statistics of one layer.
struct LayerProfile {
  std::string id;
  LayerKind kind = LayerKind::Linear;
  Shape shape_in;
  Shape shape_out;

  double runtime_fraction = 0;  // r_i
  double slot_utilization = 0;  // u_i
  double rot_norm = 0;          // rho_i
  PrimitiveCounts counts;
  std::int64_t blocks = 0;
  int remaining_levels = 0;

  double layer_mae = 0;
  double eff_bits = 0;
  double noise_margin_bits = 0;
  bool low_margin = false;  // z_i
  int act_degree = 0;
  double act_error = 0;
};

nlohmann::json counts_to_json(const PrimitiveCounts& c);
nlohmann::json profile_to_json(const LayerProfile& p);

}  // namespace ckkstune
