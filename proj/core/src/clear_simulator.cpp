// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/clear_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ckkstune/error.hpp"
#include "ckkstune/hashing.hpp"

namespace ckkstune {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t ceil_log2(std::int64_t v) {
  std::int64_t bits = 0;
  while ((std::int64_t{1} << bits) < v) ++bits;
  return bits;
}

// Uniform [0, 1) from the top 53 bits.
double unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

constexpr std::uint64_t kWeightSeed = 0x77e1a5;
constexpr std::uint64_t kNoiseSeed = 0x9015e;
constexpr double kActivationLipschitz = 1.1;

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double margin_bits(const GlobalConfig& g, int remaining) {
  double bits = 0;
  const int top = std::min(remaining, g.usable_levels());
  for (int i = 1; i <= top; ++i) bits += g.modulus_chain[static_cast<std::size_t>(i)];
  return bits;
}

// Dense weights for a Linear ([out, in]) or Conv2d ([c_out, c_in*k*k]) layer.
struct Weights {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> w;
  double max_row_norm = 0;
};

Weights make_weights(const LayerSpec& layer) {
  Weights out;
  if (layer.kind == LayerKind::Linear) {
    out.rows = layer.elements_out();
    out.cols = layer.elements_in();
  } else {
    out.rows = layer.channels_out;
    out.cols = static_cast<std::int64_t>(layer.channels_in) * layer.kernel * layer.kernel;
  }
  const double bound = std::sqrt(3.0 / static_cast<double>(out.cols));
  std::mt19937_64 rng(stable_hash64(layer.id + "/" + std::string(to_string(layer.kind)), kWeightSeed));
  out.w.resize(static_cast<std::size_t>(out.rows * out.cols));
  for (auto& v : out.w) v = bound * (2.0 * unit(rng()) - 1.0);
  for (std::int64_t r = 0; r < out.rows; ++r) {
    double s = 0;
    for (std::int64_t c = 0; c < out.cols; ++c) s += out.w[static_cast<std::size_t>(r * out.cols + c)] *
                                                    out.w[static_cast<std::size_t>(r * out.cols + c)];
    out.max_row_norm = std::max(out.max_row_norm, std::sqrt(s));
  }
  return out;
}

// One sample through one layer.
void forward(const LayerSpec& layer, const Weights& wt, const double* in, double* out) {
  switch (layer.kind) {
    case LayerKind::Linear:
      for (std::int64_t r = 0; r < wt.rows; ++r) {
        double s = 0;
        const double* row = &wt.w[static_cast<std::size_t>(r * wt.cols)];
        for (std::int64_t c = 0; c < wt.cols; ++c) s += row[c] * in[c];
        out[r] = s;
      }
      break;
    case LayerKind::Conv2d: {
      const auto h = layer.shape_in[1], w = layer.shape_in[2];
      const auto oh = layer.shape_out[1], ow = layer.shape_out[2];
      const int k = layer.kernel, st = layer.stride;
      for (std::int64_t co = 0; co < layer.channels_out; ++co) {
        const double* kern = &wt.w[static_cast<std::size_t>(co * wt.cols)];
        for (std::int64_t y = 0; y < oh; ++y) {
          for (std::int64_t x = 0; x < ow; ++x) {
            double s = 0;
            for (std::int64_t ci = 0; ci < layer.channels_in; ++ci) {
              for (int dy = 0; dy < k; ++dy) {
                const double* src = in + (ci * h + y * st + dy) * w + x * st;
                const double* kr = kern + (ci * k + dy) * k;
                for (int dx = 0; dx < k; ++dx) s += kr[dx] * src[dx];
              }
            }
            out[(co * oh + y) * ow + x] = s;
          }
        }
      }
      break;
    }
    case LayerKind::ActPoly:
      for (std::int64_t i = 0; i < layer.elements_out(); ++i) out[i] = silu(in[i]);
      break;
    case LayerKind::AvgPool: {
      const auto c = layer.shape_in[0], h = layer.shape_in[1], w = layer.shape_in[2];
      const auto oh = layer.shape_out[1], ow = layer.shape_out[2];
      const int st = layer.stride;
      const double norm = 1.0 / (st * st);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t y = 0; y < oh; ++y) {
          for (std::int64_t x = 0; x < ow; ++x) {
            double s = 0;
            for (int dy = 0; dy < st; ++dy) {
              for (int dx = 0; dx < st; ++dx) s += in[(ch * h + y * st + dy) * w + x * st + dx];
            }
            out[(ch * oh + y) * ow + x] = s * norm;
          }
        }
      }
      break;
    }
    case LayerKind::Flatten:
      std::copy(in, in + layer.elements_in(), out);
      break;
  }
}

}  // namespace

std::int64_t layer_blocks(const LayerSpec& layer, const FheConfig& config) {
  const std::int64_t blocks = ceil_div(layer.elements_out(), config.global.slots());
  const auto* o = config.override_for(layer.id);
  if (o && o->max_parallel_blocks) return std::min<std::int64_t>(blocks, *o->max_parallel_blocks);
  return blocks;
}

PrimitiveCounts count_primitives(const LayerSpec& layer, const FheConfig& config, int levels_live) {
  PrimitiveCounts c;
  switch (layer.kind) {
    case LayerKind::Linear: {
      const std::int64_t n = diagonal_count(layer);
      c.mul = n;
      if (effective_embedding(config, layer) == Embedding::Hybrid) {
        const std::int64_t g = effective_bsgs_gap(config, layer);
        c.rot = (g - 1) + ceil_div(n, g) - 1;
      } else {
        c.rot = n - 1;
      }
      break;
    }
    case LayerKind::Conv2d: {
      const std::int64_t k2 = static_cast<std::int64_t>(layer.kernel) * layer.kernel;
      c.mul = k2 * layer.channels_in;
      c.rot = (k2 - 1) + (effective_embedding(config, layer) == Embedding::Hybrid ? ceil_log2(layer.channels_in)
                                                                                   : layer.channels_in - 1);
      break;
    }
    case LayerKind::ActPoly:
      c.mul = std::max(0, effective_act_degree(config, layer) - 1);
      break;
    case LayerKind::AvgPool:
      c.mul = 1;
      c.rot = ceil_log2(static_cast<std::int64_t>(layer.stride) * layer.stride);
      break;
    case LayerKind::Flatten:
      return c;
  }
  c.mem_cost = static_cast<double>(layer_blocks(layer, config) * std::max(levels_live, 0));
  return c;
}

Tensor make_calibration_batch(const Shape& sample_shape, std::uint64_t seed, std::size_t batch) {
  Tensor t{batch, sample_shape, {}};
  std::mt19937_64 rng(seed);
  t.data.resize(batch * static_cast<std::size_t>(element_count(sample_shape)));
  for (auto& v : t.data) v = 2.0 * unit(rng()) - 1.0;
  return t;
}

std::vector<LayerProfile> structural_profiles(const ModelGraph& graph, const FheConfig& config,
                                              const BootstrapPlan* plan, const CostCoefficients& coeffs) {
  const auto& g = config.global;
  const auto depth = check_depth(graph, config, plan);
  const auto slots = static_cast<double>(g.slots());
  std::vector<LayerProfile> profiles;
  profiles.reserve(graph.layers.size());
  std::int64_t max_rot = 0;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& layer = graph.layers[i];
    LayerProfile p;
    p.id = layer.id;
    p.kind = layer.kind;
    p.shape_in = layer.shape_in;
    p.shape_out = layer.shape_out;
    p.remaining_levels = std::max(0, depth.remaining[i]);
    p.counts = count_primitives(layer, config, p.remaining_levels + 1);
    if (plan && plan->boots_after(layer.id)) p.counts.boot = 1;
    p.blocks = layer.kind == LayerKind::Flatten ? 0 : layer_blocks(layer, config);
    const auto in = static_cast<double>(layer.elements_in());
    p.slot_utilization = std::min(1.0, in / (std::ceil(in / slots) * slots));
    p.noise_margin_bits = margin_bits(g, p.remaining_levels);
    p.low_margin = p.noise_margin_bits < 2.0 * g.log_scale;
    if (layer.kind == LayerKind::ActPoly) {
      p.act_degree = effective_act_degree(config, layer);
      p.act_error = layer.act_error;
    }
    max_rot = std::max(max_rot, p.counts.rot);
    profiles.push_back(std::move(p));
  }
  for (auto& p : profiles) {
    p.rot_norm = max_rot > 0 ? static_cast<double>(p.counts.rot) / static_cast<double>(max_rot) : 0.0;
  }
  try {
    const auto pred = predict(profiles, coeffs);
    for (std::size_t i = 0; i < profiles.size(); ++i) profiles[i].runtime_fraction = pred.shares[i];
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroCost) throw;
    for (auto& p : profiles) p.runtime_fraction = 1.0 / static_cast<double>(profiles.size());
  }
  return profiles;
}

const LayerProfile* ClearRunReport::find(std::string_view layer_id) const {
  for (const auto& p : profiles) {
    if (p.id == layer_id) return &p;
  }
  return nullptr;
}

double precision_from_mae(double mae, double cap_bits) { return mae > 0 ? -std::log2(mae) : cap_bits; }

ClearRunReport simulate(const ModelGraph& graph, const FheConfig& config, const BootstrapPlan* plan,
                        const Tensor& batch, const CostCoefficients& coeffs) {
  if (batch.sample_shape != graph.input_shape ||
      batch.data.size() != batch.batch * static_cast<std::size_t>(element_count(graph.input_shape)) ||
      batch.batch == 0) {
    throw Error(ErrorKind::BatchShapeMismatch, "calibration batch does not match the model input shape");
  }
  ClearRunReport report;
  report.profiles = structural_profiles(graph, config, plan, coeffs);
  report.boot_count = plan ? plan->boot_count : 0;
  try {
    report.proxy_latency = predict(report.profiles, coeffs).total;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroCost) throw;
  }

  const double step = std::ldexp(1.0, -config.global.log_scale);
  const auto costs = layer_depth_costs(graph, config);
  std::vector<double> ref = batch.data;
  std::vector<double> sim = batch.data;
  std::size_t in_size = static_cast<std::size_t>(element_count(graph.input_shape));
  double envelope = 0;

  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& layer = graph.layers[i];
    const std::size_t out_size = static_cast<std::size_t>(layer.elements_out());
    Weights wt;
    double gain = 1.0;
    if (layer.kind == LayerKind::Linear || layer.kind == LayerKind::Conv2d) {
      wt = make_weights(layer);
      gain = wt.max_row_norm;
    } else if (layer.kind == LayerKind::ActPoly) {
      gain = kActivationLipschitz;
    }
    std::vector<double> ref_out(batch.batch * out_size), sim_out(batch.batch * out_size);
    for (std::size_t b = 0; b < batch.batch; ++b) {
      forward(layer, wt, &ref[b * in_size], &ref_out[b * out_size]);
      forward(layer, wt, &sim[b * in_size], &sim_out[b * out_size]);
    }

    // One rounding event per consumed level, plus one for a bootstrap.
    const int events = costs[i] + (plan && plan->boots_after(layer.id) ? 1 : 0);
    if (events > 0) {
      std::mt19937_64 rng(stable_hash64(layer.id, kNoiseSeed + i));
      for (auto& v : sim_out) {
        for (int e = 0; e < events; ++e) v += step * (unit(rng()) - 0.5);
      }
    }
    envelope = gain * envelope + (layer.kind == LayerKind::ActPoly ? layer.act_error : 0.0);

    double abs_sum = 0;
    for (std::size_t k = 0; k < ref_out.size(); ++k) abs_sum += std::abs(sim_out[k] - ref_out[k]);
    auto& p = report.profiles[i];
    p.layer_mae = abs_sum / static_cast<double>(ref_out.size()) + envelope;
    p.eff_bits = precision_from_mae(p.layer_mae, std::min<double>(config.global.log_scale, p.noise_margin_bits));
    report.max_layer_mae = std::max(report.max_layer_mae, p.layer_mae);

    ref = std::move(ref_out);
    sim = std::move(sim_out);
    in_size = out_size;
  }

  const auto& last = report.profiles.back();
  report.global_mae = last.layer_mae;
  report.final_margin_bits = last.noise_margin_bits;
  report.precision_bits =
      precision_from_mae(report.global_mae, std::min<double>(config.global.log_scale, report.final_margin_bits));
  return report;
}

GateConfig gates_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "gates must be an object");
  GateConfig g;
  for (const auto& [key, v] : j.items()) {
    if (!v.is_number()) throw Error(ErrorKind::Schema, "gate '" + key + "' must be a number");
    if (key == "mae_max") g.mae_max = v.get<double>();
    else if (key == "precision_min_bits") g.precision_min_bits = v.get<double>();
    else if (key == "layer_mae_max") g.layer_mae_max = v.get<double>();
    else if (key == "security_target_bits") g.security_target_bits = v.get<int>();
    else if (key == "latency_budget_s") g.latency_budget_s = v.get<double>();
    else throw Error(ErrorKind::Schema, "unexpected gate '" + key + "'");
  }
  if (!(g.mae_max > 0) || !(g.layer_mae_max > 0) || g.precision_min_bits < 0 || g.security_target_bits < 0 ||
      (g.latency_budget_s && !(*g.latency_budget_s > 0))) {
    throw Error(ErrorKind::Schema, "gate thresholds out of range");
  }
  return g;
}

nlohmann::json gates_to_json(const GateConfig& g) {
  nlohmann::json j = {{"mae_max", g.mae_max},
                      {"precision_min_bits", g.precision_min_bits},
                      {"layer_mae_max", g.layer_mae_max},
                      {"security_target_bits", g.security_target_bits}};
  if (g.latency_budget_s) j["latency_budget_s"] = *g.latency_budget_s;
  return j;
}

GateVerdict check_static_gates(const StaticReport& s, const GateConfig& gates) {
  GateVerdict v;
  auto fail = [&](std::string reason) {
    v.passed = false;
    v.reasons.push_back(std::move(reason));
  };
  if (!s.depth_ok) fail("depth: modulus chain exhausted");
  if (!s.scale_ok) fail("scale: log_scale exceeds an interior chain prime");
  if (s.sec_bits < gates.security_target_bits) {
    fail("security: " + std::to_string(s.sec_bits) + " bits < " + std::to_string(gates.security_target_bits));
  }
  return v;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

GateVerdict check_gates(const StaticReport& s, const NumericOutcome& o, const GateConfig& gates) {
  GateVerdict v = check_static_gates(s, gates);
  auto fail = [&](std::string reason) {
    v.passed = false;
    v.reasons.push_back(std::move(reason));
  };
  if (!(o.mae <= gates.mae_max)) fail("mae: " + num(o.mae) + " > " + num(gates.mae_max));
  if (!(o.precision_bits >= gates.precision_min_bits)) {
    fail("precision: " + num(o.precision_bits) + " bits < " + num(gates.precision_min_bits));
  }
  if (!(o.max_layer_mae <= gates.layer_mae_max)) {
    fail("layer mae: " + num(o.max_layer_mae) + " > " + num(gates.layer_mae_max));
  }
  if (gates.latency_budget_s && o.latency_s && *o.latency_s > *gates.latency_budget_s) {
    fail("latency: " + num(*o.latency_s) + " s > " + num(*gates.latency_budget_s) + " s");
  }
  return v;
}

GateVerdict check_gates(const StaticReport& s, const ClearRunReport& c, const GateConfig& gates) {
  return check_gates(s, NumericOutcome{c.global_mae, c.precision_bits, c.max_layer_mae, std::nullopt}, gates);
}

nlohmann::json counts_to_json(const PrimitiveCounts& c) {
  return {{"mul", c.mul}, {"rot", c.rot}, {"boot", c.boot}, {"mem_cost", c.mem_cost}};
}

nlohmann::json profile_to_json(const LayerProfile& p) {
  return {{"id", p.id},
          {"kind", to_string(p.kind)},
          {"shape_in", p.shape_in},
          {"shape_out", p.shape_out},
          {"runtime_fraction", p.runtime_fraction},
          {"slot_utilization", p.slot_utilization},
          {"rot_norm", p.rot_norm},
          {"counts", counts_to_json(p.counts)},
          {"blocks", p.blocks},
          {"remaining_levels", p.remaining_levels},
          {"layer_mae", p.layer_mae},
          {"eff_bits", p.eff_bits},
          {"noise_margin_bits", p.noise_margin_bits},
          {"low_margin", p.low_margin},
          {"act_degree", p.act_degree},
          {"act_error", p.act_error}};
}

nlohmann::json clear_report_to_json(const ClearRunReport& r) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& p : r.profiles) profiles.push_back(profile_to_json(p));
  return {{"global_mae", r.global_mae},
          {"precision_bits", r.precision_bits},
          {"proxy_latency", r.proxy_latency},
          {"final_margin_bits", r.final_margin_bits},
          {"max_layer_mae", r.max_layer_mae},
          {"boot_count", r.boot_count},
          {"profiles", std::move(profiles)}};
}

}  // namespace ckkstune
