// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ckkstune/error.hpp"
#include "ckkstune/hashing.hpp"

namespace ckkstune {

using nlohmann::json;

std::string_view to_string(Embedding e) {
  switch (e) {
    case Embedding::Square: return "Square";
    case Embedding::Hybrid: return "Hybrid";
    case Embedding::Diagonal: return "Diagonal";
  }
  return "?";
}

Embedding embedding_from_string(std::string_view name) {
  for (auto e : {Embedding::Square, Embedding::Hybrid, Embedding::Diagonal}) {
    if (to_string(e) == name) return e;
  }
  throw Error(ErrorKind::Schema, "unknown embedding method '" + std::string(name) + "'");
}

int GlobalConfig::log_q_total() const {
  return std::accumulate(modulus_chain.begin(), modulus_chain.end(), 0);
}

const LayerOverride* FheConfig::override_for(std::string_view layer_id) const {
  auto it = overrides.find(std::string(layer_id));
  return it == overrides.end() ? nullptr : &it->second;
}

GlobalConfig make_global(int log_n, int levels, int log_scale, Embedding embedding, int security_target_bits) {
  GlobalConfig g;
  g.log_n = log_n;
  g.log_scale = log_scale;
  g.default_embedding = embedding;
  g.security_target_bits = security_target_bits;
  g.modulus_chain.push_back(kSpecialPrimeBits);
  for (int i = 0; i < levels; ++i) g.modulus_chain.push_back(log_scale);
  return g;
}

std::string_view to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::ShortenModulusTail: return "ShortenModulusTail";
    case DirectionKind::ExtendModulusTail: return "ExtendModulusTail";
    case DirectionKind::RelaxScaleOneStep: return "RelaxScaleOneStep";
    case DirectionKind::TightenScaleOneStep: return "TightenScaleOneStep";
    case DirectionKind::IncreaseBootstrapInterval: return "IncreaseBootstrapInterval";
    case DirectionKind::DecreaseBootstrapInterval: return "DecreaseBootstrapInterval";
    case DirectionKind::SwitchPackingSquareToHybrid: return "SwitchPackingSquareToHybrid";
    case DirectionKind::SwitchPackingHybridToSquare: return "SwitchPackingHybridToSquare";
    case DirectionKind::AdjustBsgsGapUp: return "AdjustBsgsGapUp";
    case DirectionKind::AdjustBsgsGapDown: return "AdjustBsgsGapDown";
    case DirectionKind::LowerActivationDegree: return "LowerActivationDegree";
    case DirectionKind::CapParallelBlocks: return "CapParallelBlocks";
  }
  return "?";
}

DirectionKind direction_kind_from_string(std::string_view name) {
  for (auto k : kAllDirectionKinds) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::Schema, "unknown direction kind '" + std::string(name) + "'");
}

bool is_layer_local(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::SwitchPackingSquareToHybrid:
    case DirectionKind::SwitchPackingHybridToSquare:
    case DirectionKind::AdjustBsgsGapUp:
    case DirectionKind::AdjustBsgsGapDown:
    case DirectionKind::LowerActivationDegree:
    case DirectionKind::CapParallelBlocks:
      return true;
    default:
      return false;
  }
}

bool increases_depth(DirectionKind) { return false; }

std::string_view to_string(Scope scope) {
  return scope == Scope::GlobalAgent ? "GlobalAgent" : "LayerAgent";
}

std::string describe(const Direction& d) {
  std::string out(to_string(d.kind));
  if (d.target_layer || d.arg) {
    out += "(";
    if (d.target_layer) out += *d.target_layer;
    if (d.arg) out += (d.target_layer ? ", " : "") + std::to_string(*d.arg);
    out += ")";
  }
  return out;
}

json direction_to_json(const Direction& d) {
  json j = {{"kind", to_string(d.kind)}};
  if (d.target_layer) j["target_layer"] = *d.target_layer;
  if (d.arg) j["arg"] = *d.arg;
  return j;
}

Direction direction_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorKind::Schema, "direction must be an object with a string 'kind'");
  }
  Direction d;
  d.kind = direction_kind_from_string(j["kind"].get<std::string>());
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") continue;
    if (key == "target_layer") {
      if (!v.is_string()) throw Error(ErrorKind::Schema, "direction target_layer must be a string");
      d.target_layer = v.get<std::string>();
    } else if (key == "arg") {
      if (!v.is_number_integer()) throw Error(ErrorKind::Schema, "direction arg must be an integer");
      d.arg = v.get<int>();
    } else {
      throw Error(ErrorKind::Schema, "unexpected direction field '" + key + "'");
    }
  }
  return d;
}

Embedding effective_embedding(const FheConfig& config, const LayerSpec& layer) {
  const auto* o = config.override_for(layer.id);
  return o && o->embedding_method ? *o->embedding_method : config.global.default_embedding;
}

std::int64_t diagonal_count(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Linear: {
      std::int64_t n = 1;
      while (n < layer.elements_in()) n <<= 1;
      return n;
    }
    case LayerKind::Conv2d:
      return static_cast<std::int64_t>(layer.kernel) * layer.kernel;
    default:
      return 0;
  }
}

int default_bsgs_gap(const LayerSpec& layer) {
  const auto n = diagonal_count(layer);
  if (n <= 1) return 1;
  return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
}

int effective_bsgs_gap(const FheConfig& config, const LayerSpec& layer) {
  const auto* o = config.override_for(layer.id);
  return o && o->bsgs_gap ? *o->bsgs_gap : default_bsgs_gap(layer);
}

int effective_act_degree(const FheConfig& config, const LayerSpec& layer) {
  const auto* o = config.override_for(layer.id);
  return o && o->act_degree ? *o->act_degree : layer.act_degree;
}

const LayerSpec* activation_target(const ModelGraph& graph, std::string_view layer_id) {
  const auto idx = graph.index_of(layer_id);
  if (!idx) return nullptr;
  const auto& layer = graph.layers[*idx];
  if (layer.kind == LayerKind::ActPoly) return &layer;
  const bool fusable = layer.kind == LayerKind::Conv2d || layer.kind == LayerKind::Linear;
  if (fusable && *idx + 1 < graph.layers.size() && graph.layers[*idx + 1].kind == LayerKind::ActPoly) {
    return &graph.layers[*idx + 1];
  }
  return nullptr;
}

void validate_global(const GlobalConfig& g) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvariantViolation, msg); };
  if (g.log_n < kMinLogN || g.log_n > kMaxLogN) {
    fail("log_n " + std::to_string(g.log_n) + " outside [10, 17]");
  }
  if (g.modulus_chain.size() < 2) fail("modulus chain needs at least 2 primes");
  for (int bits : g.modulus_chain) {
    if (bits < kMinPrimeBits || bits > kMaxPrimeBits) {
      fail("modulus chain entry " + std::to_string(bits) + " outside [20, 60] bits");
    }
  }
  if (g.log_scale < kMinPrimeBits || g.log_scale > kMaxPrimeBits) {
    fail("log_scale " + std::to_string(g.log_scale) + " outside [20, 60]");
  }
  if (!(g.sigma > 0)) fail("sigma must be positive");
  if (g.bootstrap_interval < 1) fail("bootstrap_interval must be >= 1");
  if (g.security_target_bits < 0) fail("security_target_bits must be >= 0");
}

bool scale_consistent(const GlobalConfig& g) {
  for (std::size_t i = 1; i < g.modulus_chain.size(); ++i) {
    if (g.log_scale > g.modulus_chain[i]) return false;
  }
  return true;
}

void validate_config(const ModelGraph& graph, const FheConfig& config) {
  validate_global(config.global);
  for (const auto& [id, o] : config.overrides) {
    auto fail = [&id = id](const std::string& msg) {
      throw Error(ErrorKind::InvariantViolation, "override '" + id + "': " + msg);
    };
    const auto* layer = graph.find(id);
    if (!layer) fail("no such layer");
    const bool packed = layer->kind == LayerKind::Conv2d || layer->kind == LayerKind::Linear;
    if (o.embedding_method && !packed) fail("embedding_method only applies to Conv2d/Linear");
    if (o.bsgs_gap) {
      if (!packed) fail("bsgs_gap only applies to Conv2d/Linear");
      if (*o.bsgs_gap < 1 || *o.bsgs_gap > diagonal_count(*layer)) fail("bsgs_gap out of range");
    }
    if (o.max_parallel_blocks) {
      if (layer->kind == LayerKind::Flatten) fail("max_parallel_blocks does not apply to Flatten");
      if (*o.max_parallel_blocks < 1) fail("max_parallel_blocks must be >= 1");
    }
    if (o.act_degree) {
      if (layer->kind != LayerKind::ActPoly) fail("act_degree only applies to ActPoly layers");
      if (*o.act_degree < 1) fail("act_degree must be >= 1");
      if (*o.act_degree > layer->act_degree) fail("act_degree may only lower the declared degree");
    }
  }
}

namespace {

[[noreturn]] void invariant(const std::string& msg) { throw Error(ErrorKind::InvariantViolation, msg); }

const LayerSpec& require_target(const ModelGraph& graph, const Direction& dir) {
  if (!dir.target_layer) invariant(std::string(to_string(dir.kind)) + " requires a target_layer");
  const auto* layer = graph.find(*dir.target_layer);
  if (!layer) invariant("unknown target layer '" + *dir.target_layer + "'");
  return *layer;
}

void require_packed(const LayerSpec& layer, DirectionKind kind) {
  if (layer.kind != LayerKind::Conv2d && layer.kind != LayerKind::Linear) {
    invariant(std::string(to_string(kind)) + " needs a Conv2d/Linear target, got '" + layer.id + "'");
  }
}

// Drop override fields that restate the default so inverse edits cancel.
void normalize_override(const FheConfig& base, FheConfig& cfg, const LayerSpec& layer) {
  auto it = cfg.overrides.find(layer.id);
  if (it == cfg.overrides.end()) return;
  auto& o = it->second;
  if (o.embedding_method && *o.embedding_method == base.global.default_embedding) o.embedding_method.reset();
  if (o.bsgs_gap && *o.bsgs_gap == default_bsgs_gap(layer)) o.bsgs_gap.reset();
  if (o.act_degree && *o.act_degree == layer.act_degree) o.act_degree.reset();
  if (o.empty()) cfg.overrides.erase(it);
}

Embedding non_hybrid_baseline(const FheConfig& config) {
  return config.global.default_embedding == Embedding::Hybrid ? Embedding::Square
                                                              : config.global.default_embedding;
}

}  // namespace

FheConfig apply_direction(const ModelGraph& graph, const FheConfig& config, const Direction& dir, Scope scope,
                          const LayerSet& depth_mask) {
  const bool local = is_layer_local(dir.kind);
  if (scope == Scope::LayerAgent && !local) {
    throw Error(ErrorKind::ScopeViolation,
                "layer agent may not apply global direction " + std::string(to_string(dir.kind)));
  }
  if (!local && dir.target_layer) {
    invariant(std::string(to_string(dir.kind)) + " is global and takes no target_layer");
  }
  if (dir.arg && dir.kind != DirectionKind::CapParallelBlocks) {
    invariant(std::string(to_string(dir.kind)) + " takes no arg");
  }

  FheConfig out = config;
  auto& g = out.global;
  switch (dir.kind) {
    case DirectionKind::ShortenModulusTail:
      if (g.modulus_chain.size() <= 2) invariant("modulus chain cannot drop below 2 primes");
      g.modulus_chain.pop_back();
      break;
    case DirectionKind::ExtendModulusTail:
      g.modulus_chain.push_back(g.log_scale);
      break;
    case DirectionKind::RelaxScaleOneStep:
      g.log_scale -= kScaleStep;
      break;
    case DirectionKind::TightenScaleOneStep:
      g.log_scale += kScaleStep;
      if (!scale_consistent(g)) invariant("log_scale would exceed an interior chain prime");
      break;
    case DirectionKind::IncreaseBootstrapInterval:
      if (!depth_mask.empty()) {
        throw Error(ErrorKind::MaskViolation, "bootstrap interval widening blocked by depth mask");
      }
      g.bootstrap_interval += 1;
      break;
    case DirectionKind::DecreaseBootstrapInterval:
      g.bootstrap_interval -= 1;
      break;
    case DirectionKind::SwitchPackingSquareToHybrid:
    case DirectionKind::SwitchPackingHybridToSquare: {
      const auto& layer = require_target(graph, dir);
      require_packed(layer, dir.kind);
      const bool hybrid = effective_embedding(config, layer) == Embedding::Hybrid;
      const bool to_hybrid = dir.kind == DirectionKind::SwitchPackingSquareToHybrid;
      if (hybrid == to_hybrid) invariant("layer '" + layer.id + "' already uses the requested packing");
      out.overrides[layer.id].embedding_method = to_hybrid ? Embedding::Hybrid : non_hybrid_baseline(config);
      normalize_override(config, out, layer);
      break;
    }
    case DirectionKind::AdjustBsgsGapUp:
    case DirectionKind::AdjustBsgsGapDown: {
      const auto& layer = require_target(graph, dir);
      require_packed(layer, dir.kind);
      const int gap = effective_bsgs_gap(config, layer) + (dir.kind == DirectionKind::AdjustBsgsGapUp ? 1 : -1);
      if (gap < 1 || gap > diagonal_count(layer)) invariant("bsgs_gap would leave [1, diagonals]");
      out.overrides[layer.id].bsgs_gap = gap;
      normalize_override(config, out, layer);
      break;
    }
    case DirectionKind::LowerActivationDegree: {
      require_target(graph, dir);
      const auto* act = activation_target(graph, *dir.target_layer);
      if (!act) invariant("layer '" + *dir.target_layer + "' has no activation polynomial");
      const int degree = effective_act_degree(config, *act);
      std::optional<int> next;
      for (int d : kActivationLadder) {
        if (d < degree) {
          next = d;
          break;
        }
      }
      if (!next) invariant("activation '" + act->id + "' is already at the lowest degree");
      out.overrides[act->id].act_degree = *next;
      normalize_override(config, out, *act);
      break;
    }
    case DirectionKind::CapParallelBlocks: {
      const auto& layer = require_target(graph, dir);
      if (layer.kind == LayerKind::Flatten) invariant("Flatten has no parallel blocks");
      if (!dir.arg || *dir.arg < 1) invariant("CapParallelBlocks needs arg >= 1");
      out.overrides[layer.id].max_parallel_blocks = *dir.arg;
      break;
    }
  }

  if (local && increases_depth(dir.kind) && depth_mask.count(*dir.target_layer)) {
    throw Error(ErrorKind::MaskViolation, "layer '" + *dir.target_layer + "' is depth-masked");
  }
  validate_config(graph, out);
  if (dir.kind == DirectionKind::TightenScaleOneStep || dir.kind == DirectionKind::ShortenModulusTail) {
    if (!scale_consistent(out.global)) invariant("patched config has an inconsistent scale");
  }
  if (out == config) invariant(describe(dir) + " has no effect");
  return out;
}

std::vector<Direction> enumerate_directions(const ModelGraph& graph, const FheConfig& config, Scope scope,
                                            std::span<const std::string> bottlenecks, const LayerSet& depth_mask) {
  std::vector<Direction> candidates;
  if (scope == Scope::GlobalAgent) {
    for (auto kind : kAllDirectionKinds) {
      if (!is_layer_local(kind)) candidates.push_back({kind, std::nullopt, std::nullopt});
    }
  } else {
    for (const auto& id : bottlenecks) {
      const auto* layer = graph.find(id);
      if (!layer) continue;
      for (auto kind : kAllDirectionKinds) {
        if (!is_layer_local(kind)) continue;
        Direction d{kind, id, std::nullopt};
        if (kind == DirectionKind::CapParallelBlocks) {
          const auto* o = config.override_for(id);
          const int cap = o && o->max_parallel_blocks ? *o->max_parallel_blocks - 1 : 2;
          if (cap < 1) continue;
          d.arg = cap;
        }
        candidates.push_back(std::move(d));
      }
    }
  }
  std::vector<Direction> valid;
  for (auto& d : candidates) {
    try {
      apply_direction(graph, config, d, scope, depth_mask);
      valid.push_back(std::move(d));
    } catch (const Error&) {
    }
  }
  return valid;
}

json config_to_json(const FheConfig& config) {
  const auto& g = config.global;
  json overrides = json::object();
  for (const auto& [id, o] : config.overrides) {
    json j = json::object();
    if (o.embedding_method) j["embedding_method"] = to_string(*o.embedding_method);
    if (o.bsgs_gap) j["bsgs_gap"] = *o.bsgs_gap;
    if (o.max_parallel_blocks) j["max_parallel_blocks"] = *o.max_parallel_blocks;
    if (o.act_degree) j["act_degree"] = *o.act_degree;
    overrides[id] = std::move(j);
  }
  return {{"global",
           {{"log_n", g.log_n},
            {"modulus_chain", g.modulus_chain},
            {"log_scale", g.log_scale},
            {"sigma", g.sigma},
            {"default_embedding", to_string(g.default_embedding)},
            {"bootstrap_interval", g.bootstrap_interval},
            {"security_target_bits", g.security_target_bits}}},
          {"overrides", std::move(overrides)}};
}

namespace {

int get_int(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw Error(ErrorKind::Schema, std::string("config field '") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

FheConfig config_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("global") || !doc["global"].is_object()) {
    throw Error(ErrorKind::Schema, "config document needs a 'global' object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "global" && key != "overrides") throw Error(ErrorKind::Schema, "unexpected config field '" + key + "'");
  }
  const auto& gj = doc["global"];
  static const std::set<std::string> known = {"log_n",      "modulus_chain",      "log_scale",
                                              "sigma",      "default_embedding",  "bootstrap_interval",
                                              "security_target_bits"};
  for (const auto& [key, _] : gj.items()) {
    if (!known.count(key)) throw Error(ErrorKind::Schema, "unexpected global field '" + key + "'");
  }
  for (const char* key : {"log_n", "modulus_chain", "log_scale"}) {
    if (!gj.contains(key)) throw Error(ErrorKind::Schema, std::string("global missing '") + key + "'");
  }
  FheConfig cfg;
  auto& g = cfg.global;
  g.log_n = get_int(gj, "log_n");
  g.log_scale = get_int(gj, "log_scale");
  if (!gj["modulus_chain"].is_array()) throw Error(ErrorKind::Schema, "modulus_chain must be a list");
  for (const auto& v : gj["modulus_chain"]) {
    if (!v.is_number_integer()) throw Error(ErrorKind::Schema, "modulus_chain entries must be integers");
    g.modulus_chain.push_back(v.get<int>());
  }
  if (gj.contains("sigma")) {
    if (!gj["sigma"].is_number()) throw Error(ErrorKind::Schema, "sigma must be a number");
    g.sigma = gj["sigma"].get<double>();
  }
  if (gj.contains("default_embedding")) {
    if (!gj["default_embedding"].is_string()) throw Error(ErrorKind::Schema, "default_embedding must be a string");
    g.default_embedding = embedding_from_string(gj["default_embedding"].get<std::string>());
  }
  if (gj.contains("bootstrap_interval")) g.bootstrap_interval = get_int(gj, "bootstrap_interval");
  if (gj.contains("security_target_bits")) g.security_target_bits = get_int(gj, "security_target_bits");
  validate_global(g);

  if (doc.contains("overrides")) {
    if (!doc["overrides"].is_object()) throw Error(ErrorKind::Schema, "overrides must be an object");
    for (const auto& [id, oj] : doc["overrides"].items()) {
      if (!oj.is_object()) throw Error(ErrorKind::Schema, "override '" + id + "' must be an object");
      LayerOverride o;
      for (const auto& [key, v] : oj.items()) {
        if (key == "embedding_method") {
          if (!v.is_string()) throw Error(ErrorKind::Schema, "embedding_method must be a string");
          o.embedding_method = embedding_from_string(v.get<std::string>());
        } else if (key == "bsgs_gap") {
          o.bsgs_gap = get_int(oj, "bsgs_gap");
        } else if (key == "max_parallel_blocks") {
          o.max_parallel_blocks = get_int(oj, "max_parallel_blocks");
        } else if (key == "act_degree") {
          o.act_degree = get_int(oj, "act_degree");
        } else {
          throw Error(ErrorKind::Schema, "unexpected override field '" + key + "'");
        }
      }
      cfg.overrides[id] = o;
    }
  }
  return cfg;
}

FheConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("config document is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

std::string config_digest(const FheConfig& config) { return sha256_hex(config_to_json(config).dump()); }

}  // namespace ckkstune
