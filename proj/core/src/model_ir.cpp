// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include "ckkstune/model_ir.hpp"

#include <algorithm>
#include <set>

#include "ckkstune/error.hpp"
#include "ckkstune/hashing.hpp"

namespace ckkstune {

using nlohmann::json;

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

const std::set<std::string>& allowed_fields(LayerKind kind) {
  static const std::map<LayerKind, std::set<std::string>> fields = {
      {LayerKind::Linear, {}},
      {LayerKind::Conv2d, {"kernel", "stride", "channels_in", "channels_out"}},
      {LayerKind::ActPoly, {"act_degree", "act_error"}},
      {LayerKind::AvgPool, {"stride"}},
      {LayerKind::Flatten, {}},
  };
  return fields.at(kind);
}

int require_int(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::Schema, where + ": field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

Shape require_shape(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) {
    throw Error(ErrorKind::Schema, what + " must be a nonempty integer list");
  }
  Shape s;
  for (const auto& d : v) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 1) {
      throw Error(ErrorKind::Schema, what + " must contain positive integers");
    }
    s.push_back(d.get<std::int64_t>());
  }
  return s;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return "Linear";
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::ActPoly: return "ActPoly";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::Flatten: return "Flatten";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::Linear, LayerKind::Conv2d, LayerKind::ActPoly, LayerKind::AvgPool,
                 LayerKind::Flatten}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::UnknownKind, "unknown layer kind '" + std::string(name) + "'");
}

std::int64_t element_count(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

const LayerSpec* ModelGraph::find(std::string_view id) const {
  for (const auto& l : layers) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

std::optional<std::size_t> ModelGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return i;
  }
  return std::nullopt;
}

int depth_cost(LayerKind kind, int degree) {
  switch (kind) {
    case LayerKind::Linear:
    case LayerKind::Conv2d:
    case LayerKind::AvgPool:
      return 1;
    case LayerKind::Flatten:
      return 0;
    case LayerKind::ActPoly: {
      // ceil(log2(d + 1)) without floating point
      int levels = 0;
      while ((std::int64_t{1} << levels) < static_cast<std::int64_t>(degree) + 1) ++levels;
      return levels;
    }
  }
  return 0;
}

Shape infer_output_shape(const LayerSpec& layer, const Shape& in) {
  const std::string where = "layer '" + layer.id + "'";
  switch (layer.kind) {
    case LayerKind::Linear:
      if (layer.shape_out.size() != 1) {
        throw Error(ErrorKind::Schema, where + ": Linear requires a 1-D shape_out");
      }
      return layer.shape_out;
    case LayerKind::Conv2d: {
      if (in.size() != 3) {
        throw Error(ErrorKind::ShapeMismatch, where + ": Conv2d expects [C,H,W], got " + shape_str(in));
      }
      if (in[0] != layer.channels_in) {
        throw Error(ErrorKind::ShapeMismatch, where + ": channels_in " +
                                                  std::to_string(layer.channels_in) +
                                                  " does not match input " + shape_str(in));
      }
      if (in[1] < layer.kernel || in[2] < layer.kernel) {
        throw Error(ErrorKind::ShapeMismatch, where + ": kernel larger than input " + shape_str(in));
      }
      return {layer.channels_out, (in[1] - layer.kernel) / layer.stride + 1,
              (in[2] - layer.kernel) / layer.stride + 1};
    }
    case LayerKind::AvgPool: {
      if (in.size() != 3) {
        throw Error(ErrorKind::ShapeMismatch, where + ": AvgPool expects [C,H,W], got " + shape_str(in));
      }
      if (in[1] < layer.stride || in[2] < layer.stride) {
        throw Error(ErrorKind::ShapeMismatch, where + ": pooling window larger than input");
      }
      return {in[0], in[1] / layer.stride, in[2] / layer.stride};
    }
    case LayerKind::ActPoly:
      return in;
    case LayerKind::Flatten:
      return {element_count(in)};
  }
  return in;
}

ModelGraph build_graph(std::string name, Shape input_shape, std::vector<LayerSpec> layers) {
  if (layers.empty()) throw Error(ErrorKind::Schema, "model has no layers");
  if (input_shape.empty()) throw Error(ErrorKind::Schema, "input_shape must be nonempty");
  std::set<std::string> ids;
  Shape current = input_shape;
  for (auto& layer : layers) {
    const std::string where = "layer '" + layer.id + "'";
    if (layer.id.empty()) throw Error(ErrorKind::Schema, "layer id must be nonempty");
    if (!ids.insert(layer.id).second) {
      throw Error(ErrorKind::Schema, "duplicate layer id '" + layer.id + "'");
    }
    switch (layer.kind) {
      case LayerKind::Conv2d:
        if (layer.kernel < 1 || layer.stride < 1 || layer.channels_in < 1 || layer.channels_out < 1) {
          throw Error(ErrorKind::Schema, where + ": kernel/stride/channels must be >= 1");
        }
        break;
      case LayerKind::AvgPool:
        if (layer.stride < 1) throw Error(ErrorKind::Schema, where + ": stride must be >= 1");
        break;
      case LayerKind::ActPoly:
        if (layer.act_degree < 1) throw Error(ErrorKind::Schema, where + ": act_degree must be >= 1");
        if (!(layer.act_error >= 0)) throw Error(ErrorKind::Schema, where + ": act_error must be >= 0");
        break;
      default:
        break;
    }
    if (!layer.shape_in.empty()) {
      const bool ok = layer.kind == LayerKind::Linear
                          ? element_count(layer.shape_in) == element_count(current)
                          : layer.shape_in == current;
      if (!ok) {
        throw Error(ErrorKind::ShapeMismatch, where + ": declared shape_in " + shape_str(layer.shape_in) +
                                                  " but previous layer produces " + shape_str(current));
      }
    }
    layer.shape_in = current;
    Shape out = infer_output_shape(layer, current);
    if (!layer.shape_out.empty() && layer.shape_out != out) {
      throw Error(ErrorKind::ShapeMismatch, where + ": declared shape_out " + shape_str(layer.shape_out) +
                                                " but inferred " + shape_str(out));
    }
    layer.shape_out = out;
    current = std::move(out);
  }
  return ModelGraph{std::move(name), std::move(input_shape), std::move(layers)};
}

ModelGraph model_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::Schema, "model document must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "input_shape" && key != "layers") {
      throw Error(ErrorKind::Schema, "unexpected top-level field '" + key + "'");
    }
  }
  if (!doc.contains("name") || !doc["name"].is_string()) {
    throw Error(ErrorKind::Schema, "missing string field 'name'");
  }
  if (!doc.contains("input_shape")) throw Error(ErrorKind::Schema, "missing field 'input_shape'");
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw Error(ErrorKind::Schema, "missing list field 'layers'");
  }
  std::vector<LayerSpec> layers;
  for (const auto& l : doc["layers"]) {
    if (!l.is_object()) throw Error(ErrorKind::Schema, "layer entries must be objects");
    if (!l.contains("id") || !l["id"].is_string()) throw Error(ErrorKind::Schema, "layer missing string 'id'");
    if (!l.contains("kind") || !l["kind"].is_string()) {
      throw Error(ErrorKind::Schema, "layer '" + l["id"].get<std::string>() + "' missing 'kind'");
    }
    LayerSpec spec;
    spec.id = l["id"].get<std::string>();
    spec.kind = layer_kind_from_string(l["kind"].get<std::string>());
    const std::string where = "layer '" + spec.id + "'";
    const auto& fields = allowed_fields(spec.kind);
    for (const auto& [key, _] : l.items()) {
      if (key == "id" || key == "kind" || key == "shape_in" || key == "shape_out") continue;
      if (!fields.count(key)) {
        throw Error(ErrorKind::Schema, where + ": field '" + key + "' not allowed for " +
                                           std::string(to_string(spec.kind)));
      }
    }
    for (const auto& key : fields) {
      if (!l.contains(key)) throw Error(ErrorKind::Schema, where + ": missing field '" + key + "'");
    }
    if (l.contains("shape_in")) spec.shape_in = require_shape(l["shape_in"], where + " shape_in");
    if (l.contains("shape_out")) spec.shape_out = require_shape(l["shape_out"], where + " shape_out");
    switch (spec.kind) {
      case LayerKind::Linear:
        if (spec.shape_out.empty()) throw Error(ErrorKind::Schema, where + ": Linear requires shape_out");
        break;
      case LayerKind::Conv2d:
        spec.kernel = require_int(l, "kernel", where);
        spec.stride = require_int(l, "stride", where);
        spec.channels_in = require_int(l, "channels_in", where);
        spec.channels_out = require_int(l, "channels_out", where);
        break;
      case LayerKind::AvgPool:
        spec.stride = require_int(l, "stride", where);
        break;
      case LayerKind::ActPoly:
        spec.act_degree = require_int(l, "act_degree", where);
        if (!l["act_error"].is_number()) throw Error(ErrorKind::Schema, where + ": act_error must be a number");
        spec.act_error = l["act_error"].get<double>();
        break;
      case LayerKind::Flatten:
        break;
    }
    layers.push_back(std::move(spec));
  }
  return build_graph(doc["name"].get<std::string>(), require_shape(doc["input_shape"], "input_shape"),
                     std::move(layers));
}

ModelGraph parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("model document is not valid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

json model_to_json(const ModelGraph& graph) {
  json layers = json::array();
  for (const auto& l : graph.layers) {
    json j = {{"id", l.id}, {"kind", to_string(l.kind)}, {"shape_in", l.shape_in}, {"shape_out", l.shape_out}};
    switch (l.kind) {
      case LayerKind::Conv2d:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["channels_in"] = l.channels_in;
        j["channels_out"] = l.channels_out;
        break;
      case LayerKind::AvgPool:
        j["stride"] = l.stride;
        break;
      case LayerKind::ActPoly:
        j["act_degree"] = l.act_degree;
        j["act_error"] = l.act_error;
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  return {{"name", graph.name}, {"input_shape", graph.input_shape}, {"layers", std::move(layers)}};
}

std::string serialize_model(const ModelGraph& graph) { return model_to_json(graph).dump(2); }

ModelSummary summarize_model(const ModelGraph& graph) {
  ModelSummary s;
  s.name = graph.name;
  s.layer_count = graph.layers.size();
  for (const auto& l : graph.layers) {
    s.kind_counts[l.kind] += 1;
    s.depth_lower_bound += depth_cost(l.kind, l.act_degree);
    const auto widest = std::max(l.elements_in(), l.elements_out());
    if (widest > s.widest_elements) {
      s.widest_elements = widest;
      s.widest_layer = l.id;
    }
    s.layers.push_back({l.id, l.kind, l.shape_in, l.shape_out});
  }
  return s;
}

json summary_to_json(const ModelSummary& s) {
  json kinds = json::object();
  for (const auto& [k, n] : s.kind_counts) kinds[std::string(to_string(k))] = n;
  json layers = json::array();
  for (const auto& l : s.layers) {
    layers.push_back({{"id", l.id}, {"kind", to_string(l.kind)}, {"shape_in", l.shape_in}, {"shape_out", l.shape_out}});
  }
  return {{"name", s.name},
          {"layer_count", s.layer_count},
          {"kind_counts", kinds},
          {"depth_lower_bound", s.depth_lower_bound},
          {"widest_layer", s.widest_layer},
          {"widest_elements", s.widest_elements},
          {"layers", layers}};
}

std::string architecture_signature(const ModelGraph& graph) {
  json doc = model_to_json(graph);
  doc.erase("name");
  return sha256_hex(doc.dump());
}

}  // namespace ckkstune
