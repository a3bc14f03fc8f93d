// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ckkstune {

enum class LayerKind { Linear, Conv2d, ActPoly, AvgPool, Flatten };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape);

// A single node of a straight-line network. Kind-specific fields are zero
// when the kind does not use them.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Linear;
  Shape shape_in;
  Shape shape_out;
  int kernel = 0;        // Conv2d: k for a k x k kernel
  int stride = 0;        // Conv2d, AvgPool
  int channels_in = 0;   // Conv2d
  int channels_out = 0;  // Conv2d
  int act_degree = 0;    // ActPoly, >= 1
  double act_error = 0;  // ActPoly, uniform-norm error of the fixed polynomial

  std::int64_t elements_in() const { return element_count(shape_in); }
  std::int64_t elements_out() const { return element_count(shape_out); }

  bool operator==(const LayerSpec&) const = default;
};

struct ModelGraph {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  const LayerSpec* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  bool operator==(const ModelGraph&) const = default;
};

/// Levels consumed by a layer whose activation (if any) has degree `degree`.
/// Linear, Conv2d and AvgPool are one plaintext multiply each; an activation
/// polynomial of degree d needs ceil(log2(d + 1)) levels.
int depth_cost(LayerKind kind, int degree);

/// Shape a layer produces for input `in`. Throws ShapeMismatch.
Shape infer_output_shape(const LayerSpec& layer, const Shape& in);

/// Validates a graph and fills in shape_in/shape_out by walking the chain.
/// Layers may carry declared shapes; they must agree with inference.
ModelGraph build_graph(std::string name, Shape input_shape, std::vector<LayerSpec> layers);

ModelGraph parse_model(std::string_view text);
ModelGraph model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelGraph& graph);
std::string serialize_model(const ModelGraph& graph);

struct LayerBrief {
  std::string id;
  LayerKind kind;
  Shape shape_in;
  Shape shape_out;
};

struct ModelSummary {
  std::string name;
  std::size_t layer_count = 0;
  std::map<LayerKind, int> kind_counts;
  int depth_lower_bound = 0;
  std::string widest_layer;
  std::int64_t widest_elements = 0;
  std::vector<LayerBrief> layers;
};

ModelSummary summarize_model(const ModelGraph& graph);
nlohmann::json summary_to_json(const ModelSummary& summary);

/// Digest of everything but the model name; equal for structurally identical
/// networks and used to look up exemplars from earlier runs.
std::string architecture_signature(const ModelGraph& graph);

}  // namespace ckkstune
