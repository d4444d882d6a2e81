/* Copyright 2026 The tunegraph Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/*!
 * \file kernel_space.hpp
 * \brief Convolution kernel tasks, their discrete knob spaces and lowering of
 *        a (kernel, knob configuration) pair to a loop-nest AST.
 */

#ifndef TUNEGRAPH_KERNEL_SPACE_HPP_
#define TUNEGRAPH_KERNEL_SPACE_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tunegraph/common.hpp"

namespace tunegraph {

enum class OpType { kConv1d, kTranspose1d, kConv2d, kTranspose2d, kWinograd, kDepthwise };

inline constexpr std::array<OpType, 6> kAllOpTypes = {
    OpType::kConv1d,   OpType::kTranspose1d, OpType::kConv2d,
    OpType::kTranspose2d, OpType::kWinograd, OpType::kDepthwise};

inline std::string_view to_string(OpType op) {
  switch (op) {
    case OpType::kConv1d: return "conv1d";
    case OpType::kTranspose1d: return "transpose1d";
    case OpType::kConv2d: return "conv2d";
    case OpType::kTranspose2d: return "transpose2d";
    case OpType::kWinograd: return "winograd";
    case OpType::kDepthwise: return "depthwise";
  }
  return "unknown";
}

inline OpType parse_op_type(std::string_view name) {
  for (OpType op : kAllOpTypes) {
    if (to_string(op) == name) return op;
  }
  throw DomainError("unsupported op_type: " + std::string(name));
}

inline bool is_one_dimensional(OpType op) {
  return op == OpType::kConv1d || op == OpType::kTranspose1d;
}

inline bool is_transposed(OpType op) {
  return op == OpType::kTranspose1d || op == OpType::kTranspose2d;
}

struct KernelSpec {
  OpType op_type = OpType::kConv2d;
  std::int64_t input_size = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel_size = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;

  /// Spatial extent of the output along every spatial axis.
  std::int64_t output_size() const {
    if (is_transposed(op_type)) {
      return (input_size - 1) * stride - 2 * padding + kernel_size;
    }
    return (input_size + 2 * padding - kernel_size) / stride + 1;
  }

  void validate() const {
    if (input_size < 1 || in_channels < 1 || out_channels < 1 || kernel_size < 1 || stride < 1) {
      throw DomainError("kernel spec dimensions must be positive: " + signature());
    }
    if (padding < 0) throw DomainError("kernel spec padding must be non-negative");
    if (!is_transposed(op_type) && input_size + 2 * padding < kernel_size) {
      throw DomainError("kernel larger than padded input: " + signature());
    }
    if (output_size() < 1) throw DomainError("kernel spec has empty output: " + signature());
  }

  /// Class identity used for meta-task sampling and held-out checks.
  std::string signature() const {
    return std::string(to_string(op_type)) + "_i" + std::to_string(input_size) + "_c" +
           std::to_string(in_channels) + "_o" + std::to_string(out_channels) + "_k" +
           std::to_string(kernel_size) + "_s" + std::to_string(stride) + "_p" +
           std::to_string(padding);
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Inverse of KernelSpec::signature(); validates the result.
inline KernelSpec parse_signature(const std::string& sig) {
  static const std::regex re(R"(^([a-z0-9]+)_i(\d+)_c(\d+)_o(\d+)_k(\d+)_s(\d+)_p(\d+)$)");
  std::smatch m;
  if (!std::regex_match(sig, m, re)) throw DomainError("malformed kernel signature: " + sig);
  KernelSpec s;
  s.op_type = parse_op_type(m[1].str());
  s.input_size = std::stoll(m[2].str());
  s.in_channels = std::stoll(m[3].str());
  s.out_channels = std::stoll(m[4].str());
  s.kernel_size = std::stoll(m[5].str());
  s.stride = std::stoll(m[6].str());
  s.padding = std::stoll(m[7].str());
  s.validate();
  return s;
}

inline void to_json(nlohmann::json& j, const KernelSpec& s) {
  j = nlohmann::json{{"op_type", std::string(to_string(s.op_type))},
                     {"input_size", s.input_size},
                     {"in_channels", s.in_channels},
                     {"out_channels", s.out_channels},
                     {"kernel_size", s.kernel_size},
                     {"stride", s.stride},
                     {"padding", s.padding}};
}

inline void from_json(const nlohmann::json& j, KernelSpec& s) {
  s.op_type = parse_op_type(j.at("op_type").get<std::string>());
  s.input_size = j.at("input_size").get<std::int64_t>();
  s.in_channels = j.at("in_channels").get<std::int64_t>();
  s.out_channels = j.at("out_channels").get<std::int64_t>();
  s.kernel_size = j.at("kernel_size").get<std::int64_t>();
  s.stride = j.value("stride", std::int64_t{1});
  s.padding = j.value("padding", std::int64_t{0});
}

// ---------------------------------------------------------------------------
// Knob spaces
// ---------------------------------------------------------------------------

struct KnobDef {
  std::string name;
  std::vector<std::int64_t> values;

  std::size_t cardinality() const { return values.size(); }

  void validate() const {
    if (values.empty()) throw DomainError("knob " + name + " has no values");
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] <= values[i - 1]) {
        throw DomainError("knob " + name + " values must be strictly increasing");
      }
    }
  }
};

struct KnobConfig {
  std::vector<std::uint32_t> choices;
  friend bool operator==(const KnobConfig&, const KnobConfig&) = default;
};

class KnobSpace {
 public:
  KnobSpace() = default;
  explicit KnobSpace(std::vector<KnobDef> knobs) : knobs_(std::move(knobs)) {
    size_ = 1;
    for (const auto& k : knobs_) {
      k.validate();
      size_ *= k.cardinality();
    }
  }

  const std::vector<KnobDef>& knobs() const { return knobs_; }
  std::size_t num_knobs() const { return knobs_.size(); }
  std::uint64_t size() const { return size_; }

  /// Index of the knob called `name`, if present.
  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < knobs_.size(); ++i) {
      if (knobs_[i].name == name) return i;
    }
    return std::nullopt;
  }

  void check(const KnobConfig& c) const {
    if (c.choices.size() != knobs_.size()) {
      throw DomainError("knob config has " + std::to_string(c.choices.size()) +
                        " choices, space has " + std::to_string(knobs_.size()) + " knobs");
    }
    for (std::size_t i = 0; i < knobs_.size(); ++i) {
      if (c.choices[i] >= knobs_[i].cardinality()) {
        throw DomainError("choice out of range for knob " + knobs_[i].name);
      }
    }
  }

  /// Hash over knob names and values; identifies the space in serialized configs.
  std::uint64_t content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& k : knobs_) {
      h = fnv1a(k.name, h);
      h = hash_combine(h, k.values.size());
      for (auto v : k.values) h = hash_combine(h, static_cast<std::uint64_t>(v));
    }
    return h;
  }

 private:
  std::vector<KnobDef> knobs_;
  std::uint64_t size_ = 1;
};

/// Mixed-radix encoding with knob 0 as the most significant digit.
inline std::uint64_t config_index(const KnobSpace& space, const KnobConfig& config) {
  space.check(config);
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < space.num_knobs(); ++i) {
    idx = idx * space.knobs()[i].cardinality() + config.choices[i];
  }
  return idx;
}

inline KnobConfig index_config(const KnobSpace& space, std::uint64_t index) {
  if (index >= space.size()) {
    throw DomainError("config index " + std::to_string(index) + " out of range (size " +
                      std::to_string(space.size()) + ")");
  }
  KnobConfig c;
  c.choices.resize(space.num_knobs());
  for (std::size_t i = space.num_knobs(); i-- > 0;) {
    const auto card = space.knobs()[i].cardinality();
    c.choices[i] = static_cast<std::uint32_t>(index % card);
    index /= card;
  }
  return c;
}

/// Draws `n` indices uniformly without replacement (all of them, then uniform
/// draws with replacement, when n exceeds the space size).
inline std::vector<std::uint64_t> sample_indices(std::uint64_t space_size, std::size_t n, Rng& rng) {
  std::vector<std::uint64_t> out;
  if (n == 0 || space_size == 0) return out;
  out.reserve(n);
  if (n >= space_size || (space_size <= (std::uint64_t{1} << 20) && n * 4 >= space_size)) {
    std::vector<std::uint64_t> all(space_size);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    const std::size_t take = std::min<std::uint64_t>(n, space_size);
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, space_size - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    out.assign(all.begin(), all.begin() + take);
    std::uniform_int_distribution<std::uint64_t> any(0, space_size - 1);
    while (out.size() < n) out.push_back(any(rng));
    return out;
  }
  std::unordered_set<std::uint64_t> seen;
  std::uniform_int_distribution<std::uint64_t> any(0, space_size - 1);
  while (out.size() < n) {
    const auto i = any(rng);
    if (seen.insert(i).second) out.push_back(i);
  }
  return out;
}

inline std::vector<KnobConfig> sample_configs(const KnobSpace& space, std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("sample_configs needs n >= 1");
  std::vector<KnobConfig> out;
  for (auto i : sample_indices(space.size(), n, rng)) out.push_back(index_config(space, i));
  return out;
}

// Knob families of the conv2d template, in canonical order.
struct KnobFamily {
  std::string_view name;
  std::size_t count;
};
inline constexpr std::array<KnobFamily, 8> kKnobFamilies = {{{"tile_x", 140},
                                                            {"tile_y", 140},
                                                            {"tile_f", 120},
                                                            {"tile_rc", 8},
                                                            {"tile_rx", 2},
                                                            {"tile_ry", 2},
                                                            {"auto_unroll_max_step", 3},
                                                            {"unroll_explicit", 2}}};

inline constexpr std::array<std::int64_t, 3> kUnrollSteps = {0, 512, 1500};

/// `count` distinct candidate inner-tile sizes for an axis of length `extent`:
/// divisors first, then non-divisors, then sizes beyond the extent.
inline std::vector<std::int64_t> tile_candidates(std::int64_t extent, std::size_t count) {
  std::vector<std::int64_t> divisors;
  std::vector<std::int64_t> others;
  for (std::int64_t d = 1; d <= extent; ++d) {
    (extent % d == 0 ? divisors : others).push_back(d);
  }
  auto spread = [](const std::vector<std::int64_t>& from, std::size_t k) {
    std::vector<std::int64_t> picked;
    if (k == 0) return picked;
    if (k >= from.size()) return from;
    if (k == 1) {
      picked.push_back(from[from.size() / 2]);
      return picked;
    }
    for (std::size_t i = 0; i < k; ++i) {
      picked.push_back(from[(i * (from.size() - 1) + (k - 1) / 2) / (k - 1)]);
    }
    return picked;
  };
  std::vector<std::int64_t> out = spread(divisors, count);
  if (out.size() < count) {
    auto more = spread(others, count - out.size());
    out.insert(out.end(), more.begin(), more.end());
  }
  for (std::int64_t extra = extent + 1; out.size() < count; ++extra) out.push_back(extra);
  std::sort(out.begin(), out.end());
  return out;
}

/// One loop axis of a kernel template before tiling.
struct AxisDef {
  std::string name;
  std::int64_t extent;
  bool reduction;
  std::string knob;  // empty for untiled axes
};

/// Axes of the template for `spec.op_type`, outermost first.
inline std::vector<AxisDef> kernel_axes(const KernelSpec& spec) {
  const auto out = spec.output_size();
  std::vector<AxisDef> axes;
  axes.push_back({"f", spec.out_channels, false, "tile_f"});
  if (!is_one_dimensional(spec.op_type)) axes.push_back({"y", out, false, "tile_y"});
  axes.push_back({"x", out, false, "tile_x"});
  if (spec.op_type == OpType::kWinograd) {
    // transform-domain tile (output tile 2 plus kernel - 1)
    axes.push_back({"eps", spec.kernel_size + 1, false, ""});
    axes.push_back({"nu", spec.kernel_size + 1, false, ""});
  }
  if (spec.op_type != OpType::kDepthwise) axes.push_back({"rc", spec.in_channels, true, "tile_rc"});
  if (!is_one_dimensional(spec.op_type)) axes.push_back({"ry", spec.kernel_size, true, "tile_ry"});
  axes.push_back({"rx", spec.kernel_size, true, "tile_rx"});
  return axes;
}

inline KnobSpace build_knob_space(const KernelSpec& spec) {
  spec.validate();
  const auto axes = kernel_axes(spec);
  std::vector<KnobDef> knobs;
  for (const auto& fam : kKnobFamilies) {
    if (fam.name == "auto_unroll_max_step") {
      knobs.push_back({std::string(fam.name), {kUnrollSteps.begin(), kUnrollSteps.end()}});
    } else if (fam.name == "unroll_explicit") {
      knobs.push_back({std::string(fam.name), {0, 1}});
    } else {
      auto it = std::find_if(axes.begin(), axes.end(),
                             [&](const AxisDef& a) { return a.knob == fam.name; });
      if (it == axes.end()) continue;
      knobs.push_back({std::string(fam.name), tile_candidates(it->extent, fam.count)});
    }
  }
  return KnobSpace(std::move(knobs));
}

/// Knob values resolved from a (space, config) pair. Knobs absent from the
/// space keep these defaults.
struct Schedule {
  std::int64_t tile_f = 1;
  std::int64_t tile_y = 1;
  std::int64_t tile_x = 1;
  std::int64_t tile_rc = 1;
  std::int64_t tile_ry = 1;
  std::int64_t tile_rx = 1;
  std::int64_t auto_unroll_max_step = 0;
  bool unroll_explicit = false;

  std::int64_t tile_for(std::string_view knob) const {
    if (knob == "tile_f") return tile_f;
    if (knob == "tile_y") return tile_y;
    if (knob == "tile_x") return tile_x;
    if (knob == "tile_rc") return tile_rc;
    if (knob == "tile_ry") return tile_ry;
    if (knob == "tile_rx") return tile_rx;
    return 1;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

inline Schedule resolve(const KnobSpace& space, const KnobConfig& config) {
  space.check(config);
  Schedule s;
  for (std::size_t i = 0; i < space.num_knobs(); ++i) {
    const auto& k = space.knobs()[i];
    const auto v = k.values[config.choices[i]];
    if (k.name == "tile_f") s.tile_f = v;
    else if (k.name == "tile_y") s.tile_y = v;
    else if (k.name == "tile_x") s.tile_x = v;
    else if (k.name == "tile_rc") s.tile_rc = v;
    else if (k.name == "tile_ry") s.tile_ry = v;
    else if (k.name == "tile_rx") s.tile_rx = v;
    else if (k.name == "auto_unroll_max_step") s.auto_unroll_max_step = v;
    else if (k.name == "unroll_explicit") s.unroll_explicit = v != 0;
    else throw DomainError("unknown knob " + k.name);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Loop nests
// ---------------------------------------------------------------------------

struct LoopAnnotations {
  int tile_level = 0;
  bool unrolled = false;
  bool reduction = false;
  friend bool operator==(const LoopAnnotations&, const LoopAnnotations&) = default;
};

struct AstNode {
  enum class Kind { kSeq, kForLoop };
  Kind kind = Kind::kSeq;
  std::string axis_name;       // for_loop only, e.g. "x.o"
  std::int64_t extent = 1;     // for_loop only
  std::int64_t axis_step = 1;  // advance of the base axis per iteration
  LoopAnnotations annotations;
  std::vector<AstNode> children;

  /// Base axis of a loop name ("x.o" -> "x").
  std::string base_axis() const { return axis_name.substr(0, axis_name.find('.')); }
};

/// Index expression term: coefficient times a base axis.
struct AccessTerm {
  std::string axis;
  std::int64_t coeff;
};

/// A buffer read or written by the loop body; one list of terms per dimension.
struct BufferAccess {
  std::string buffer;
  std::vector<std::vector<AccessTerm>> dims;
  std::vector<std::int64_t> shape;
};

struct LoopNest {
  AstNode root;
  std::vector<BufferAccess> body;
  std::int64_t flops_per_point = 2;
};

/// Loops of a nest in pre-order.
inline void collect_loops(const AstNode& node, std::vector<const AstNode*>& out) {
  if (node.kind == AstNode::Kind::kForLoop) out.push_back(&node);
  for (const auto& c : node.children) collect_loops(c, out);
}

inline std::vector<const AstNode*> loops_preorder(const LoopNest& nest) {
  std::vector<const AstNode*> out;
  collect_loops(nest.root, out);
  return out;
}

/// Hash of node kinds, axis names and child structure (extents excluded).
inline std::uint64_t tree_shape_hash(const AstNode& node) {
  std::uint64_t h = hash_combine(kFnvOffset, static_cast<std::uint64_t>(node.kind));
  h = fnv1a(node.axis_name, h);
  h = hash_combine(h, node.children.size());
  for (const auto& c : node.children) h = hash_combine(h, tree_shape_hash(c));
  return h;
}

namespace detail {

inline std::vector<BufferAccess> body_accesses(const KernelSpec& spec) {
  const auto out = spec.output_size();
  const auto s = is_transposed(spec.op_type) ? 1 : spec.stride;
  const auto in_extent = is_transposed(spec.op_type) ? out + spec.kernel_size - 1
                                                     : spec.input_size + 2 * spec.padding;
  const auto k = spec.kernel_size;
  std::vector<BufferAccess> acc;
  if (is_one_dimensional(spec.op_type)) {
    acc.push_back({"out", {{{"f", 1}}, {{"x", 1}}}, {spec.out_channels, out}});
    acc.push_back({"in", {{{"rc", 1}}, {{"x", s}, {"rx", 1}}}, {spec.in_channels, in_extent}});
    acc.push_back({"w", {{{"f", 1}}, {{"rc", 1}}, {{"rx", 1}}}, {spec.out_channels, spec.in_channels, k}});
    return acc;
  }
  acc.push_back({"out", {{{"f", 1}}, {{"y", 1}}, {{"x", 1}}}, {spec.out_channels, out, out}});
  if (spec.op_type == OpType::kDepthwise) {
    acc.push_back({"in",
                   {{{"f", 1}}, {{"y", s}, {"ry", 1}}, {{"x", s}, {"rx", 1}}},
                   {spec.out_channels, in_extent, in_extent}});
    acc.push_back({"w", {{{"f", 1}}, {{"ry", 1}}, {{"rx", 1}}}, {spec.out_channels, k, k}});
    return acc;
  }
  acc.push_back({"in",
                 {{{"rc", 1}}, {{"y", s}, {"ry", 1}}, {{"x", s}, {"rx", 1}}},
                 {spec.in_channels, in_extent, in_extent}});
  acc.push_back({"w",
                 {{{"f", 1}}, {{"rc", 1}}, {{"ry", 1}}, {{"rx", 1}}},
                 {spec.out_channels, spec.in_channels, k, k}});
  if (spec.op_type == OpType::kWinograd) {
    const auto alpha = k + 1;
    acc.push_back({"V",
                   {{{"eps", 1}}, {{"nu", 1}}, {{"rc", 1}}, {{"y", 1}}, {{"x", 1}}},
                   {alpha, alpha, spec.in_channels, out, out}});
    acc.push_back({"U",
                   {{{"eps", 1}}, {{"nu", 1}}, {{"f", 1}}, {{"rc", 1}}},
                   {alpha, alpha, spec.out_channels, spec.in_channels}});
  }
  return acc;
}

}  // namespace detail

/// Lowers a resolved schedule. The tree shape depends only on the op type:
/// tiled axes always produce an outer and an inner loop, even of extent 1.
inline LoopNest lower_to_loop_nest(const KernelSpec& spec, const Schedule& sched) {
  spec.validate();
  const auto axes = kernel_axes(spec);

  struct Loop {
    std::string name;
    std::int64_t extent;
    std::int64_t step;
    int level;
    bool reduction;
  };
  std::vector<Loop> spatial_outer, untiled, red_outer, red_inner, spatial_inner;
  for (const auto& a : axes) {
    if (a.knob.empty()) {
      untiled.push_back({a.name, a.extent, 1, 0, a.reduction});
      continue;
    }
    const auto t = sched.tile_for(a.knob);
    if (t < 1) throw DomainError("tile size must be positive for " + a.knob);
    const auto outer = (a.extent + t - 1) / t;
    (a.reduction ? red_outer : spatial_outer).push_back({a.name + ".o", outer, t, 0, a.reduction});
    (a.reduction ? red_inner : spatial_inner).push_back({a.name + ".i", t, 1, 1, a.reduction});
  }
  std::vector<Loop> order;
  for (auto* group : {&spatial_outer, &untiled, &red_outer, &red_inner, &spatial_inner}) {
    order.insert(order.end(), group->begin(), group->end());
  }

  // Unroll flags: implicit unrolling of the innermost tile loops whose
  // cumulative trip count fits in auto_unroll_max_step; explicit unrolling of
  // the inner reduction loops.
  std::vector<bool> unrolled(order.size(), false);
  if (sched.auto_unroll_max_step > 0) {
    std::int64_t trip = 1;
    for (std::size_t i = order.size(); i-- > 0;) {
      if (order[i].level != 1) break;
      trip *= order[i].extent;
      if (trip > sched.auto_unroll_max_step) break;
      unrolled[i] = true;
    }
  }
  if (sched.unroll_explicit) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i].level == 1 && order[i].reduction) unrolled[i] = true;
    }
  }

  LoopNest nest;
  nest.root.kind = AstNode::Kind::kSeq;
  AstNode* parent = &nest.root;
  for (std::size_t i = 0; i < order.size(); ++i) {
    AstNode loop;
    loop.kind = AstNode::Kind::kForLoop;
    loop.axis_name = order[i].name;
    loop.extent = order[i].extent;
    loop.axis_step = order[i].step;
    loop.annotations = {order[i].level, unrolled[i], order[i].reduction};
    parent->children.push_back(std::move(loop));
    parent = &parent->children.back();
  }
  nest.body = detail::body_accesses(spec);
  return nest;
}

inline LoopNest lower_to_loop_nest(const KernelSpec& spec, const KnobSpace& space,
                                   const KnobConfig& config) {
  return lower_to_loop_nest(spec, resolve(space, config));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json knob_space_to_json(const KnobSpace& space) {
  nlohmann::json knobs = nlohmann::json::array();
  for (const auto& k : space.knobs()) knobs.push_back({{"name", k.name}, {"values", k.values}});
  return {{"knobs", knobs}, {"size", space.size()}, {"hash", hex64(space.content_hash())}};
}

inline KnobSpace knob_space_from_json(const nlohmann::json& j) {
  std::vector<KnobDef> knobs;
  for (const auto& k : j.at("knobs")) {
    knobs.push_back({k.at("name").get<std::string>(), k.at("values").get<std::vector<std::int64_t>>()});
  }
  KnobSpace space(std::move(knobs));
  if (j.contains("hash") && j.at("hash").get<std::string>() != hex64(space.content_hash())) {
    throw ConfigError("knob space hash mismatch");
  }
  return space;
}

inline nlohmann::json knob_config_to_json(const KnobSpace& space, const KnobConfig& config) {
  return {{"index", config_index(space, config)}, {"space_hash", hex64(space.content_hash())}};
}

inline KnobConfig knob_config_from_json(const KnobSpace& space, const nlohmann::json& j) {
  if (j.at("space_hash").get<std::string>() != hex64(space.content_hash())) {
    throw ConfigError("knob config belongs to a different space");
  }
  return index_config(space, j.at("index").get<std::uint64_t>());
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_KERNEL_SPACE_HPP_
