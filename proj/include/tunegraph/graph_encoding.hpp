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
 * \file graph_encoding.hpp
 * \brief Loop nest -> root/for/iterval graph conversion, loop context
 *        features, and the shared super-graph template used to give every
 *        convolution type the same graph structure.
 */

#ifndef TUNEGRAPH_GRAPH_ENCODING_HPP_
#define TUNEGRAPH_GRAPH_ENCODING_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tunegraph/common.hpp"
#include "tunegraph/kernel_space.hpp"

namespace tunegraph {

inline constexpr int kFeatureDim = 12;

/// Named slots of a loop context vector.
enum FeatureSlot : int {
  kExtent = 0,
  kLog2Extent,
  kTileLevel,
  kIsReduction,
  kIsUnrolled,
  kStrideHint,
  kTouchedElements,
  kLog2Touched,
  kArithOps,
  kLog2Arith,
  kLoopDepth,
  kNormalizedPosition,
};

using LoopContextVector = std::array<double, kFeatureDim>;

enum class NodeKind { kRoot, kFor, kIterval };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kRoot: return "root";
    case NodeKind::kFor: return "for";
    case NodeKind::kIterval: return "iterval";
  }
  return "?";
}

struct GraphNode {
  NodeKind kind = NodeKind::kRoot;
  std::optional<LoopContextVector> feature;
  std::string slot;  // loop axis for raw graphs, template identifier for augmented ones
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct CodeGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;
  std::optional<double> label;  // measured GFLOPS
  friend bool operator==(const CodeGraph&, const CodeGraph&) = default;
};

// ---------------------------------------------------------------------------
// Loop context features
// ---------------------------------------------------------------------------

namespace detail {

struct LoopInfo {
  const AstNode* node;
  int depth;
  std::vector<std::size_t> subtree;  // pre-order indices of the loop and everything inside it
};

inline void walk_loops(const AstNode& node, int depth, std::vector<LoopInfo>& out,
                       std::vector<std::size_t>& open) {
  const bool is_loop = node.kind == AstNode::Kind::kForLoop;
  if (is_loop) {
    const auto idx = out.size();
    out.push_back({&node, depth, {}});
    open.push_back(idx);
    for (auto o : open) out[o].subtree.push_back(idx);
  }
  for (const auto& c : node.children) walk_loops(c, depth + (is_loop ? 1 : 0), out, open);
  if (is_loop) open.pop_back();
}

}  // namespace detail

/// Loop context vectors for every loop of `nest`, in pre-order.
inline std::vector<LoopContextVector> loop_context_vectors(const LoopNest& nest) {
  std::vector<detail::LoopInfo> loops;
  std::vector<std::size_t> open;
  detail::walk_loops(nest.root, 0, loops, open);
  const double num_loops = static_cast<double>(loops.size());

  std::vector<LoopContextVector> out;
  out.reserve(loops.size());
  for (std::size_t li = 0; li < loops.size(); ++li) {
    const auto& info = loops[li];
    const AstNode& loop = *info.node;
    const std::string base = loop.base_axis();

    double points = 1.0;
    for (auto s : info.subtree) points *= static_cast<double>(loops[s].node->extent);

    double touched = 0.0;
    double stride = 0.0;
    for (const auto& buf : nest.body) {
      double footprint = 1.0;
      double mem_stride = 1.0;
      std::vector<double> strides(buf.dims.size());
      for (std::size_t d = buf.dims.size(); d-- > 0;) {
        strides[d] = mem_stride;
        mem_stride *= static_cast<double>(buf.shape[d]);
      }
      for (std::size_t d = 0; d < buf.dims.size(); ++d) {
        double span = 1.0;
        for (const auto& term : buf.dims[d]) {
          for (auto s : info.subtree) {
            const AstNode& inner = *loops[s].node;
            if (inner.base_axis() != term.axis) continue;
            span += static_cast<double>(term.coeff * inner.axis_step * (inner.extent - 1));
          }
          if (term.axis == base) {
            const double st = static_cast<double>(term.coeff * loop.axis_step) * strides[d];
            if (st > 0 && (stride == 0.0 || st < stride)) stride = st;
          }
        }
        footprint *= std::min(span, static_cast<double>(buf.shape[d]));
      }
      touched += footprint;
    }
    const double arith = static_cast<double>(nest.flops_per_point) * points;

    LoopContextVector v{};
    v[kExtent] = static_cast<double>(loop.extent);
    v[kLog2Extent] = log2_clamped(v[kExtent]);
    v[kTileLevel] = loop.annotations.tile_level;
    v[kIsReduction] = loop.annotations.reduction ? 1.0 : 0.0;
    v[kIsUnrolled] = loop.annotations.unrolled ? 1.0 : 0.0;
    v[kStrideHint] = stride;
    v[kTouchedElements] = touched;
    v[kLog2Touched] = log2_clamped(touched);
    v[kArithOps] = arith;
    v[kLog2Arith] = log2_clamped(arith);
    v[kLoopDepth] = info.depth;
    v[kNormalizedPosition] = static_cast<double>(li + 1) / num_loops;
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// AST -> graph
// ---------------------------------------------------------------------------

/// root -> for (control flow) and for -> iterval (loop metadata) edges; nodes
/// in pre-order with each iterval right after its for node.
inline CodeGraph ast_to_graph(const LoopNest& nest) {
  CodeGraph g;
  g.nodes.push_back({NodeKind::kRoot, std::nullopt, ""});
  const auto loops = loops_preorder(nest);
  const auto features = loop_context_vectors(nest);
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const int for_idx = static_cast<int>(g.nodes.size());
    g.nodes.push_back({NodeKind::kFor, std::nullopt, loops[i]->axis_name});
    g.nodes.push_back({NodeKind::kIterval, features[i], loops[i]->axis_name});
    g.edges.emplace_back(0, for_idx);
    g.edges.emplace_back(for_idx, for_idx + 1);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Super-graph template
// ---------------------------------------------------------------------------

struct SuperGraphTemplate {
  CodeGraph graph;  // iterval nodes are featureless placeholders
  std::map<std::pair<OpType, std::string>, std::size_t> mapping_table;  // -> iterval node index
  std::vector<OpType> op_types;
};

/// Any spec of the given op type; the loop structure depends only on the type.
inline KernelSpec representative_spec(OpType op) {
  KernelSpec s;
  s.op_type = op;
  s.input_size = 16;
  s.in_channels = 8;
  s.out_channels = 8;
  s.kernel_size = 3;
  s.stride = 1;
  s.padding = 1;
  return s;
}

inline std::vector<std::string> loop_axis_names(OpType op) {
  std::vector<std::string> names;
  const LoopNest nest = lower_to_loop_nest(representative_spec(op), Schedule{});
  for (const auto* l : loops_preorder(nest)) {
    names.push_back(l->axis_name);
  }
  return names;
}

inline SuperGraphTemplate build_super_template(std::vector<OpType> op_types) {
  if (op_types.empty()) throw DomainError("super-graph template needs at least one op type");
  std::sort(op_types.begin(), op_types.end());
  op_types.erase(std::unique(op_types.begin(), op_types.end()), op_types.end());

  std::vector<std::string> slots;
  for (OpType op : op_types) {
    for (const auto& axis : loop_axis_names(op)) {
      if (std::find(slots.begin(), slots.end(), axis) == slots.end()) slots.push_back(axis);
    }
  }

  SuperGraphTemplate t;
  t.op_types = op_types;
  t.graph.nodes.push_back({NodeKind::kRoot, std::nullopt, "root"});
  std::map<std::string, std::size_t> slot_node;
  for (const auto& axis : slots) {
    const int for_idx = static_cast<int>(t.graph.nodes.size());
    t.graph.nodes.push_back({NodeKind::kFor, std::nullopt, "for:" + axis});
    t.graph.nodes.push_back({NodeKind::kIterval, std::nullopt, "iv:" + axis});
    t.graph.edges.emplace_back(0, for_idx);
    t.graph.edges.emplace_back(for_idx, for_idx + 1);
    slot_node[axis] = static_cast<std::size_t>(for_idx + 1);
  }
  for (OpType op : op_types) {
    for (const auto& axis : loop_axis_names(op)) t.mapping_table[{op, axis}] = slot_node.at(axis);
  }
  return t;
}

inline SuperGraphTemplate build_full_template() {
  return build_super_template({kAllOpTypes.begin(), kAllOpTypes.end()});
}

inline CodeGraph augment_to_super(const CodeGraph& graph, const SuperGraphTemplate& tmpl, OpType op) {
  CodeGraph out = tmpl.graph;
  out.label = graph.label;
  for (const auto& node : graph.nodes) {
    if (node.kind != NodeKind::kIterval) continue;
    auto it = tmpl.mapping_table.find({op, node.slot});
    if (it == tmpl.mapping_table.end()) {
      throw DomainError("super-graph template has no slot for " + std::string(to_string(op)) +
                        " axis " + node.slot);
    }
    out.nodes[it->second].feature = node.feature;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensorization
// ---------------------------------------------------------------------------

struct GraphTensors {
  Eigen::MatrixXd feature_matrix;        // num_nodes x F, zero rows for featureless nodes
  std::vector<char> has_feature;         // per node
  Eigen::MatrixXd normalized_adjacency;  // D^-1/2 (A + I) D^-1/2
};

/// Symmetrized 0/1 adjacency plus self loops.
inline Eigen::MatrixXd adjacency_with_self_loops(const CodeGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [src, dst] : graph.edges) {
    if (src == dst) continue;
    a(src, dst) = 1.0;
    a(dst, src) = 1.0;
  }
  return a;
}

inline GraphTensors graph_to_tensors(const CodeGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  GraphTensors t;
  t.feature_matrix = Eigen::MatrixXd::Zero(n, kFeatureDim);
  t.has_feature.assign(graph.nodes.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = graph.nodes[i].feature;
    if (!f) continue;
    t.has_feature[i] = 1;
    for (int c = 0; c < kFeatureDim; ++c) t.feature_matrix(i, c) = (*f)[c];
  }
  const Eigen::MatrixXd a = adjacency_with_self_loops(graph);
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  t.normalized_adjacency = inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
  return t;
}

// ---------------------------------------------------------------------------
// Text format
//
//   codegraph <num_nodes> <F>
//   node <kind> <slot|-> <F floats|null>
//   edge <src> <dst>
//   label <gflops>          (optional)
//   end
// ---------------------------------------------------------------------------

inline void write_graph(std::ostream& os, const CodeGraph& g) {
  os << "codegraph " << g.nodes.size() << ' ' << kFeatureDim << '\n';
  for (const auto& node : g.nodes) {
    os << "node " << to_string(node.kind) << ' ' << (node.slot.empty() ? "-" : node.slot);
    if (node.feature) {
      for (double v : *node.feature) os << ' ' << format_double(v);
    } else {
      os << " null";
    }
    os << '\n';
  }
  for (const auto& [s, d] : g.edges) os << "edge " << s << ' ' << d << '\n';
  if (g.label) os << "label " << format_double(*g.label) << '\n';
  os << "end\n";
}

/// Reads one graph; returns nullopt at a clean end of stream.
inline std::optional<CodeGraph> read_graph(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && line.empty()) {
  }
  if (!is && line.empty()) return std::nullopt;
  std::istringstream head(line);
  std::string tag;
  std::size_t n = 0;
  int f = 0;
  if (!(head >> tag >> n >> f) || tag != "codegraph") throw ConfigError("bad graph header: " + line);
  if (f != kFeatureDim) throw ConfigError("graph feature dimension mismatch");
  CodeGraph g;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    ls >> tag;
    if (tag == "end") break;
    if (tag == "node") {
      std::string kind, slot, first;
      ls >> kind >> slot >> first;
      GraphNode node;
      if (kind == "root") node.kind = NodeKind::kRoot;
      else if (kind == "for") node.kind = NodeKind::kFor;
      else if (kind == "iterval") node.kind = NodeKind::kIterval;
      else throw ConfigError("bad node kind: " + kind);
      node.slot = slot == "-" ? "" : slot;
      if (first != "null") {
        LoopContextVector v{};
        v[0] = std::stod(first);
        for (int c = 1; c < kFeatureDim; ++c) {
          std::string tok;
          if (!(ls >> tok)) throw ConfigError("short feature row");
          v[c] = std::stod(tok);
        }
        node.feature = v;
      }
      g.nodes.push_back(std::move(node));
    } else if (tag == "edge") {
      int s = 0, d = 0;
      if (!(ls >> s >> d)) throw ConfigError("bad edge line: " + line);
      g.edges.emplace_back(s, d);
    } else if (tag == "label") {
      std::string tok;
      ls >> tok;
      g.label = std::stod(tok);
    } else {
      throw ConfigError("unexpected graph line: " + line);
    }
  }
  if (g.nodes.size() != n) throw ConfigError("graph node count mismatch");
  return g;
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_GRAPH_ENCODING_HPP_
