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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <fstream>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "tunegraph/graph_encoding.hpp"

namespace tunegraph {
namespace {

using testing::random_spec;

/// Hand-built nest i > j > k with the given extents and no body.
LoopNest three_loops(std::int64_t ei, std::int64_t ej, std::int64_t ek) {
  LoopNest n;
  AstNode* p = &n.root;
  for (auto [name, e] : {std::pair<const char*, std::int64_t>{"i", ei}, {"j", ej}, {"k", ek}}) {
    AstNode l;
    l.kind = AstNode::Kind::kForLoop;
    l.axis_name = name;
    l.extent = e;
    p->children.push_back(l);
    p = &p->children.back();
  }
  return n;
}

std::multiset<std::vector<double>> feature_multiset(const CodeGraph& g) {
  std::multiset<std::vector<double>> out;
  for (const auto& n : g.nodes) {
    if (n.feature) out.emplace(n.feature->begin(), n.feature->end());
  }
  return out;
}

CodeGraph random_graph(OpType op, Rng& rng) {
  const KernelSpec spec = random_spec(op, rng);
  const KnobSpace space = build_knob_space(spec);
  return ast_to_graph(lower_to_loop_nest(spec, space, sample_configs(space, 1, rng).front()));
}

TEST(AstToGraph, ThreeLoopsGiveSevenNodesSixEdges) {
  const CodeGraph g = ast_to_graph(three_loops(4, 8, 2));
  ASSERT_EQ(g.nodes.size(), 7u);
  EXPECT_EQ(g.edges.size(), 6u);
  EXPECT_EQ(g.nodes[0].kind, NodeKind::kRoot);
  int fors = 0, ivs = 0;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::kFor) {
      ++fors;
      EXPECT_FALSE(n.feature);
    }
    if (n.kind == NodeKind::kIterval) {
      ++ivs;
      EXPECT_TRUE(n.feature);
    }
  }
  EXPECT_EQ(fors, 3);
  EXPECT_EQ(ivs, 3);
  // root reaches every for node; each iterval has one incoming edge from a for node
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    int from_root = 0, incoming = 0;
    for (auto [s, d] : g.edges) {
      if (d != static_cast<int>(i)) continue;
      ++incoming;
      if (s == 0) ++from_root;
      if (g.nodes[i].kind == NodeKind::kIterval) EXPECT_EQ(g.nodes[s].kind, NodeKind::kFor);
    }
    if (g.nodes[i].kind == NodeKind::kFor) EXPECT_EQ(from_root, 1);
    if (g.nodes[i].kind == NodeKind::kIterval) EXPECT_EQ(incoming, 1);
  }
}

TEST(AstToGraph, EmptyNestIsRootOnly) {
  const CodeGraph g = ast_to_graph(LoopNest{});
  ASSERT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.edges.empty());
}

TEST(LoopContext, ExtentAndLogSlots) {
  const CodeGraph g = ast_to_graph(three_loops(8, 1, 3));
  const auto& f = *g.nodes[2].feature;  // iterval of loop i
  EXPECT_EQ(f[kExtent], 8.0);
  EXPECT_EQ(f[kLog2Extent], 3.0);
  const auto& one = *g.nodes[4].feature;  // extent 1 clamps log slot at 0
  EXPECT_EQ(one[kLog2Extent], 0.0);
  for (const auto& n : g.nodes) {
    if (!n.feature) continue;
    for (double v : *n.feature) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ((*n.feature)[kLog2Touched], log2_clamped((*n.feature)[kTouchedElements]));
    EXPECT_EQ((*n.feature)[kLog2Arith], log2_clamped((*n.feature)[kArithOps]));
  }
  // arithmetic estimate of the outermost loop counts every point of the nest
  EXPECT_EQ(f[kArithOps], 2.0 * 8 * 1 * 3);
  EXPECT_EQ(f[kLoopDepth], 0.0);
  EXPECT_EQ((*g.nodes[6].feature)[kLoopDepth], 2.0);
}

TEST(AstToGraph, DistinctExtentsGiveDistinctFeatures) {
  const auto a = graph_to_tensors(ast_to_graph(three_loops(4, 8, 2)));
  const auto b = graph_to_tensors(ast_to_graph(three_loops(4, 8, 3)));
  EXPECT_NE(a.feature_matrix, b.feature_matrix);
}

TEST(SuperTemplate, SingleTypeIsIsomorphicToItsGraph) {
  const SuperGraphTemplate t = build_super_template({OpType::kConv2d});
  Rng rng(1);
  const CodeGraph g = random_graph(OpType::kConv2d, rng);
  EXPECT_EQ(t.graph.nodes.size(), g.nodes.size());
  EXPECT_EQ(t.graph.edges, g.edges);
}

TEST(SuperTemplate, Conv1dEmbedsIntoConv2dUnion) {
  const SuperGraphTemplate t = build_super_template({OpType::kConv1d, OpType::kConv2d});
  const SuperGraphTemplate t2 = build_super_template({OpType::kConv2d});
  EXPECT_EQ(t.graph.nodes.size(), t2.graph.nodes.size());
  Rng rng(2);
  const CodeGraph g = random_graph(OpType::kConv1d, rng);
  const CodeGraph a = augment_to_super(g, t, OpType::kConv1d);
  for (const auto& n : a.nodes) {
    if (n.kind != NodeKind::kIterval) continue;
    const bool y_family = n.slot.find(":y.") != std::string::npos || n.slot.find(":ry.") != std::string::npos;
    if (y_family) EXPECT_FALSE(n.feature) << n.slot;
  }
}

TEST(SuperTemplate, MappingTableCoversEveryAxisExactlyOnce) {
  const SuperGraphTemplate t = build_full_template();
  std::size_t expected = 0;
  for (OpType op : kAllOpTypes) {
    const auto axes = loop_axis_names(op);
    expected += axes.size();
    std::set<std::size_t> targets;
    for (const auto& a : axes) {
      auto it = t.mapping_table.find({op, a});
      ASSERT_NE(it, t.mapping_table.end()) << to_string(op) << " " << a;
      EXPECT_EQ(t.graph.nodes[it->second].kind, NodeKind::kIterval);
      targets.insert(it->second);
    }
    EXPECT_EQ(targets.size(), axes.size()) << "mapping not injective for " << to_string(op);
  }
  EXPECT_EQ(t.mapping_table.size(), expected);
}

TEST(SuperTemplate, MissingSlotIsDomainError) {
  const SuperGraphTemplate t = build_super_template({OpType::kConv1d});
  Rng rng(3);
  EXPECT_THROW(augment_to_super(random_graph(OpType::kConv2d, rng), t, OpType::kConv2d), DomainError);
}

TEST(Augment, IdentityOnSingleTypeTemplate) {
  const SuperGraphTemplate t = build_super_template({OpType::kConv2d});
  Rng rng(4);
  const CodeGraph g = random_graph(OpType::kConv2d, rng);
  const CodeGraph a = augment_to_super(g, t, OpType::kConv2d);
  EXPECT_EQ(feature_multiset(a), feature_multiset(g));
  EXPECT_EQ(a.edges, g.edges);
  // node-by-node features line up because the orders agree
  for (std::size_t i = 0; i < g.nodes.size(); ++i) EXPECT_EQ(a.nodes[i].feature, g.nodes[i].feature);
}

TEST(Augment, UniformStructureAndFeaturePreservation) {
  const SuperGraphTemplate t = build_full_template();
  const Eigen::MatrixXd ref = graph_to_tensors(t.graph).normalized_adjacency;
  Rng rng(5);
  for (OpType op : kAllOpTypes) {
    for (int i = 0; i < 10; ++i) {
      const CodeGraph g = random_graph(op, rng);
      const CodeGraph a = augment_to_super(g, t, op);
      EXPECT_EQ(a.nodes.size(), t.graph.nodes.size());
      EXPECT_EQ(feature_multiset(a), feature_multiset(g));
      std::size_t featured = 0;
      for (const auto& n : a.nodes) featured += n.feature ? 1 : 0;
      EXPECT_EQ(featured, loop_axis_names(op).size());
      const Eigen::MatrixXd adj = graph_to_tensors(a).normalized_adjacency;
      ASSERT_EQ(adj.rows(), ref.rows());
      EXPECT_EQ(std::memcmp(adj.data(), ref.data(), sizeof(double) * adj.size()), 0);
    }
  }
}

TEST(Tensors, RootOnlyIsIdentity) {
  const auto t = graph_to_tensors(ast_to_graph(LoopNest{}));
  ASSERT_EQ(t.normalized_adjacency.rows(), 1);
  EXPECT_EQ(t.normalized_adjacency(0, 0), 1.0);
}

TEST(Tensors, TwoNodePathHandComputed) {
  CodeGraph g;
  g.nodes.resize(2);
  g.edges = {{0, 1}};
  const auto t = graph_to_tensors(g);
  // A + I = [[1,1],[1,1]], degrees 2: every entry is 1/sqrt(2)^2
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(t.normalized_adjacency(r, c), 0.5);
  }
}

TEST(Tensors, SelfLoopRowSumsAreDegreePlusOne) {
  Rng rng(6);
  const CodeGraph g = random_graph(OpType::kWinograd, rng);
  const Eigen::MatrixXd a = adjacency_with_self_loops(g);
  std::vector<int> degree(g.nodes.size(), 0);
  for (auto [s, d] : g.edges) {
    ++degree[s];
    ++degree[d];
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) EXPECT_EQ(a.row(i).sum(), degree[i] + 1.0);
}

TEST(Tensors, SymmetricWithSpectralRadiusAtMostOne) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    CodeGraph g;
    const int n = 2 + trial % 9;
    g.nodes.resize(n);
    std::bernoulli_distribution edge(0.3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && edge(rng)) g.edges.emplace_back(i, j);
      }
    }
    const Eigen::MatrixXd m = graph_to_tensors(g).normalized_adjacency;
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
    // isolated nodes have identity rows
    for (int i = 0; i < n; ++i) {
      bool isolated = true;
      for (auto [s, d] : g.edges) isolated = isolated && s != i && d != i;
      if (!isolated) continue;
      for (int j = 0; j < n; ++j) EXPECT_EQ(m(i, j), i == j ? 1.0 : 0.0);
    }
  }
}

TEST(Tensors, FeaturelessRowsAreZero) {
  const SuperGraphTemplate t = build_full_template();
  Rng rng(8);
  const auto a = augment_to_super(random_graph(OpType::kConv1d, rng), t, OpType::kConv1d);
  const auto tt = graph_to_tensors(a);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (!a.nodes[i].feature) EXPECT_EQ(tt.feature_matrix.row(i).cwiseAbs().sum(), 0.0);
  }
}

TEST(TextFormat, RoundTrip) {
  Rng rng(9);
  CodeGraph g = random_graph(OpType::kTranspose2d, rng);
  g.label = 123.456;
  const CodeGraph aug = augment_to_super(g, build_full_template(), OpType::kTranspose2d);
  std::stringstream ss;
  write_graph(ss, g);
  write_graph(ss, aug);
  EXPECT_EQ(read_graph(ss), g);
  EXPECT_EQ(read_graph(ss), aug);
  EXPECT_FALSE(read_graph(ss));
}

TEST(TextFormat, GoldenFile) {
  // conv2d 16x16, 8 -> 8 channels, 3x3, tile_x=4 tile_f=2 tile_rc=2, unroll 512
  const KernelSpec spec{OpType::kConv2d, 16, 8, 8, 3, 1, 1};
  Schedule s;
  s.tile_x = 4;
  s.tile_f = 2;
  s.tile_rc = 2;
  s.auto_unroll_max_step = 512;
  CodeGraph g = ast_to_graph(lower_to_loop_nest(spec, s));
  g.label = 42.0;
  std::ostringstream now;
  write_graph(now, g);
  std::ifstream f(testing::data_path("graph_conv2d.txt"));
  ASSERT_TRUE(f) << "missing golden graph file";
  std::stringstream golden;
  golden << f.rdbuf();
  EXPECT_EQ(now.str(), golden.str());
  std::istringstream back(golden.str());
  EXPECT_EQ(read_graph(back), g);
}

TEST(TextFormat, RejectsBadHeader) {
  std::istringstream bad("graph 3 12\n");
  EXPECT_THROW(read_graph(bad), ConfigError);
}

}  // namespace
}  // namespace tunegraph
