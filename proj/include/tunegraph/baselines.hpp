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
 * \file baselines.hpp
 * \brief Least-squares gradient-boosted trees over flattened knob features,
 *        their down-weighted warm start, and the uniform random arm.
 */

#ifndef TUNEGRAPH_BASELINES_HPP_
#define TUNEGRAPH_BASELINES_HPP_

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunegraph/common.hpp"
#include "tunegraph/kernel_space.hpp"
#include "tunegraph/perf_oracle.hpp"
#include "tunegraph/search.hpp"

namespace tunegraph {

// Eight knob slots in family order (value index / cardinality, 0 when the
// knob is absent) followed by six kernel descriptors.
inline constexpr int kGbtFeatureDim = 14;

inline std::vector<double> gbt_features(const KernelSpec& spec, const KnobSpace& space, const KnobConfig& c) {
  std::vector<double> x(kGbtFeatureDim, 0.0);
  for (std::size_t f = 0; f < kKnobFamilies.size(); ++f) {
    if (auto k = space.find(kKnobFamilies[f].name)) {
      x[f] = static_cast<double>(c.choices[*k]) / static_cast<double>(space.knobs()[*k].values.size());
    }
  }
  x[8] = static_cast<double>(static_cast<int>(spec.op_type));
  x[9] = static_cast<double>(spec.input_size);
  x[10] = static_cast<double>(spec.in_channels);
  x[11] = static_cast<double>(spec.out_channels);
  x[12] = static_cast<double>(spec.kernel_size);
  x[13] = static_cast<double>(spec.stride);
  return x;
}

struct GbtHyperParams {
  int n_trees = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
};

struct GbtSample {
  std::vector<double> x;
  double y = 0.0;
  double weight = 1.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& x) const {
    if (nodes.empty()) return 0.0;
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

struct GbtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  int max_depth = 4;
  int n_trees = 0;
  double base_prediction = 0.0;
  int num_features = 0;
};

inline double gbt_predict(const GbtModel& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.num_features) throw DomainError("GBT feature dimension mismatch");
  double sum = 0.0;
  for (const auto& t : m.trees) sum += t.predict(x);
  return m.base_prediction + m.learning_rate * sum;
}

namespace detail {

struct TreeBuilder {
  const std::vector<GbtSample>& samples;
  const std::vector<double>& residual;
  const std::vector<std::vector<std::size_t>>& sorted;  // per feature, sample ids by value
  int max_depth;
  RegressionTree tree;

  double leaf_value(const std::vector<std::size_t>& ids) const {
    double s = 0, w = 0;
    for (auto i : ids) {
      s += samples[i].weight * residual[i];
      w += samples[i].weight;
    }
    return w > 0 ? s / w : 0.0;
  }

  int build(const std::vector<char>& member, const std::vector<std::size_t>& ids, int depth) {
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(self)].value = leaf_value(ids);
    if (depth >= max_depth || ids.size() < 2) return self;

    double total_s = 0, total_w = 0;
    for (auto i : ids) {
      total_s += samples[i].weight * residual[i];
      total_w += samples[i].weight;
    }
    const double parent = total_s * total_s / total_w;
    int best_f = -1;
    double best_thr = 0, best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      double ls = 0, lw = 0;
      const std::size_t* prev = nullptr;
      for (const auto& i : sorted[f]) {
        if (!member[i]) continue;
        if (prev != nullptr && samples[*prev].x[f] < samples[i].x[f] && lw > 0 && lw < total_w) {
          const double rs = total_s - ls, rw = total_w - lw;
          const double gain = ls * ls / lw + rs * rs / rw - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = static_cast<int>(f);
            best_thr = 0.5 * (samples[*prev].x[f] + samples[i].x[f]);
          }
        }
        ls += samples[i].weight * residual[i];
        lw += samples[i].weight;
        prev = &i;
      }
    }
    if (best_f < 0) return self;

    std::vector<std::size_t> left_ids, right_ids;
    std::vector<char> left_member(member.size(), 0), right_member(member.size(), 0);
    for (auto i : ids) {
      if (samples[i].x[static_cast<std::size_t>(best_f)] <= best_thr) {
        left_ids.push_back(i);
        left_member[i] = 1;
      } else {
        right_ids.push_back(i);
        right_member[i] = 1;
      }
    }
    const int l = build(left_member, left_ids, depth + 1);
    const int r = build(right_member, right_ids, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(self)];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = r;
    return self;
  }
};

}  // namespace detail

/// Weighted least-squares boosting. Samples with zero weight are dropped up
/// front so they cannot influence split thresholds.
inline GbtModel gbt_fit_weighted(std::vector<GbtSample> samples, const GbtHyperParams& hp) {
  samples.erase(std::remove_if(samples.begin(), samples.end(), [](const GbtSample& s) { return !(s.weight > 0); }),
                samples.end());
  if (samples.empty()) throw DomainError("gbt_fit needs at least one positively weighted sample");
  if (hp.n_trees < 0 || hp.max_depth < 0 || !(hp.learning_rate > 0)) throw ConfigError("bad GBT hyperparameters");
  const std::size_t dim = samples.front().x.size();
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw DomainError("GBT samples have inconsistent feature dimension");
    if (!std::isfinite(s.y)) throw DomainError("GBT label is not finite");
  }
  GbtModel m;
  m.learning_rate = hp.learning_rate;
  m.max_depth = hp.max_depth;
  m.n_trees = hp.n_trees;
  m.num_features = static_cast<int>(dim);
  double sw = 0, sy = 0;
  for (const auto& s : samples) {
    sy += s.weight * s.y;
    sw += s.weight;
  }
  m.base_prediction = sy / sw;

  std::vector<std::vector<std::size_t>> sorted(dim);
  for (std::size_t f = 0; f < dim; ++f) {
    sorted[f].resize(samples.size());
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].x[f] < samples[b].x[f]; });
  }
  std::vector<double> pred(samples.size(), m.base_prediction), residual(samples.size());
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  const std::vector<char> member(samples.size(), 1);
  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t i = 0; i < samples.size(); ++i) residual[i] = samples[i].y - pred[i];
    detail::TreeBuilder builder{samples, residual, sorted, hp.max_depth, {}};
    builder.build(member, all, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) pred[i] += hp.learning_rate * builder.tree.predict(samples[i].x);
    m.trees.push_back(std::move(builder.tree));
  }
  return m;
}

inline GbtModel gbt_fit(const std::vector<std::pair<std::vector<double>, double>>& samples, const GbtHyperParams& hp) {
  if (samples.empty()) throw DomainError("gbt_fit needs a non-empty sample set");
  std::vector<GbtSample> s;
  s.reserve(samples.size());
  for (const auto& [x, y] : samples) s.push_back({x, y, 1.0});
  return gbt_fit_weighted(std::move(s), hp);
}

/// Priors pooled ahead of the new samples with weight `prior_weight`.
inline GbtModel gbt_warm_start(const std::vector<std::pair<std::vector<double>, double>>& prior,
                               const std::vector<std::pair<std::vector<double>, double>>& fresh,
                               const GbtHyperParams& hp, double prior_weight = 0.2) {
  if (prior.empty() && fresh.empty()) throw DomainError("gbt_warm_start needs prior or new samples");
  if (prior_weight < 0) throw DomainError("prior weight must be non-negative");
  std::vector<GbtSample> s;
  for (const auto& [x, y] : prior) s.push_back({x, y, prior_weight});
  for (const auto& [x, y] : fresh) s.push_back({x, y, 1.0});
  return gbt_fit_weighted(std::move(s), hp);
}

// ---------------------------------------------------------------------------
// Serialization: nested split records
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json tree_to_json(const RegressionTree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.feature < 0) return nlohmann::json{{"leaf", hex_double(n.value)}};
  return nlohmann::json{{"feature", n.feature},
                        {"threshold", hex_double(n.threshold)},
                        {"left", tree_to_json(t, n.left)},
                        {"right", tree_to_json(t, n.right)}};
}

inline int tree_from_json(const nlohmann::json& j, RegressionTree& t) {
  const int self = static_cast<int>(t.nodes.size());
  t.nodes.push_back({});
  if (j.contains("leaf")) {
    t.nodes[static_cast<std::size_t>(self)].value = parse_hex_double(j.at("leaf").get<std::string>());
    return self;
  }
  const int l = tree_from_json(j.at("left"), t);
  const int r = tree_from_json(j.at("right"), t);
  auto& n = t.nodes[static_cast<std::size_t>(self)];
  n.feature = j.at("feature").get<int>();
  n.threshold = parse_hex_double(j.at("threshold").get<std::string>());
  n.left = l;
  n.right = r;
  return self;
}

}  // namespace detail

inline nlohmann::json gbt_to_json(const GbtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(t.nodes.empty() ? nlohmann::json(nullptr) : detail::tree_to_json(t, 0));
  return nlohmann::json{{"format", "tunegraph-gbt"},
                        {"version", 1},
                        {"learning_rate", hex_double(m.learning_rate)},
                        {"max_depth", m.max_depth},
                        {"n_trees", m.n_trees},
                        {"base_prediction", hex_double(m.base_prediction)},
                        {"num_features", m.num_features},
                        {"trees", trees}};
}

inline GbtModel gbt_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "tunegraph-gbt" || j.at("version").get<int>() != 1) {
      throw ConfigError("not a version-1 GBT checkpoint");
    }
    GbtModel m;
    m.learning_rate = parse_hex_double(j.at("learning_rate").get<std::string>());
    m.max_depth = j.at("max_depth").get<int>();
    m.n_trees = j.at("n_trees").get<int>();
    m.base_prediction = parse_hex_double(j.at("base_prediction").get<std::string>());
    m.num_features = j.at("num_features").get<int>();
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      if (!tj.is_null()) detail::tree_from_json(tj, t);
      for (const auto& n : t.nodes) {
        if (n.feature >= m.num_features) throw ConfigError("GBT split feature out of range");
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed GBT checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Random arm
// ---------------------------------------------------------------------------

/// Uniform without-replacement sampling, measured in rounds of `batch`.
inline TuningRecord random_search_arm(const TuneProblem& problem, const PlatformProfile& profile, std::size_t budget,
                                      std::size_t batch, Rng& rng) {
  if (batch == 0) throw DomainError("batch must be >= 1");
  TuningRecord rec;
  rec.spec = problem.spec;
  rec.arm = "random";
  rec.profile = profile.name;
  VisitedSet visited;
  budget = static_cast<std::size_t>(std::min<std::uint64_t>(budget, problem.space.size()));
  for (std::size_t round = 0; rec.trials.size() < budget; ++round) {
    const auto picks = sample_unvisited(problem.space.size(), std::min(batch, budget - rec.trials.size()), visited, rng);
    for (auto i : picks) {
      visited.insert(i);
      const auto m = measure(problem.spec, problem.space, index_config(problem.space, i), profile);
      rec.append(round, i, m.gflops, m.feasible, std::numeric_limits<double>::quiet_NaN());
    }
  }
  return rec;
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_BASELINES_HPP_
