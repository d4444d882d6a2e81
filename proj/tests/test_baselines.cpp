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

#include <set>

#include "tunegraph/baselines.hpp"

namespace tunegraph {
namespace {

using Samples = std::vector<std::pair<std::vector<double>, double>>;

Samples noisy_plane(Rng& rng, int n, double shift) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Samples s;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng)};
    s.emplace_back(x, 3 * x[0] - x[1] + shift + 0.1 * u(rng));
  }
  return s;
}

TEST(Gbt, SingleSampleAndConstantLabels) {
  const GbtModel one = gbt_fit({{{0.3, 0.7}, 4.5}}, {});
  EXPECT_DOUBLE_EQ(gbt_predict(one, {0.3, 0.7}), 4.5);
  EXPECT_DOUBLE_EQ(gbt_predict(one, {9.0, -1.0}), 4.5);
  Samples flat;
  for (int i = 0; i < 10; ++i) flat.push_back({{double(i)}, 2.0});
  EXPECT_DOUBLE_EQ(gbt_predict(gbt_fit(flat, {}), {4.5}), 2.0);
}

TEST(Gbt, StumpRecoversAStep) {
  Samples s;
  for (int i = 0; i < 10; ++i) s.push_back({{i / 10.0}, i < 5 ? 0.0 : 1.0});
  GbtHyperParams hp;
  hp.n_trees = 1;
  hp.max_depth = 1;
  hp.learning_rate = 1.0;
  const GbtModel m = gbt_fit(s, hp);
  ASSERT_EQ(m.trees.size(), 1u);
  for (const auto& [x, y] : s) EXPECT_NEAR(gbt_predict(m, x), y, 1e-12);
}

TEST(Gbt, TrainingErrorShrinksWithTrees) {
  Rng rng(1);
  const Samples s = noisy_plane(rng, 200, 0.0);
  double prev = 1e300;
  for (int trees : {1, 10, 100}) {
    GbtHyperParams hp;
    hp.n_trees = trees;
    const GbtModel m = gbt_fit(s, hp);
    double sse = 0;
    for (const auto& [x, y] : s) sse += (gbt_predict(m, x) - y) * (gbt_predict(m, x) - y);
    EXPECT_LT(sse, prev);
    prev = sse;
  }
}

TEST(Gbt, WarmStartWeightEndpoints) {
  Rng rng(2);
  const Samples prior = noisy_plane(rng, 80, 5.0), fresh = noisy_plane(rng, 40, 0.0);
  Samples pooled = prior;
  pooled.insert(pooled.end(), fresh.begin(), fresh.end());
  const GbtHyperParams hp;
  EXPECT_EQ(gbt_to_json(gbt_warm_start(prior, fresh, hp, 1.0)), gbt_to_json(gbt_fit(pooled, hp)));
  EXPECT_EQ(gbt_to_json(gbt_warm_start(prior, fresh, hp, 0.0)), gbt_to_json(gbt_fit(fresh, hp)));
  EXPECT_THROW(gbt_warm_start(prior, fresh, hp, -1.0), DomainError);
  EXPECT_THROW(gbt_warm_start({}, {}, hp), DomainError);
}

TEST(Gbt, PriorWeightScalesInfluence) {
  Rng rng(3);
  const Samples prior = noisy_plane(rng, 100, 5.0), fresh = noisy_plane(rng, 20, 0.0);
  double sp = 0, sf = 0;
  for (const auto& s : prior) sp += s.second;
  for (const auto& s : fresh) sf += s.second;
  const GbtModel low = gbt_warm_start(prior, fresh, {}, 0.05);
  EXPECT_NEAR(low.base_prediction, (0.05 * sp + sf) / (0.05 * 100 + 20), 1e-12);
  auto fresh_sse = [&](const GbtModel& m) {
    double e = 0;
    for (const auto& [x, y] : fresh) e += (gbt_predict(m, x) - y) * (gbt_predict(m, x) - y);
    return e;
  };
  EXPECT_LT(fresh_sse(low), fresh_sse(gbt_warm_start(prior, fresh, {}, 0.8)));
}

TEST(Gbt, JsonRoundTripIsExact) {
  Rng rng(4);
  const Samples s = noisy_plane(rng, 100, 1.0);
  const GbtModel m = gbt_fit(s, {});
  const GbtModel back = gbt_from_json(nlohmann::json::parse(gbt_to_json(m).dump()));
  for (const auto& [x, y] : s) EXPECT_EQ(gbt_predict(back, x), gbt_predict(m, x));
  EXPECT_THROW(gbt_from_json(nlohmann::json{{"format", "other"}}), ConfigError);
}

TEST(Gbt, RejectsBadInput) {
  EXPECT_THROW(gbt_fit({}, {}), DomainError);
  EXPECT_THROW(gbt_fit({{{1.0}, 1.0}, {{1.0, 2.0}, 1.0}}, {}), DomainError);
  EXPECT_THROW(gbt_fit({{{1.0}, std::nan("")}}, {}), DomainError);
  GbtHyperParams hp;
  hp.learning_rate = 0.0;
  EXPECT_THROW(gbt_fit({{{1.0}, 1.0}}, hp), ConfigError);
}

TEST(Features, KnobRanksThenKernelDescriptors) {
  const ToyProblem toy = toy_problem();
  KnobConfig c;
  c.choices = {1, 2, 3, 0};
  const auto x = gbt_features(toy.spec, toy.space, c);
  ASSERT_EQ(x.size(), static_cast<std::size_t>(kGbtFeatureDim));
  double knob_sum = 0;
  for (int f = 0; f < 8; ++f) knob_sum += x[f];
  EXPECT_DOUBLE_EQ(knob_sum, 0.25 + 0.5 + 0.75 + 0.0);
  EXPECT_EQ(x[9], 32);
  EXPECT_EQ(x[12], 3);
}

TEST(RandomSearch, DistinctAndClippedToSpace) {
  const ToyProblem toy = toy_problem();
  Rng rng(5);
  const TuneProblem p{toy.spec, toy.space};
  const TuningRecord r = random_search_arm(p, platform_a(), 1000, 16, rng);
  ASSERT_EQ(r.trials.size(), 256u);
  std::set<std::uint64_t> seen;
  for (const auto& t : r.trials) seen.insert(t.config_index);
  EXPECT_EQ(seen.size(), 256u);
  EXPECT_EQ(r.trials[15].round, 0u);
  EXPECT_EQ(r.trials[16].round, 1u);
  EXPECT_THROW(random_search_arm(p, platform_a(), 10, 0, rng), DomainError);
}

TEST(RandomSearch, BestFollowsOrderStatistics) {
  // Probability that n draws without replacement hit one of the top m of N.
  const ToyProblem toy = toy_problem();
  const TuneProblem p{toy.spec, toy.space};
  std::vector<double> all;
  for (std::uint64_t i = 0; i < 256; ++i) all.push_back(measure(toy.spec, toy.space, index_config(toy.space, i), platform_a()).gflops);
  std::vector<double> sorted = all;
  std::sort(sorted.rbegin(), sorted.rend());
  const std::size_t n = 16, top = 32;
  const double threshold = sorted[top - 1];
  double miss = 1;
  for (std::size_t i = 0; i < n; ++i) miss *= double(256 - top - i) / double(256 - i);
  const double expect = 1 - miss;
  const int runs = 2000;
  int hits = 0;
  for (int s = 0; s < runs; ++s) {
    Rng rng(1000 + s);
    hits += random_search_arm(p, platform_a(), n, 16, rng).best() >= threshold;
  }
  const double sigma = std::sqrt(expect * (1 - expect) / runs);
  EXPECT_NEAR(hits / double(runs), expect, 4 * sigma);
}

}  // namespace
}  // namespace tunegraph
