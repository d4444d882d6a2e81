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
 * \file tune.hpp
 * \brief The propose / measure / update loop and the framework arms.
 *
 * Arms:
 *   random      uniform sampling
 *   xgb         SA over a boosted-tree model refit every round
 *   xgb-Xfer    as xgb, with down-weighted samples from other kernels
 *   meta-SA(-T) SA over the meta-learned cost model, fine-tuned online
 *   meta-BO(-T) cost model ranks a candidate pool, a GP over the model's
 *               residuals picks the batch by UCB
 *   bo          GP-only batch UCB (no cost model)
 * The -T arms feed super-graph augmented inputs to the cost model.
 */

#ifndef TUNEGRAPH_TUNE_HPP_
#define TUNEGRAPH_TUNE_HPP_

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tunegraph/baselines.hpp"
#include "tunegraph/cost_model.hpp"
#include "tunegraph/graph_encoding.hpp"
#include "tunegraph/meta_learning.hpp"
#include "tunegraph/perf_oracle.hpp"
#include "tunegraph/search.hpp"

namespace tunegraph {

enum class Arm { kRandom, kXgb, kXgbXfer, kMetaBo, kMetaBoT, kMetaSa, kMetaSaT, kBo };

inline constexpr std::array<Arm, 8> kAllArms = {Arm::kRandom, Arm::kXgb,     Arm::kXgbXfer, Arm::kMetaBo,
                                               Arm::kMetaBoT, Arm::kMetaSa, Arm::kMetaSaT, Arm::kBo};

inline std::string_view to_string(Arm a) {
  switch (a) {
    case Arm::kRandom: return "random";
    case Arm::kXgb: return "xgb";
    case Arm::kXgbXfer: return "xgb-Xfer";
    case Arm::kMetaBo: return "meta-BO";
    case Arm::kMetaBoT: return "meta-BO-T";
    case Arm::kMetaSa: return "meta-SA";
    case Arm::kMetaSaT: return "meta-SA-T";
    case Arm::kBo: return "bo";
  }
  return "?";
}

inline Arm parse_arm(std::string_view name) {
  for (Arm a : kAllArms) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown arm: " + std::string(name));
}

inline bool uses_cost_model(Arm a) {
  return a == Arm::kMetaBo || a == Arm::kMetaBoT || a == Arm::kMetaSa || a == Arm::kMetaSaT;
}
inline bool uses_augmented_graphs(Arm a) { return a == Arm::kMetaBoT || a == Arm::kMetaSaT; }
inline bool uses_gbt(Arm a) { return a == Arm::kXgb || a == Arm::kXgbXfer; }
inline bool uses_gp(Arm a) { return a == Arm::kMetaBo || a == Arm::kMetaBoT || a == Arm::kBo; }

struct TuneConfig {
  std::size_t budget = 1000;
  std::size_t batch = 16;
  SaSchedule sa;
  double beta_ucb = 2.0;
  std::size_t candidate_pool = 512;
  std::size_t pool_oversample = 2;   // model-ranked draws per pool slot
  std::size_t mutation_parents = 8;  // best measured configs mutated into the pool
  std::size_t gp_max_points = 256;
  std::vector<double> gp_lengthscale_grid{0.1, 0.3, 1.0, 3.0};
  double gp_noise_variance = 1e-4;
  double fine_tune_alpha = 0.05;
  int fine_tune_steps = 64;
  GbtHyperParams gbt;
  double xfer_weight = 0.2;

  void validate() const {
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (budget < batch) throw ConfigError("budget must be >= batch");
    if (candidate_pool < 1 || pool_oversample < 1) throw ConfigError("candidate pool must be non-empty");
    if (gp_max_points < 2) throw ConfigError("gp_max_points must be >= 2");
    if (!(beta_ucb >= 0) || !(fine_tune_alpha >= 0) || fine_tune_steps < 0) {
      throw ConfigError("negative tuning coefficient");
    }
    sa.validate();
  }
};

inline void to_json(nlohmann::json& j, const TuneConfig& c) {
  j = nlohmann::json{{"budget", c.budget},
                     {"batch", c.batch},
                     {"sa",
                      {{"initial_temp", c.sa.initial_temp},
                       {"cooling", c.sa.cooling},
                       {"steps_per_round", c.sa.steps_per_round},
                       {"parallel_chains", c.sa.parallel_chains}}},
                     {"beta_ucb", c.beta_ucb},
                     {"candidate_pool", c.candidate_pool},
                     {"pool_oversample", c.pool_oversample},
                     {"mutation_parents", c.mutation_parents},
                     {"gp_max_points", c.gp_max_points},
                     {"gp_lengthscale_grid", c.gp_lengthscale_grid},
                     {"gp_noise_variance", c.gp_noise_variance},
                     {"fine_tune_alpha", c.fine_tune_alpha},
                     {"fine_tune_steps", c.fine_tune_steps},
                     {"gbt",
                      {{"n_trees", c.gbt.n_trees},
                       {"max_depth", c.gbt.max_depth},
                       {"learning_rate", c.gbt.learning_rate}}},
                     {"xfer_weight", c.xfer_weight}};
}

inline void from_json(const nlohmann::json& j, TuneConfig& c) {
  c = TuneConfig{};
  c.budget = j.value("budget", c.budget);
  c.batch = j.value("batch", c.batch);
  if (j.contains("sa")) {
    const auto& s = j.at("sa");
    c.sa.initial_temp = s.value("initial_temp", c.sa.initial_temp);
    c.sa.cooling = s.value("cooling", c.sa.cooling);
    c.sa.steps_per_round = s.value("steps_per_round", c.sa.steps_per_round);
    c.sa.parallel_chains = s.value("parallel_chains", c.sa.parallel_chains);
  }
  c.beta_ucb = j.value("beta_ucb", c.beta_ucb);
  c.candidate_pool = j.value("candidate_pool", c.candidate_pool);
  c.pool_oversample = j.value("pool_oversample", c.pool_oversample);
  c.mutation_parents = j.value("mutation_parents", c.mutation_parents);
  c.gp_max_points = j.value("gp_max_points", c.gp_max_points);
  c.gp_lengthscale_grid = j.value("gp_lengthscale_grid", c.gp_lengthscale_grid);
  c.gp_noise_variance = j.value("gp_noise_variance", c.gp_noise_variance);
  c.fine_tune_alpha = j.value("fine_tune_alpha", c.fine_tune_alpha);
  c.fine_tune_steps = j.value("fine_tune_steps", c.fine_tune_steps);
  if (j.contains("gbt")) {
    const auto& g = j.at("gbt");
    c.gbt.n_trees = g.value("n_trees", c.gbt.n_trees);
    c.gbt.max_depth = g.value("max_depth", c.gbt.max_depth);
    c.gbt.learning_rate = g.value("learning_rate", c.gbt.learning_rate);
  }
  c.xfer_weight = j.value("xfer_weight", c.xfer_weight);
  c.validate();
}

/// Read-only inputs an arm may need.
struct ArmResources {
  const ModelState* model = nullptr;                    // meta arms (raw or augmented per arm)
  const SuperGraphTemplate* super_template = nullptr;   // -T arms
  const std::vector<GbtSample>* xfer_prior = nullptr;   // xgb-Xfer
};

/// Lowers configs of one problem to (optionally augmented) code graphs.
class GraphEncoder {
 public:
  GraphEncoder(TuneProblem problem, const SuperGraphTemplate* tmpl) : problem_(std::move(problem)), tmpl_(tmpl) {}

  CodeGraph graph(std::uint64_t index) const {
    CodeGraph g = ast_to_graph(lower_to_loop_nest(problem_.spec, problem_.space, index_config(problem_.space, index)));
    return tmpl_ != nullptr ? augment_to_super(g, *tmpl_, problem_.spec.op_type) : g;
  }
  const TuneProblem& problem() const { return problem_; }

 private:
  TuneProblem problem_;
  const SuperGraphTemplate* tmpl_;
};

/// Cost-model predictions with per-config embedding cache. The GCN is frozen
/// after pre-training, so only the head changes during a run.
class ModelScorer {
 public:
  ModelScorer(GraphEncoder encoder, ModelState model) : encoder_(std::move(encoder)), model_(std::move(model)) {}

  const Eigen::VectorXd& embedding(std::uint64_t index) {
    auto it = cache_.find(index);
    if (it == cache_.end()) it = cache_.emplace(index, embed(encoder_.graph(index), model_)).first;
    return it->second;
  }
  double predict(std::uint64_t index) { return head_predict(model_.head, embedding(index)); }
  const ModelState& model() const { return model_; }
  void set_head(HeadParams h) { model_.head = std::move(h); }

 private:
  GraphEncoder encoder_;
  ModelState model_;
  std::unordered_map<std::uint64_t, Eigen::VectorXd> cache_;
};

namespace detail {

struct Observation {
  std::uint64_t index;
  double value;  // arm-specific target
};

/// At most `cap` observations: the best half by value plus the most recent.
inline std::vector<Observation> cap_observations(const std::vector<Observation>& obs, std::size_t cap) {
  if (obs.size() <= cap) return obs;
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obs[a].value > obs[b].value; });
  std::vector<char> keep(obs.size(), 0);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < cap / 2; ++k, ++kept) keep[order[k]] = 1;
  for (std::size_t i = obs.size(); i-- > 0 && kept < cap;) {
    if (!keep[i]) {
      keep[i] = 1;
      ++kept;
    }
  }
  std::vector<Observation> out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (keep[i]) out.push_back(obs[i]);
  }
  return out;
}

inline GpSurrogate make_gp(const TuneConfig& cfg, const KnobSpace& space, const std::vector<Observation>& obs) {
  GpSurrogate gp;
  gp.lengthscale_grid = cfg.gp_lengthscale_grid;
  gp.noise_variance = cfg.gp_noise_variance;
  double sq = 0;
  for (const auto& o : cap_observations(obs, cfg.gp_max_points)) {
    gp.observed_x.push_back(knob_coordinates(space, o.index));
    gp.observed_y.push_back(o.value);
    sq += o.value * o.value;
  }
  // Zero-mean prior scaled to the targets' second moment.
  if (gp.observed_y.size() >= 2) gp.signal_variance = std::max(sq / static_cast<double>(gp.observed_y.size()), 1e-2);
  return gp_fit(std::move(gp));
}

}  // namespace detail

/// Runs one (problem, arm, platform, seed) cell.
inline TuningRecord tune(const TuneProblem& problem, Arm arm, const PlatformProfile& profile, const TuneConfig& cfg,
                         Rng& rng, const ArmResources& res = {}) {
  cfg.validate();
  const KnobSpace& space = problem.space;
  const std::size_t budget = static_cast<std::size_t>(std::min<std::uint64_t>(cfg.budget, space.size()));
  if (arm == Arm::kRandom) {
    TuningRecord rec = random_search_arm(problem, profile, budget, cfg.batch, rng);
    return rec;
  }
  if (uses_cost_model(arm) && res.model == nullptr) {
    throw ConfigError("arm " + std::string(to_string(arm)) + " needs a meta-trained checkpoint");
  }
  if (uses_augmented_graphs(arm) && res.super_template == nullptr) {
    throw ConfigError("arm " + std::string(to_string(arm)) + " needs a super-graph template");
  }
  if (arm == Arm::kXgbXfer && res.xfer_prior == nullptr) {
    throw ConfigError("arm xgb-Xfer needs prior samples");
  }

  TuningRecord rec;
  rec.spec = problem.spec;
  rec.arm = std::string(to_string(arm));
  rec.profile = profile.name;
  VisitedSet visited;

  std::optional<ModelScorer> scorer;
  if (uses_cost_model(arm)) {
    scorer.emplace(GraphEncoder(problem, uses_augmented_graphs(arm) ? res.super_template : nullptr), *res.model);
  }
  std::vector<EmbeddedSample> fine_tune_set;
  std::vector<GbtSample> gbt_set;
  std::optional<GbtModel> gbt;
  if (arm == Arm::kXgbXfer) {
    for (const auto& s : *res.xfer_prior) gbt_set.push_back({s.x, s.y, s.weight * cfg.xfer_weight});
    if (!gbt_set.empty()) gbt = gbt_fit_weighted(gbt_set, cfg.gbt);
  }
  struct Measured {
    std::uint64_t index;
    double gflops;
    bool feasible;
  };
  std::vector<Measured> history;

  auto gbt_x = [&](std::uint64_t i) { return gbt_features(problem.spec, space, index_config(space, i)); };

  for (std::size_t round = 0; rec.trials.size() < budget; ++round) {
    const std::size_t want = std::min(cfg.batch, budget - rec.trials.size());
    std::vector<std::uint64_t> picks;
    std::vector<double> predicted;

    if (uses_gbt(arm)) {
      if (gbt) {
        picks = sa_propose([&](std::uint64_t i) { return gbt_predict(*gbt, gbt_x(i)); }, space, cfg.sa, want,
                           visited, rng);
        for (auto i : picks) predicted.push_back(std::exp2(gbt_predict(*gbt, gbt_x(i))));
      } else {
        picks = sample_unvisited(space.size(), want, visited, rng);
      }
    } else if (arm == Arm::kMetaSa || arm == Arm::kMetaSaT) {
      picks = sa_propose([&](std::uint64_t i) { return scorer->predict(i); }, space, cfg.sa, want, visited, rng);
    } else if (arm == Arm::kBo) {
      std::vector<detail::Observation> obs;
      double mean = 0, sq = 0, n = 0;
      for (const auto& h : history) {
        if (!h.feasible) continue;
        const double y = std::log2(h.gflops);
        mean += y;
        sq += y * y;
        n += 1;
        obs.push_back({h.index, y});
      }
      if (n > 0) {
        mean /= n;
        const double var = sq / n - mean * mean;
        const double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
        for (auto& o : obs) o.value = (o.value - mean) / sd;
      }
      const GpSurrogate gp = detail::make_gp(cfg, space, obs);
      picks = bo_propose_batch(gp, space, want, cfg.beta_ucb, cfg.candidate_pool, visited, rng);
    } else {  // meta-BO, meta-BO-T
      std::vector<detail::Observation> obs;
      for (const auto& h : history) {
        if (h.feasible) obs.push_back({h.index, scorer->model().normalize_label(h.gflops) - scorer->predict(h.index)});
      }
      const GpSurrogate gp = detail::make_gp(cfg, space, obs);

      // Pool: annealing over the cost model, mutations of the best measured
      // configs, then model-ranked uniform draws to fill the rest.
      VisitedSet in_pool;
      std::vector<std::uint64_t> pool;
      for (auto i : sa_propose([&](std::uint64_t i) { return scorer->predict(i); }, space, cfg.sa,
                               cfg.candidate_pool / 2, visited, rng)) {
        if (in_pool.insert(i).second) pool.push_back(i);
      }
      std::vector<const Measured*> parents;
      for (const auto& h : history) {
        if (h.feasible) parents.push_back(&h);
      }
      std::stable_sort(parents.begin(), parents.end(), [](const Measured* a, const Measured* b) { return a->gflops > b->gflops; });
      if (parents.size() > cfg.mutation_parents) parents.resize(cfg.mutation_parents);
      if (!parents.empty()) {
        const std::size_t target = pool.size() + cfg.candidate_pool / 4;
        std::uniform_int_distribution<std::size_t> which(0, parents.size() - 1);
        std::uniform_int_distribution<int> moves(1, 3);
        for (std::size_t attempt = 0; attempt < 4 * cfg.candidate_pool && pool.size() < target; ++attempt) {
          std::uint64_t c = parents[which(rng)]->index;
          for (int m = moves(rng); m > 0; --m) c = sa_neighbor(space, c, rng);
          if (visited.count(c) == 0 && in_pool.insert(c).second) pool.push_back(c);
        }
      }
      if (pool.size() < cfg.candidate_pool) {
        const std::size_t fill = cfg.candidate_pool - pool.size();
        std::vector<std::pair<double, std::uint64_t>> draws;
        for (auto i : sample_unvisited(space.size(), fill * cfg.pool_oversample, visited, rng, &in_pool)) {
          draws.emplace_back(scorer->predict(i), i);
        }
        std::sort(draws.begin(), draws.end(), [](const auto& a, const auto& b) {
          return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t k = 0; k < draws.size() && k < fill; ++k) {
          in_pool.insert(draws[k].second);
          pool.push_back(draws[k].second);
        }
      }
      if (pool.empty()) break;
      std::vector<std::pair<double, std::uint64_t>> ranked;
      for (auto i : pool) ranked.emplace_back(scorer->predict(i), i);
      std::vector<Eigen::VectorXd> coords;
      std::vector<double> prior;
      for (const auto& [p, i] : ranked) {
        coords.push_back(knob_coordinates(space, i));
        prior.push_back(p);
      }
      VisitedSet taken;
      for (auto j : ucb_select(gp, coords, want, cfg.beta_ucb, &prior)) {
        picks.push_back(ranked[j].second);
        taken.insert(ranked[j].second);
      }
      // a pool smaller than the batch is topped up uniformly
      for (auto i : sample_unvisited(space.size(), want - picks.size(), visited, rng, &taken)) picks.push_back(i);
    }
    if (picks.empty()) break;

    if (scorer) {
      predicted.clear();
      for (auto i : picks) predicted.push_back(scorer->model().to_gflops(scorer->predict(i)));
    }
    for (std::size_t k = 0; k < picks.size(); ++k) {
      const std::uint64_t i = picks[k];
      visited.insert(i);
      const Measurement m = measure(problem.spec, space, index_config(space, i), profile);
      const double pred = k < predicted.size() ? predicted[k] : std::numeric_limits<double>::quiet_NaN();
      rec.append(round, i, m.gflops, m.feasible, pred);
      history.push_back({i, m.gflops, m.feasible});
      if (scorer) fine_tune_set.push_back({scorer->embedding(i), scorer->model().normalize_label(m.gflops)});
      if (uses_gbt(arm)) gbt_set.push_back({gbt_x(i), std::log2(std::max(m.gflops, kFloorGflops)), 1.0});
    }

    if (scorer) {
      scorer->set_head(fine_tune_head(scorer->model().head, std::span<const EmbeddedSample>(fine_tune_set),
                                      cfg.fine_tune_alpha, cfg.fine_tune_steps));
    }
    if (uses_gbt(arm)) gbt = gbt_fit_weighted(gbt_set, cfg.gbt);
  }
  return rec;
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_TUNE_HPP_
