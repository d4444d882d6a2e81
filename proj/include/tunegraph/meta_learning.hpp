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
 * \file meta_learning.hpp
 * \brief Supervised pre-training, episodic task sampling, MAML over the
 *        regression head, and online fine-tuning.
 *
 * After pre-training the GCN and aggregation weights are frozen, so every
 * later phase works on cached graph embeddings and touches only the head.
 */

#ifndef TUNEGRAPH_META_LEARNING_HPP_
#define TUNEGRAPH_META_LEARNING_HPP_

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunegraph/common.hpp"
#include "tunegraph/cost_model.hpp"

namespace tunegraph {

struct LabeledSample {
  CodeGraph graph;
  std::string kernel_class;
  double label_gflops = kFloorGflops;
};

struct MetaConfig {
  double alpha = 0.01;   // inner / fine-tune lr
  double beta = 0.001;   // outer lr
  double gamma = 0.005;  // pre-train lr
  int pretrain_epochs = 30;
  int inner_steps = 1;
  int n_way = 3;
  int k_shot = 2;
  int k_query = 4;  // cap on held-out query samples per class
  int meta_batch = 8;
  int outer_steps = 2000;
  bool first_order = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha >= 0) || !(beta >= 0) || !(gamma > 0)) throw ConfigError("learning rates must be non-negative");
    if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
    if (n_way < 1 || k_shot < 1 || k_query < 1 || meta_batch < 1) throw ConfigError("task shape must be positive");
    if (pretrain_epochs < 0 || outer_steps < 0) throw ConfigError("epoch and step counts must be non-negative");
  }
};

inline void to_json(nlohmann::json& j, const MetaConfig& c) {
  j = nlohmann::json{{"alpha", c.alpha},         {"beta", c.beta},
                     {"gamma", c.gamma},         {"pretrain_epochs", c.pretrain_epochs},
                     {"inner_steps", c.inner_steps}, {"n_way", c.n_way},
                     {"k_shot", c.k_shot},       {"k_query", c.k_query},
                     {"meta_batch", c.meta_batch}, {"outer_steps", c.outer_steps},
                     {"first_order", c.first_order}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, MetaConfig& c) {
  c = MetaConfig{};
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.inner_steps = j.value("inner_steps", c.inner_steps);
  c.n_way = j.value("n_way", c.n_way);
  c.k_shot = j.value("k_shot", c.k_shot);
  c.k_query = j.value("k_query", c.k_query);
  c.meta_batch = j.value("meta_batch", c.meta_batch);
  c.outer_steps = j.value("outer_steps", c.outer_steps);
  c.first_order = j.value("first_order", c.first_order);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

/// Support and query sets as indices into the dataset the task was drawn from.
struct MetaTask {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
  std::vector<std::string> classes;
};

// ---------------------------------------------------------------------------
// Normalization statistics
// ---------------------------------------------------------------------------

/// Per-slot mean/std over featured rows; constant slots get std 1.
inline FeatureNorm compute_feature_norm(const std::vector<LabeledSample>& ds) {
  std::array<double, kFeatureDim> sum{}, sq{};
  double n = 0;
  for (const auto& s : ds) {
    for (const auto& node : s.graph.nodes) {
      if (!node.feature) continue;
      for (int c = 0; c < kFeatureDim; ++c) {
        sum[c] += (*node.feature)[c];
        sq[c] += (*node.feature)[c] * (*node.feature)[c];
      }
      n += 1;
    }
  }
  FeatureNorm norm;
  if (n == 0) return norm;
  for (int c = 0; c < kFeatureDim; ++c) {
    norm.mean[c] = sum[c] / n;
    const double var = std::max(0.0, sq[c] / n - norm.mean[c] * norm.mean[c]);
    norm.std[c] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return norm;
}

inline LabelNorm compute_label_norm(const std::vector<LabeledSample>& ds) {
  LabelNorm norm;
  if (ds.empty()) return norm;
  double sum = 0, sq = 0;
  for (const auto& s : ds) {
    const double y = std::log2(std::max(s.label_gflops, kFloorGflops));
    sum += y;
    sq += y * y;
  }
  const double n = static_cast<double>(ds.size());
  norm.mean = sum / n;
  const double var = std::max(0.0, sq / n - norm.mean * norm.mean);
  norm.std = var > 1e-12 ? std::sqrt(var) : 1.0;
  return norm;
}

// ---------------------------------------------------------------------------
// Pre-training
// ---------------------------------------------------------------------------

namespace detail {

inline void apply_sgd(ModelState& m, const Gradients& g, double lr) {
  for (std::size_t l = 0; l < m.gcn.layers.size(); ++l) m.gcn.layers[l] -= lr * g.gcn.layers[l];
  m.agg.sum_weights -= lr * g.agg.sum_weights;
  m.head.flat -= lr * g.head;
}

inline void clear(Gradients& g) {
  for (auto& w : g.gcn.layers) w.setZero();
  g.agg.sum_weights.setZero();
  g.head.setZero();
}

}  // namespace detail

/// Random init, normalization statistics from `ds`, then per-sample SGD over
/// the whole model for cfg.pretrain_epochs epochs in a freshly shuffled order.
inline ModelState pretrain(const std::vector<LabeledSample>& ds, const MetaConfig& cfg, Rng& rng,
                           const ModelDims& dims = {}, std::vector<double>* epoch_losses = nullptr) {
  if (ds.empty()) throw DomainError("pretrain needs a non-empty dataset");
  ModelState m = init_model(dims, rng);
  m.feature_norm = compute_feature_norm(ds);
  m.label_norm = compute_label_norm(ds);

  std::vector<PreparedGraph> graphs;
  std::vector<double> labels;
  graphs.reserve(ds.size());
  for (const auto& s : ds) {
    graphs.push_back(prepare(s.graph, m.feature_norm));
    labels.push_back(m.normalize_label(s.label_gflops));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients g = zero_gradients(m);
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t i : order) {
      detail::clear(g);
      total += accumulate_grad(graphs[i], labels[i], m, GradScope::kAll, 1.0, g);
      detail::apply_sgd(m, g, cfg.gamma);
    }
    if (!std::isfinite(total)) throw NumericError("pre-training diverged at epoch " + std::to_string(epoch));
    if (epoch_losses != nullptr) epoch_losses->push_back(total / static_cast<double>(ds.size()));
  }
  return m;
}

/// Frozen-embedding view of a dataset: embeddings and normalized labels.
inline std::vector<EmbeddedSample> embed_samples(const ModelState& m, const std::vector<LabeledSample>& ds) {
  std::vector<EmbeddedSample> out;
  out.reserve(ds.size());
  for (const auto& s : ds) out.push_back({embed(s.graph, m), m.normalize_label(s.label_gflops)});
  return out;
}

// ---------------------------------------------------------------------------
// Task sampling
// ---------------------------------------------------------------------------

inline std::map<std::string, std::vector<std::size_t>> group_by_class(const std::vector<LabeledSample>& ds) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) groups[ds[i].kernel_class].push_back(i);
  return groups;
}

inline std::vector<MetaTask> sample_meta_tasks(const std::vector<LabeledSample>& ds, const MetaConfig& cfg,
                                               Rng& rng) {
  const auto groups = group_by_class(ds);
  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> classes;
  for (const auto& entry : groups) {
    if (entry.second.size() < static_cast<std::size_t>(cfg.k_shot) + 1) {
      throw DomainError("class " + entry.first + " has " + std::to_string(entry.second.size()) +
                        " samples, needs at least " + std::to_string(cfg.k_shot + 1));
    }
    classes.push_back(&entry);
  }
  if (classes.size() < static_cast<std::size_t>(cfg.n_way)) {
    throw DomainError("dataset has " + std::to_string(classes.size()) + " classes, needs " +
                      std::to_string(cfg.n_way));
  }
  std::vector<MetaTask> tasks(static_cast<std::size_t>(cfg.meta_batch));
  std::vector<std::size_t> class_order(classes.size());
  for (auto& task : tasks) {
    std::iota(class_order.begin(), class_order.end(), 0);
    for (int w = 0; w < cfg.n_way; ++w) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(w), class_order.size() - 1);
      std::swap(class_order[w], class_order[pick(rng)]);
      const auto& [name, members] = *classes[class_order[w]];
      std::vector<std::size_t> shuffled = members;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const std::size_t k = static_cast<std::size_t>(cfg.k_shot);
      const std::size_t q = std::min<std::size_t>(static_cast<std::size_t>(cfg.k_query), shuffled.size() - k);
      task.classes.push_back(name);
      task.support.insert(task.support.end(), shuffled.begin(), shuffled.begin() + k);
      task.query.insert(task.query.end(), shuffled.begin() + k, shuffled.begin() + k + q);
    }
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// MAML
//
// A learner supplies
//   double loss_grad(const VectorXd& theta, std::span<const Sample>, VectorXd& grad) const
//   VectorXd hvp(const VectorXd& theta, std::span<const Sample>, const VectorXd& v) const
// ---------------------------------------------------------------------------

/// The regression head as a MAML learner over embedded samples.
struct HeadLearner {
  using Sample = EmbeddedSample;
  HeadDims dims;

  double loss_grad(const Eigen::VectorXd& theta, std::span<const Sample> batch, Eigen::VectorXd& grad) const {
    return head_loss_grad(HeadParams{dims, theta}, batch, grad);
  }
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta, std::span<const Sample> batch, const Eigen::VectorXd& v) const {
    return head_hvp(HeadParams{dims, theta}, batch, v);
  }
};

/// `steps` plain gradient steps on the support loss.
template <class Learner>
Eigen::VectorXd maml_adapt(const Learner& learner, Eigen::VectorXd theta,
                           std::span<const typename Learner::Sample> support, double alpha, int steps,
                           std::vector<Eigen::VectorXd>* path = nullptr, double* support_loss = nullptr) {
  Eigen::VectorXd g;
  for (int s = 0; s < steps; ++s) {
    if (path != nullptr) path->push_back(theta);
    const double l = learner.loss_grad(theta, support, g);
    if (support_loss != nullptr && s == 0) *support_loss = l;
    theta -= alpha * g;
  }
  return theta;
}

struct TaskGradient {
  Eigen::VectorXd grad;  // d L_query(theta') / d theta
  double support_loss = 0.0;
  double query_loss = 0.0;
};

/// Query-loss gradient with respect to the pre-adaptation parameters. The
/// second-order path back-propagates through every inner step:
/// v <- (I - alpha H_support(theta_k)) v.
template <class Learner>
TaskGradient maml_task_gradient(const Learner& learner, const Eigen::VectorXd& theta,
                                std::span<const typename Learner::Sample> support,
                                std::span<const typename Learner::Sample> query, double alpha, int inner_steps,
                                bool first_order) {
  TaskGradient out;
  std::vector<Eigen::VectorXd> path;
  const Eigen::VectorXd adapted =
      maml_adapt(learner, theta, support, alpha, inner_steps, &path, &out.support_loss);
  out.query_loss = learner.loss_grad(adapted, query, out.grad);
  if (!first_order) {
    for (std::size_t k = path.size(); k-- > 0;) out.grad -= alpha * learner.hvp(path[k], support, out.grad);
  }
  return out;
}

/// theta <- theta - beta * sum_i g_i (tasks are summed, not averaged).
template <class Learner>
Eigen::VectorXd maml_outer_update(const Learner& learner, const Eigen::VectorXd& theta,
                                  const std::vector<std::pair<std::vector<typename Learner::Sample>,
                                                              std::vector<typename Learner::Sample>>>& tasks,
                                  double alpha, double beta, int inner_steps, bool first_order) {
  if (tasks.empty()) throw DomainError("meta step needs at least one task");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(theta.size());
  for (const auto& [support, query] : tasks) {
    total += maml_task_gradient(learner, theta, std::span(support), std::span(query), alpha, inner_steps,
                                first_order)
                 .grad;
  }
  return theta - beta * total;
}

/// Head after `inner_steps` head-only gradient steps on the support set.
inline HeadParams inner_adapt(const ModelState& m, std::span<const EmbeddedSample> support, double alpha,
                              int inner_steps) {
  if (support.empty()) throw DomainError("inner_adapt needs a non-empty support set");
  HeadLearner learner{m.head.dims};
  return {m.head.dims, maml_adapt(learner, m.head.flat, support, alpha, inner_steps)};
}

inline HeadParams inner_adapt(const ModelState& m, const std::vector<LabeledSample>& support, double alpha,
                              int inner_steps) {
  const auto emb = embed_samples(m, support);
  return inner_adapt(m, std::span<const EmbeddedSample>(emb), alpha, inner_steps);
}

struct MetaStepStats {
  double support_loss = 0.0;  // mean over tasks, before adaptation
  double query_loss = 0.0;    // mean over tasks, after adaptation
};

inline std::vector<EmbeddedSample> gather(const std::vector<EmbeddedSample>& emb,
                                          const std::vector<std::size_t>& idx) {
  std::vector<EmbeddedSample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(emb.at(i));
  return out;
}

/// One outer update of the head. `emb` holds the frozen embeddings of the
/// dataset the tasks index into.
inline ModelState meta_step(const ModelState& m, const std::vector<EmbeddedSample>& emb,
                            const std::vector<MetaTask>& tasks, const MetaConfig& cfg,
                            MetaStepStats* stats = nullptr) {
  if (tasks.empty()) throw DomainError("meta step needs at least one task");
  HeadLearner learner{m.head.dims};
  Eigen::VectorXd total = Eigen::VectorXd::Zero(m.head.flat.size());
  MetaStepStats acc;
  for (const auto& task : tasks) {
    const auto support = gather(emb, task.support);
    const auto query = gather(emb, task.query);
    if (support.empty() || query.empty()) throw DomainError("meta task with an empty support or query set");
    const TaskGradient tg = maml_task_gradient(learner, m.head.flat, std::span<const EmbeddedSample>(support),
                                               std::span<const EmbeddedSample>(query), cfg.alpha,
                                               cfg.inner_steps, cfg.first_order);
    total += tg.grad;
    acc.support_loss += tg.support_loss;
    acc.query_loss += tg.query_loss;
  }
  if (!total.allFinite()) throw NumericError("non-finite meta gradient");
  if (stats != nullptr) {
    stats->support_loss = acc.support_loss / static_cast<double>(tasks.size());
    stats->query_loss = acc.query_loss / static_cast<double>(tasks.size());
  }
  ModelState out = m;
  out.head.flat -= cfg.beta * total;
  return out;
}

/// cfg.outer_steps rounds of task sampling and meta_step. When `log` is given
/// it receives a CSV with columns step,support_loss,query_loss.
inline ModelState meta_train(ModelState m, const std::vector<LabeledSample>& ds, const MetaConfig& cfg, Rng& rng,
                             std::ostream* log = nullptr, std::vector<MetaStepStats>* history = nullptr) {
  if (cfg.outer_steps == 0) return m;
  const auto emb = embed_samples(m, ds);
  if (log != nullptr) *log << "step,support_loss,query_loss\n";
  for (int step = 0; step < cfg.outer_steps; ++step) {
    const auto tasks = sample_meta_tasks(ds, cfg, rng);
    MetaStepStats st;
    m = meta_step(m, emb, tasks, cfg, &st);
    if (log != nullptr) {
      *log << step << ',' << format_double(st.support_loss) << ',' << format_double(st.query_loss) << '\n';
    }
    if (history != nullptr) history->push_back(st);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Online fine-tuning
// ---------------------------------------------------------------------------

/// `steps` full-batch head-only gradient steps over every measurement.
inline HeadParams fine_tune_head(HeadParams h, std::span<const EmbeddedSample> measurements, double alpha,
                                 int steps) {
  if (measurements.empty()) return h;
  Eigen::VectorXd g;
  for (int s = 0; s < steps; ++s) {
    head_loss_grad(h, measurements, g);
    h.flat -= alpha * g;
  }
  if (!h.flat.allFinite()) throw NumericError("fine-tuning diverged");
  return h;
}

inline ModelState fine_tune(const ModelState& m, const std::vector<LabeledSample>& measurements, double alpha,
                            int steps) {
  if (measurements.empty() || steps <= 0) return m;
  const auto emb = embed_samples(m, measurements);
  ModelState out = m;
  out.head = fine_tune_head(m.head, std::span<const EmbeddedSample>(emb), alpha, steps);
  return out;
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_META_LEARNING_HPP_
