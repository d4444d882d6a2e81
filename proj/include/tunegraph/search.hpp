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
 * \file search.hpp
 * \brief Candidate selection: simulated annealing over a score function, a
 *        squared-exponential GP surrogate, and batch UCB with hallucinated
 *        observations. Also the per-trial tuning record.
 */

#ifndef TUNEGRAPH_SEARCH_HPP_
#define TUNEGRAPH_SEARCH_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tunegraph/common.hpp"
#include "tunegraph/kernel_space.hpp"

namespace tunegraph {

using VisitedSet = std::unordered_set<std::uint64_t>;

/// Unvisited indices drawn uniformly without replacement; all of them (in
/// index order) when fewer than `n` remain.
inline std::vector<std::uint64_t> sample_unvisited(std::uint64_t space_size, std::size_t n, const VisitedSet& visited,
                                                   Rng& rng, const VisitedSet* also_exclude = nullptr) {
  auto excluded = [&](std::uint64_t i) {
    return visited.count(i) != 0 || (also_exclude != nullptr && also_exclude->count(i) != 0);
  };
  const std::uint64_t taken = visited.size() + (also_exclude != nullptr ? also_exclude->size() : 0);
  std::vector<std::uint64_t> out;
  if (space_size <= taken + n || (space_size <= (std::uint64_t{1} << 20) && 4 * (taken + n) >= space_size)) {
    std::vector<std::uint64_t> free;
    for (std::uint64_t i = 0; i < space_size; ++i) {
      if (!excluded(i)) free.push_back(i);
    }
    if (free.size() <= n) return free;
    for (std::size_t k = 0; k < n; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, free.size() - 1);
      std::swap(free[k], free[pick(rng)]);
    }
    free.resize(n);
    return free;
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, space_size - 1);
  VisitedSet chosen;
  while (out.size() < n) {
    const std::uint64_t i = pick(rng);
    if (excluded(i) || !chosen.insert(i).second) continue;
    out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulated annealing
// ---------------------------------------------------------------------------

struct SaSchedule {
  double initial_temp = 1.0;
  double cooling = 0.95;
  int steps_per_round = 128;
  int parallel_chains = 16;

  void validate() const {
    if (!(initial_temp > 0)) throw ConfigError("SA initial_temp must be positive");
    if (!(cooling > 0 && cooling < 1)) throw ConfigError("SA cooling must be in (0,1)");
    if (steps_per_round < 0 || parallel_chains < 1) throw ConfigError("SA chain counts must be positive");
  }
};

/// Index-valued score function; larger is better.
using ScoreFn = std::function<double(std::uint64_t)>;

/// Changes one knob: a +-1 step on its value index (staying put at the
/// boundary) or a uniform resample, each with probability 1/2. The move is
/// symmetric, so with acceptance 1 the chain's stationary law is uniform.
inline std::uint64_t sa_neighbor(const KnobSpace& space, std::uint64_t index, Rng& rng) {
  KnobConfig c = index_config(space, index);
  std::uniform_int_distribution<std::size_t> knob(0, space.num_knobs() - 1);
  const std::size_t k = knob(rng);
  const std::uint32_t card = static_cast<std::uint32_t>(space.knobs()[k].values.size());
  std::uniform_int_distribution<int> coin(0, 1);
  if (coin(rng) == 0) {
    const int dir = coin(rng) == 0 ? -1 : 1;
    const std::int64_t next = static_cast<std::int64_t>(c.choices[k]) + dir;
    if (next >= 0 && next < static_cast<std::int64_t>(card)) c.choices[k] = static_cast<std::uint32_t>(next);
  } else {
    std::uniform_int_distribution<std::uint32_t> value(0, card - 1);
    c.choices[k] = value(rng);
  }
  return config_index(space, c);
}

/// Annealing chains over config indices using `score` as (negative) energy.
/// Returns up to `batch` unvisited indices ranked by score (ties by lower
/// index), padded with uniform unvisited draws when the chains saw too few.
/// `trajectory`, if given, receives every chain state after every step.
inline std::vector<std::uint64_t> sa_propose(const ScoreFn& score, const KnobSpace& space, const SaSchedule& sched,
                                             std::size_t batch, const VisitedSet& visited, Rng& rng,
                                             std::vector<std::uint64_t>* trajectory = nullptr) {
  if (batch == 0) return {};
  const std::uint64_t size = space.size();
  if (visited.size() >= size) return {};
  if (size - visited.size() <= batch) return sample_unvisited(size, batch, visited, rng);

  std::unordered_map<std::uint64_t, double> seen;
  auto eval = [&](std::uint64_t i) {
    auto it = seen.find(i);
    if (it != seen.end()) return it->second;
    const double v = score(i);
    seen.emplace(i, v);
    return v;
  };
  std::uniform_int_distribution<std::uint64_t> start(0, size - 1);
  std::vector<std::uint64_t> cur(static_cast<std::size_t>(sched.parallel_chains));
  std::vector<double> cur_score(cur.size());
  for (std::size_t c = 0; c < cur.size(); ++c) {
    cur[c] = start(rng);
    cur_score[c] = eval(cur[c]);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double temp = sched.initial_temp;
  for (int step = 0; step < sched.steps_per_round; ++step) {
    for (std::size_t c = 0; c < cur.size(); ++c) {
      const std::uint64_t next = sa_neighbor(space, cur[c], rng);
      const double s = eval(next);
      const double delta = s - cur_score[c];
      const double u = unit(rng);
      if (delta >= 0 || u < std::exp(delta / temp)) {
        cur[c] = next;
        cur_score[c] = s;
      }
      if (trajectory != nullptr) trajectory->push_back(cur[c]);
    }
    temp *= sched.cooling;
  }

  std::vector<std::pair<double, std::uint64_t>> ranked;
  for (const auto& [i, s] : seen) {
    if (visited.count(i) == 0) ranked.emplace_back(s, i);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::uint64_t> out;
  VisitedSet chosen;
  for (const auto& r : ranked) {
    if (out.size() == batch) break;
    out.push_back(r.second);
    chosen.insert(r.second);
  }
  if (out.size() < batch) {
    for (auto i : sample_unvisited(size, batch - out.size(), visited, rng, &chosen)) out.push_back(i);
  }
  return out;
}

/// Single-chain annealing where every new config costs one call of
/// `objective` (a real measurement). Revisits are free. The temperature
/// cools once per step; a chain that proposes only seen configs for
/// `stall_limit` steps restarts at an unseen one. Returns the evaluated
/// indices in evaluation order, at most `budget` of them.
inline std::vector<std::uint64_t> sa_search(const ScoreFn& objective, const KnobSpace& space, const SaSchedule& sched,
                                            std::size_t budget, Rng& rng, int stall_limit = 64) {
  sched.validate();
  const std::uint64_t size = space.size();
  budget = static_cast<std::size_t>(std::min<std::uint64_t>(budget, size));
  std::vector<std::uint64_t> order;
  if (budget == 0) return order;
  std::unordered_map<std::uint64_t, double> seen;
  auto eval = [&](std::uint64_t i) {
    auto it = seen.find(i);
    if (it != seen.end()) return it->second;
    const double v = objective(i);
    seen.emplace(i, v);
    order.push_back(i);
    return v;
  };
  VisitedSet none;
  std::uint64_t cur = sample_unvisited(size, 1, none, rng).front();
  double cur_score = eval(cur);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double temp = sched.initial_temp;
  int stalled = 0;
  while (order.size() < budget) {
    if (stalled >= stall_limit) {
      VisitedSet done(order.begin(), order.end());
      cur = sample_unvisited(size, 1, done, rng).front();
      cur_score = eval(cur);
      stalled = 0;
      continue;
    }
    const std::uint64_t next = sa_neighbor(space, cur, rng);
    const bool fresh = seen.count(next) == 0;
    const double s = eval(next);
    stalled = fresh ? 0 : stalled + 1;
    const double delta = s - cur_score;
    const double u = unit(rng);
    if (delta >= 0 || u < std::exp(delta / temp)) {
      cur = next;
      cur_score = s;
    }
    temp *= sched.cooling;
  }
  return order;
}

// ---------------------------------------------------------------------------
// Gaussian process surrogate
// ---------------------------------------------------------------------------

/// Knob value-index ranks mapped into [0,1): choice / cardinality.
inline Eigen::VectorXd knob_coordinates(const KnobSpace& space, const KnobConfig& c) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(space.num_knobs()));
  for (std::size_t k = 0; k < space.num_knobs(); ++k) {
    x[static_cast<Eigen::Index>(k)] =
        static_cast<double>(c.choices[k]) / static_cast<double>(space.knobs()[k].values.size());
  }
  return x;
}

inline Eigen::VectorXd knob_coordinates(const KnobSpace& space, std::uint64_t index) {
  return knob_coordinates(space, index_config(space, index));
}

struct GpSurrogate {
  std::vector<Eigen::VectorXd> observed_x;
  std::vector<double> observed_y;
  std::vector<double> lengthscales;  // per dimension; the grid search keeps them equal
  std::vector<double> lengthscale_grid{0.1, 0.3, 1.0, 3.0};
  double signal_variance = 1.0;
  double noise_variance = 1e-4;
  double max_noise_variance = 1e-1;

  // Filled by gp_fit.
  double effective_noise = 0.0;
  double log_marginal_likelihood = 0.0;
  Eigen::MatrixXd chol_l;  // lower Cholesky factor of K + noise I
  Eigen::VectorXd alpha;   // (K + noise I)^-1 y
  bool fitted = false;
};

inline double se_kernel(const GpSurrogate& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double r2 = 0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double l = s.lengthscales.empty() ? 1.0 : s.lengthscales[static_cast<std::size_t>(d)];
    const double t = (a[d] - b[d]) / l;
    r2 += t * t;
  }
  return s.signal_variance * std::exp(-0.5 * r2);
}

namespace detail {

/// Cholesky of K + noise I with x10 jitter escalation. Returns false when the
/// matrix stays indefinite up to the noise cap.
inline bool factorize(const GpSurrogate& s, Eigen::MatrixXd& l, double& noise) {
  const auto n = static_cast<Eigen::Index>(s.observed_x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = se_kernel(s, s.observed_x[static_cast<std::size_t>(i)],
                                    s.observed_x[static_cast<std::size_t>(j)]);
    }
  }
  for (noise = s.noise_variance; noise <= s.max_noise_variance * (1 + 1e-12); noise *= 10) {
    Eigen::MatrixXd kn = k;
    kn.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(kn);
    if (llt.info() == Eigen::Success) {
      l = llt.matrixL();
      if (l.diagonal().minCoeff() > 1e-12 * std::sqrt(s.signal_variance)) return true;
    }
    if (noise <= 0) noise = 1e-12;
  }
  return false;
}

inline void set_lengthscale(GpSurrogate& s, std::size_t dims, double l) { s.lengthscales.assign(dims, l); }

}  // namespace detail

/// Refreshes the factorization. With `optimize` the shared lengthscale is
/// picked from the grid by marginal likelihood (first best wins).
inline GpSurrogate gp_fit(GpSurrogate s, bool optimize = true) {
  if (s.observed_x.size() != s.observed_y.size()) throw DomainError("GP observation count mismatch");
  if (!(s.signal_variance > 0) || !(s.noise_variance >= 0)) throw DomainError("GP variances must be positive");
  s.fitted = true;
  const std::size_t n = s.observed_x.size();
  if (n == 0) {
    s.chol_l.resize(0, 0);
    s.alpha.resize(0);
    return s;
  }
  const std::size_t dims = static_cast<std::size_t>(s.observed_x.front().size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = s.observed_y[i];

  std::vector<double> candidates;
  if (optimize) {
    candidates = s.lengthscale_grid;
  } else {
    if (s.lengthscales.empty()) detail::set_lengthscale(s, dims, s.lengthscale_grid.front());
    candidates = {s.lengthscales.front()};
  }
  bool any = false;
  double best_lml = -std::numeric_limits<double>::infinity();
  GpSurrogate best = s;
  for (double l : candidates) {
    if (!(l > 0)) throw DomainError("GP lengthscales must be positive");
    GpSurrogate trial = s;
    if (optimize) detail::set_lengthscale(trial, dims, l);
    Eigen::MatrixXd chol;
    double noise = 0;
    if (!detail::factorize(trial, chol, noise)) continue;
    const Eigen::VectorXd a = chol.transpose().triangularView<Eigen::Upper>().solve(
        chol.triangularView<Eigen::Lower>().solve(y));
    const double lml = -0.5 * y.dot(a) - chol.diagonal().array().log().sum() -
                       0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi);
    if (!any || lml > best_lml) {
      any = true;
      best_lml = lml;
      best = std::move(trial);
      best.chol_l = std::move(chol);
      best.alpha = a;
      best.effective_noise = noise;
      best.log_marginal_likelihood = lml;
    }
  }
  if (!any) throw NumericError("GP kernel matrix is not positive definite after jitter escalation");
  return best;
}

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact posterior of the latent function at x.
inline GpPrediction gp_predict(const GpSurrogate& s, const Eigen::VectorXd& x) {
  if (s.observed_x.empty()) return {0.0, s.signal_variance};
  if (!s.fitted || s.chol_l.rows() != static_cast<Eigen::Index>(s.observed_x.size())) {
    throw DomainError("gp_predict on an unfitted surrogate");
  }
  const auto n = static_cast<Eigen::Index>(s.observed_x.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = se_kernel(s, s.observed_x[static_cast<std::size_t>(i)], x);
  const Eigen::VectorXd v = s.chol_l.triangularView<Eigen::Lower>().solve(k);
  return {k.dot(s.alpha), std::max(0.0, se_kernel(s, x, x) - v.squaredNorm())};
}

/// Sequential batch UCB over a fixed pool. After each pick the pick's
/// posterior mean is added as a hallucinated observation: means stay put and
/// the joint covariance gets a rank-one downdate. `prior_mean` (optional) is
/// added to the GP mean, i.e. the GP models residuals around it. Returns pool
/// positions in selection order; ties go to the lower position.
inline std::vector<std::size_t> ucb_select(const GpSurrogate& s, const std::vector<Eigen::VectorXd>& pool,
                                           std::size_t batch, double beta_ucb,
                                           const std::vector<double>* prior_mean = nullptr) {
  const auto p = static_cast<Eigen::Index>(pool.size());
  if (p == 0) throw DomainError("empty candidate pool");
  if (prior_mean != nullptr && prior_mean->size() != pool.size()) throw DomainError("prior mean size mismatch");
  Eigen::MatrixXd cov(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) cov(i, j) = cov(j, i) = se_kernel(s, pool[i], pool[j]);
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  double noise = s.noise_variance;
  if (!s.observed_x.empty()) {
    if (!s.fitted) throw DomainError("ucb_select on an unfitted surrogate");
    const auto n = static_cast<Eigen::Index>(s.observed_x.size());
    Eigen::MatrixXd kxp(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) kxp(i, j) = se_kernel(s, s.observed_x[static_cast<std::size_t>(i)], pool[j]);
    }
    mean = kxp.transpose() * s.alpha;
    const Eigen::MatrixXd v = s.chol_l.triangularView<Eigen::Lower>().solve(kxp);
    cov.noalias() -= v.transpose() * v;
    noise = s.effective_noise;
  }
  if (prior_mean != nullptr) {
    for (Eigen::Index j = 0; j < p; ++j) mean[j] += (*prior_mean)[static_cast<std::size_t>(j)];
  }
  const double root_beta = std::sqrt(beta_ucb);
  std::vector<char> taken(static_cast<std::size_t>(p), 0);
  std::vector<std::size_t> out;
  while (out.size() < std::min<std::size_t>(batch, pool.size())) {
    Eigen::Index best = -1;
    double best_ucb = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const double ucb = mean[j] + root_beta * std::sqrt(std::max(0.0, cov(j, j)));
      if (best < 0 || ucb > best_ucb) {
        best = j;
        best_ucb = ucb;
      }
    }
    taken[static_cast<std::size_t>(best)] = 1;
    out.push_back(static_cast<std::size_t>(best));
    const Eigen::VectorXd col = cov.col(best);
    cov.noalias() -= col * col.transpose() / (col[best] + noise);
  }
  return out;
}

/// Draws `candidate_pool` unvisited configs and picks `batch` of them by
/// sequential UCB with hallucinated observations.
inline std::vector<std::uint64_t> bo_propose_batch(const GpSurrogate& s, const KnobSpace& space, std::size_t batch,
                                                   double beta_ucb, std::size_t candidate_pool,
                                                   const VisitedSet& visited, Rng& rng) {
  if (batch == 0) throw DomainError("batch must be >= 1");
  const auto pool_idx = sample_unvisited(space.size(), candidate_pool, visited, rng);
  if (pool_idx.empty()) throw DomainError("empty candidate pool");
  std::vector<Eigen::VectorXd> pool;
  pool.reserve(pool_idx.size());
  for (auto i : pool_idx) pool.push_back(knob_coordinates(space, i));
  std::vector<std::uint64_t> out;
  for (auto j : ucb_select(s, pool, batch, beta_ucb)) out.push_back(pool_idx[j]);
  return out;
}

// ---------------------------------------------------------------------------
// Tuning record
// ---------------------------------------------------------------------------

/// A kernel together with the knob space being searched (normally
/// build_knob_space(spec), smaller for toy problems).
struct TuneProblem {
  KernelSpec spec;
  KnobSpace space;

  static TuneProblem for_kernel(const KernelSpec& spec) { return {spec, build_knob_space(spec)}; }
};

struct TrialRow {
  std::size_t iteration = 0;  // 1-based measurement ordinal
  std::size_t round = 0;      // 0-based proposal round
  std::uint64_t config_index = 0;
  double measured_gflops = 0.0;  // 0 when infeasible
  bool feasible = false;
  double predicted_gflops = std::numeric_limits<double>::quiet_NaN();
  double best_gflops = 0.0;
};

struct TuningRecord {
  KernelSpec spec;
  std::string arm;
  std::string profile;
  std::uint64_t seed = 0;
  std::vector<TrialRow> trials;

  double best() const { return trials.empty() ? 0.0 : trials.back().best_gflops; }

  void append(std::size_t round, std::uint64_t index, double measured, bool feasible, double predicted) {
    TrialRow r;
    r.iteration = trials.size() + 1;
    r.round = round;
    r.config_index = index;
    r.measured_gflops = measured;
    r.feasible = feasible;
    r.predicted_gflops = predicted;
    r.best_gflops = std::max(best(), measured);
    trials.push_back(r);
  }
};

inline void write_record_csv(std::ostream& os, const TuningRecord& r) {
  os << "iteration,config_index,measured_gflops,predicted_gflops,best_gflops\n";
  for (const auto& t : r.trials) {
    os << t.iteration << ',' << t.config_index << ',' << format_double(t.measured_gflops) << ','
       << format_double(t.predicted_gflops) << ',' << format_double(t.best_gflops) << '\n';
  }
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_SEARCH_HPP_
