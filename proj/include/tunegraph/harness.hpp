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
 * \file harness.hpp
 * \brief Dataset generation, run metrics, and resumable experiment plans.
 */

#ifndef TUNEGRAPH_HARNESS_HPP_
#define TUNEGRAPH_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunegraph/baselines.hpp"
#include "tunegraph/graph_encoding.hpp"
#include "tunegraph/meta_learning.hpp"
#include "tunegraph/perf_oracle.hpp"
#include "tunegraph/search.hpp"
#include "tunegraph/tune.hpp"

namespace tunegraph {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct IntRange {
  std::int64_t lo = 1;
  std::int64_t hi = 1;
};

struct DatasetParams {
  int num_kernels = 47;
  int configs_per_kernel = 200;
  std::string profile = "platform-A";
  std::vector<OpType> op_types{kAllOpTypes.begin(), kAllOpTypes.end()};
  IntRange input_1d{150, 600};
  IntRange in_channels_1d{32, 128};
  IntRange out_channels_1d{32, 512};
  IntRange input_2d{7, 224};
  IntRange in_channels_2d{3, 128};
  IntRange out_channels_2d{16, 128};
  std::vector<std::int64_t> kernel_sizes{1, 3, 5};
  std::int64_t stride = 3;
  std::int64_t padding = 1;

  void validate() const {
    if (num_kernels < 1 || configs_per_kernel < 1) throw DomainError("dataset needs kernels and configs");
    if (op_types.empty() || kernel_sizes.empty()) throw DomainError("dataset needs op types and kernel sizes");
    for (const auto* r : {&input_1d, &in_channels_1d, &out_channels_1d, &input_2d, &in_channels_2d, &out_channels_2d}) {
      if (r->lo < 1 || r->hi < r->lo) throw DomainError("invalid dataset range");
    }
    for (auto k : kernel_sizes) {
      if (k < 1) throw DomainError("kernel sizes must be positive");
    }
    if (stride < 1 || padding < 0) throw DomainError("invalid stride or padding");
  }
};

inline void to_json(nlohmann::json& j, const IntRange& r) { j = nlohmann::json::array({r.lo, r.hi}); }
inline void from_json(const nlohmann::json& j, IntRange& r) {
  r.lo = j.at(0).get<std::int64_t>();
  r.hi = j.at(1).get<std::int64_t>();
}

inline void to_json(nlohmann::json& j, const DatasetParams& p) {
  std::vector<std::string> ops;
  for (auto op : p.op_types) ops.emplace_back(to_string(op));
  j = nlohmann::json{{"num_kernels", p.num_kernels},
                     {"configs_per_kernel", p.configs_per_kernel},
                     {"profile", p.profile},
                     {"op_types", ops},
                     {"input_1d", p.input_1d},
                     {"in_channels_1d", p.in_channels_1d},
                     {"out_channels_1d", p.out_channels_1d},
                     {"input_2d", p.input_2d},
                     {"in_channels_2d", p.in_channels_2d},
                     {"out_channels_2d", p.out_channels_2d},
                     {"kernel_sizes", p.kernel_sizes},
                     {"stride", p.stride},
                     {"padding", p.padding}};
}

inline void from_json(const nlohmann::json& j, DatasetParams& p) {
  p = DatasetParams{};
  p.num_kernels = j.value("num_kernels", p.num_kernels);
  p.configs_per_kernel = j.value("configs_per_kernel", p.configs_per_kernel);
  p.profile = j.value("profile", p.profile);
  if (j.contains("op_types")) {
    p.op_types.clear();
    for (const auto& s : j.at("op_types")) p.op_types.push_back(parse_op_type(s.get<std::string>()));
  }
  p.input_1d = j.value("input_1d", p.input_1d);
  p.in_channels_1d = j.value("in_channels_1d", p.in_channels_1d);
  p.out_channels_1d = j.value("out_channels_1d", p.out_channels_1d);
  p.input_2d = j.value("input_2d", p.input_2d);
  p.in_channels_2d = j.value("in_channels_2d", p.in_channels_2d);
  p.out_channels_2d = j.value("out_channels_2d", p.out_channels_2d);
  p.kernel_sizes = j.value("kernel_sizes", p.kernel_sizes);
  p.stride = j.value("stride", p.stride);
  p.padding = j.value("padding", p.padding);
}

/// One measured (kernel, config) pair of the training corpus.
struct DatasetRow {
  KernelSpec spec;
  std::uint64_t config_index = 0;
  Measurement measurement;
};

struct Dataset {
  std::vector<KernelSpec> kernels;
  std::vector<DatasetRow> rows;
  std::vector<LabeledSample> raw;        // graphs straight from the loop nest
  std::vector<LabeledSample> augmented;  // embedded into the full super-graph template

  /// Content hash over kernels, configs and labels.
  std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& r : rows) {
      h = fnv1a(r.spec.signature(), h);
      h = hash_combine(h, r.config_index);
      h = fnv1a(hex_double(r.measurement.gflops), h);
    }
    return h;
  }
};

/// Kernel spec with dimensions uniform in the ranges for its op type.
inline KernelSpec random_kernel(OpType op, const DatasetParams& p, Rng& rng) {
  auto draw = [&](IntRange r) { return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(rng); };
  std::uniform_int_distribution<std::size_t> ks(0, p.kernel_sizes.size() - 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    KernelSpec s;
    s.op_type = op;
    s.stride = p.stride;
    s.padding = p.padding;
    if (is_one_dimensional(op)) {
      s.input_size = draw(p.input_1d);
      s.in_channels = draw(p.in_channels_1d);
      s.out_channels = draw(p.out_channels_1d);
    } else {
      s.input_size = draw(p.input_2d);
      s.in_channels = draw(p.in_channels_2d);
      s.out_channels = draw(p.out_channels_2d);
    }
    // channels are not reduced in depthwise kernels: one filter per channel
    if (op == OpType::kDepthwise) s.in_channels = s.out_channels;
    s.kernel_size = p.kernel_sizes[ks(rng)];
    try {
      s.validate();
      return s;
    } catch (const DomainError&) {
    }
  }
  throw DomainError("could not draw a valid kernel for " + std::string(to_string(op)));
}

/// Kernels cycle through the op types; signatures are unique and avoid `exclude`.
inline std::vector<KernelSpec> random_kernels(const DatasetParams& p, int count, Rng& rng,
                                              const std::set<std::string>& exclude = {}) {
  std::vector<KernelSpec> out;
  std::set<std::string> seen = exclude;
  for (int i = 0; i < count; ++i) {
    const OpType op = p.op_types[static_cast<std::size_t>(i) % p.op_types.size()];
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DomainError("kernel ranges too narrow for distinct signatures");
      KernelSpec s = random_kernel(op, p, rng);
      if (seen.insert(s.signature()).second) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

inline LabeledSample make_sample(const KernelSpec& spec, const KnobSpace& space, std::uint64_t index, double gflops,
                                 const SuperGraphTemplate* tmpl) {
  CodeGraph g = ast_to_graph(lower_to_loop_nest(spec, space, index_config(space, index)));
  if (tmpl != nullptr) g = augment_to_super(g, *tmpl, spec.op_type);
  const double label = std::max(gflops, kFloorGflops);
  g.label = label;
  return {std::move(g), spec.signature(), label};
}

inline Dataset gen_dataset(const DatasetParams& p, Rng& rng) {
  p.validate();
  const PlatformProfile profile = builtin_profile(p.profile);
  const SuperGraphTemplate tmpl = build_full_template();
  Dataset ds;
  ds.kernels = random_kernels(p, p.num_kernels, rng);
  for (const auto& spec : ds.kernels) {
    const KnobSpace space = build_knob_space(spec);
    for (auto i : sample_indices(space.size(), static_cast<std::size_t>(p.configs_per_kernel), rng)) {
      const Measurement m = measure(spec, space, index_config(space, i), profile);
      ds.rows.push_back({spec, i, m});
      ds.raw.push_back(make_sample(spec, space, i, m.gflops, nullptr));
      ds.augmented.push_back(make_sample(spec, space, i, m.gflops, &tmpl));
    }
  }
  return ds;
}

/// Dataset rows re-measured on `profile` as boosted-tree samples.
inline std::vector<GbtSample> xfer_prior_samples(const Dataset& ds, const PlatformProfile& profile,
                                                 std::size_t max_samples, Rng& rng) {
  std::vector<std::size_t> pick(ds.rows.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (pick.size() > max_samples) {
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(max_samples);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<GbtSample> out;
  for (auto i : pick) {
    const auto& r = ds.rows[i];
    const KnobSpace space = build_knob_space(r.spec);
    const KnobConfig c = index_config(space, r.config_index);
    const Measurement m = measure(r.spec, space, c, profile);
    out.push_back({gbt_features(r.spec, space, c), std::log2(std::max(m.gflops, kFloorGflops)), 1.0});
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "samples.csv");
    f << "kernel,config_index,gflops,feasible\n";
    for (const auto& r : ds.rows) {
      f << r.spec.signature() << ',' << r.config_index << ',' << format_double(r.measurement.gflops) << ','
        << (r.measurement.feasible ? 1 : 0) << '\n';
    }
  }
  {
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : ds.kernels) kernels.push_back(k);
    std::ofstream f(dir / "kernels.json");
    f << kernels.dump(2) << '\n';
  }
  for (const auto* variant : {&ds.raw, &ds.augmented}) {
    std::ofstream f(dir / (variant == &ds.raw ? "graphs_raw.txt" : "graphs_augmented.txt"));
    for (const auto& s : *variant) write_graph(f, s.graph);
  }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsEntry {
  std::string arm;
  std::string kernel;
  std::uint64_t seed = 0;
  double final_best = 0.0;
  std::optional<double> normalized_to_xgb;
  std::optional<double> mse;
  std::optional<double> mse_d;
  std::optional<std::size_t> iterations_to_xgb_best;
};

/// Predictions and measurements are divided by the run's best measurement.
/// MSE(D) keeps the ceil(n/4) rows with the highest measured GFLOPS (earlier
/// rows win ties). Relative fields need the paired xgb run.
inline MetricsEntry compute_metrics(const TuningRecord& r, const TuningRecord* paired_xgb = nullptr) {
  if (r.trials.empty()) throw DomainError("compute_metrics on an empty record");
  MetricsEntry e;
  e.arm = r.arm;
  e.kernel = r.spec.signature();
  e.seed = r.seed;
  e.final_best = r.best();

  std::vector<const TrialRow*> scored;
  for (const auto& t : r.trials) {
    if (std::isfinite(t.predicted_gflops)) scored.push_back(&t);
  }
  const double scale = e.final_best > 0 ? e.final_best : 1.0;
  auto sq_err = [&](const TrialRow* t) {
    const double d = (t->predicted_gflops - t->measured_gflops) / scale;
    return d * d;
  };
  if (!scored.empty()) {
    double sum = 0;
    for (const auto* t : scored) sum += sq_err(t);
    e.mse = sum / static_cast<double>(scored.size());
    std::vector<const TrialRow*> top = scored;
    std::stable_sort(top.begin(), top.end(),
                     [](const TrialRow* a, const TrialRow* b) { return a->measured_gflops > b->measured_gflops; });
    const std::size_t k = std::max<std::size_t>(1, (top.size() + 3) / 4);
    double sd = 0;
    for (std::size_t i = 0; i < k; ++i) sd += sq_err(top[i]);
    e.mse_d = sd / static_cast<double>(k);
  }
  if (paired_xgb != nullptr && !paired_xgb->trials.empty()) {
    const double target = paired_xgb->best();
    if (target > 0) e.normalized_to_xgb = e.final_best / target;
    for (const auto& t : r.trials) {
      if (t.best_gflops >= target) {
        e.iterations_to_xgb_best = t.iteration;
        break;
      }
    }
  }
  return e;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string optional_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsEntry>& entries) {
  os << "arm,kernel,seed,final_best_gflops,normalized_to_xgb,mse,mse_d,iterations_to_xgb_best\n";
  for (const auto& e : entries) {
    os << e.arm << ',' << e.kernel << ',' << e.seed << ',' << format_double(e.final_best) << ','
       << optional_str(e.normalized_to_xgb) << ',' << optional_str(e.mse) << ',' << optional_str(e.mse_d) << ','
       << (e.iterations_to_xgb_best ? std::to_string(*e.iterations_to_xgb_best) : "") << '\n';
  }
}

/// Mean and median across seeds per (arm, kernel), plus an all-kernel row
/// per arm with kernel "*".
inline void write_metrics_summary(std::ostream& os, const std::vector<MetricsEntry>& entries) {
  using Getter = std::optional<double> (*)(const MetricsEntry&);
  static const std::vector<std::pair<std::string, Getter>> fields = {
      {"final_best_gflops", [](const MetricsEntry& e) -> std::optional<double> { return e.final_best; }},
      {"normalized_to_xgb", [](const MetricsEntry& e) { return e.normalized_to_xgb; }},
      {"mse", [](const MetricsEntry& e) { return e.mse; }},
      {"mse_d", [](const MetricsEntry& e) { return e.mse_d; }},
      {"iterations_to_xgb_best",
       [](const MetricsEntry& e) -> std::optional<double> {
         if (!e.iterations_to_xgb_best) return std::nullopt;
         return static_cast<double>(*e.iterations_to_xgb_best);
       }},
  };
  std::vector<std::pair<std::string, std::string>> groups;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    for (const auto& g : {std::make_pair(e.arm, e.kernel), std::make_pair(e.arm, std::string("*"))}) {
      if (seen.insert(g).second) groups.push_back(g);
    }
  }
  os << "arm,kernel,metric,count,mean,median\n";
  for (const auto& [arm, kernel] : groups) {
    for (const auto& [name, get] : fields) {
      std::vector<double> v;
      for (const auto& e : entries) {
        if (e.arm != arm || (kernel != "*" && e.kernel != kernel)) continue;
        if (auto x = get(e)) v.push_back(*x);
      }
      if (v.empty()) continue;
      double sum = 0;
      for (double x : v) sum += x;
      os << arm << ',' << kernel << ',' << name << ',' << v.size() << ',' << format_double(sum / static_cast<double>(v.size()))
         << ',' << format_double(median(v)) << '\n';
    }
  }
}

/// Parses the CSV written by write_record_csv. Feasibility is inferred from a
/// positive measurement; rounds are not stored and come back as 0.
inline TuningRecord read_record_csv(std::istream& is) {
  TuningRecord r;
  std::string line;
  if (!std::getline(is, line) || line.rfind("iteration,", 0) != 0) throw ConfigError("not a tuning record CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& s : f) {
      if (!std::getline(ss, s, ',')) throw ConfigError("short tuning record row: " + line);
    }
    TrialRow t;
    t.iteration = std::stoull(f[0]);
    t.config_index = std::stoull(f[1]);
    t.measured_gflops = std::strtod(f[2].c_str(), nullptr);
    t.predicted_gflops = std::strtod(f[3].c_str(), nullptr);
    t.best_gflops = std::strtod(f[4].c_str(), nullptr);
    t.feasible = t.measured_gflops > 0;
    r.trials.push_back(t);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Experiment plans
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  std::vector<Arm> arms{Arm::kXgb, Arm::kMetaBo, Arm::kMetaBoT};
  std::vector<KernelSpec> kernels;  // held-out tuning targets
  std::string profile = "platform-A";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  TuneConfig tune;
  std::size_t xfer_prior_samples = 2000;

  void validate(const std::set<std::string>& training_classes = {}) const {
    if (arms.empty()) throw ConfigError("plan has no arms");
    if (kernels.empty()) throw ConfigError("plan has no kernels");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size() || seeds.empty()) {
      throw ConfigError("plan seeds must be distinct and non-empty");
    }
    for (const auto& k : kernels) {
      k.validate();
      if (training_classes.count(k.signature()) != 0) {
        throw ConfigError("held-out kernel " + k.signature() + " appears in the training dataset");
      }
    }
    tune.validate();
  }
};

inline void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  std::vector<std::string> arms;
  for (auto a : p.arms) arms.emplace_back(to_string(a));
  j = nlohmann::json{{"arms", arms},   {"kernels", p.kernels}, {"profile", p.profile},
                     {"seeds", p.seeds}, {"tune", p.tune},       {"xfer_prior_samples", p.xfer_prior_samples}};
}

inline void from_json(const nlohmann::json& j, ExperimentPlan& p) {
  p = ExperimentPlan{};
  if (j.contains("arms")) {
    p.arms.clear();
    for (const auto& a : j.at("arms")) p.arms.push_back(parse_arm(a.get<std::string>()));
  }
  if (j.contains("kernels")) p.kernels = j.at("kernels").get<std::vector<KernelSpec>>();
  p.profile = j.value("profile", p.profile);
  p.seeds = j.value("seeds", p.seeds);
  if (j.contains("tune")) p.tune = j.at("tune").get<TuneConfig>();
  p.xfer_prior_samples = j.value("xfer_prior_samples", p.xfer_prior_samples);
}

/// Held-out kernels drawn like training kernels from a separate stream,
/// disjoint from `training` by signature.
inline std::vector<KernelSpec> heldout_kernels(const DatasetParams& p, const std::vector<OpType>& ops, int count,
                                               std::uint64_t seed, const std::vector<KernelSpec>& training) {
  std::set<std::string> exclude;
  for (const auto& k : training) exclude.insert(k.signature());
  DatasetParams q = p;
  q.op_types = ops;
  Rng rng(hash_combine(seed, 0x68656c646f7574ULL));
  return random_kernels(q, count, rng, exclude);
}

/// Everything an arm may read; assembled once per process.
struct ExperimentResources {
  std::optional<ModelState> model_raw;
  std::optional<ModelState> model_augmented;
  std::optional<SuperGraphTemplate> super_template;
  std::optional<std::vector<GbtSample>> xfer_prior;
  std::set<std::string> training_classes;
  std::uint64_t model_hash = 0;  // identifies the checkpoints in cell hashes

  ArmResources for_arm(Arm a) const {
    ArmResources r;
    if (uses_cost_model(a)) {
      const auto& m = uses_augmented_graphs(a) ? model_augmented : model_raw;
      if (!m) throw ConfigError("arm " + std::string(to_string(a)) + " needs a meta-trained checkpoint");
      r.model = &*m;
    }
    if (uses_augmented_graphs(a)) {
      if (!super_template) throw ConfigError("arm " + std::string(to_string(a)) + " needs a super-graph template");
      r.super_template = &*super_template;
    }
    if (a == Arm::kXgbXfer) {
      if (!xfer_prior) throw ConfigError("arm xgb-Xfer needs prior samples");
      r.xfer_prior = &*xfer_prior;
    }
    return r;
  }
};

inline std::string cell_name(Arm arm, const KernelSpec& k, std::uint64_t seed) {
  return std::string(to_string(arm)) + "__" + k.signature() + "__s" + std::to_string(seed);
}

/// Seeds a cell's generator from (seed, kernel) so cells are independent.
inline Rng cell_rng(const KernelSpec& k, std::uint64_t seed) { return Rng(hash_combine(seed, fnv1a(k.signature()))); }

inline std::uint64_t cell_hash(const ExperimentPlan& plan, const ExperimentResources& res, Arm arm,
                               const KernelSpec& k, std::uint64_t seed) {
  std::uint64_t h = fnv1a(cell_name(arm, k, seed));
  h = fnv1a(plan.profile, h);
  h = fnv1a(nlohmann::json(plan.tune).dump(), h);
  if (uses_cost_model(arm)) h = hash_combine(h, res.model_hash);
  if (arm == Arm::kXgbXfer) h = hash_combine(h, plan.xfer_prior_samples);
  return h;
}

inline TuningRecord run_cell(const ExperimentPlan& plan, const ExperimentResources& res, Arm arm,
                             const KernelSpec& k, std::uint64_t seed) {
  Rng rng = cell_rng(k, seed);
  TuningRecord r = tune(TuneProblem::for_kernel(k), arm, builtin_profile(plan.profile), plan.tune, rng,
                        res.for_arm(arm));
  r.seed = seed;
  return r;
}

struct ExperimentResult {
  std::map<std::string, TuningRecord> records;  // by cell name
  std::vector<MetricsEntry> metrics;
  std::size_t cells_run = 0;
  std::size_t cells_skipped = 0;
};

/// Metrics for every record, pairing each with the xgb run of the same
/// (kernel, seed) when present.
inline std::vector<MetricsEntry> metrics_for(const ExperimentPlan& plan, const std::map<std::string, TuningRecord>& recs) {
  std::vector<MetricsEntry> out;
  for (Arm arm : plan.arms) {
    for (const auto& k : plan.kernels) {
      for (auto seed : plan.seeds) {
        auto it = recs.find(cell_name(arm, k, seed));
        if (it == recs.end()) continue;
        auto xgb = recs.find(cell_name(Arm::kXgb, k, seed));
        out.push_back(compute_metrics(it->second, xgb == recs.end() ? nullptr : &xgb->second));
      }
    }
  }
  return out;
}

/// Best-so-far curves per (arm, kernel): mean, min and max over seeds.
inline void write_plot_data(std::ostream& os, const ExperimentPlan& plan, const std::map<std::string, TuningRecord>& recs) {
  os << "arm,kernel,iteration,mean_best_gflops,min_best_gflops,max_best_gflops\n";
  for (Arm arm : plan.arms) {
    for (const auto& k : plan.kernels) {
      std::vector<const TuningRecord*> runs;
      for (auto seed : plan.seeds) {
        auto it = recs.find(cell_name(arm, k, seed));
        if (it != recs.end()) runs.push_back(&it->second);
      }
      if (runs.empty()) continue;
      std::size_t len = 0;
      for (const auto* r : runs) len = std::max(len, r->trials.size());
      for (std::size_t i = 0; i < len; ++i) {
        double sum = 0, lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const auto* r : runs) {
          const double b = r->trials.empty() ? 0.0 : r->trials[std::min(i, r->trials.size() - 1)].best_gflops;
          sum += b;
          lo = std::min(lo, b);
          hi = std::max(hi, b);
        }
        os << to_string(arm) << ',' << k.signature() << ',' << (i + 1) << ','
           << format_double(sum / static_cast<double>(runs.size())) << ',' << format_double(lo) << ','
           << format_double(hi) << '\n';
      }
    }
  }
}

/// Summed workload time (ms) of the held-out bundle per (arm, seed): each
/// kernel contributes its FLOP count over its best GFLOPS.
inline void write_bundle_times(std::ostream& os, const ExperimentPlan& plan, const std::map<std::string, TuningRecord>& recs) {
  os << "arm,seed,bundle_time_ms\n";
  for (Arm arm : plan.arms) {
    for (auto seed : plan.seeds) {
      double total = 0;
      bool complete = true;
      for (const auto& k : plan.kernels) {
        auto it = recs.find(cell_name(arm, k, seed));
        if (it == recs.end() || it->second.best() <= 0) {
          complete = false;
          break;
        }
        const TileGeometry g = tile_geometry(k, Schedule{});
        total += g.total_flops / (it->second.best() * 1e9) * 1e3;
      }
      if (complete) os << to_string(arm) << ',' << seed << ',' << format_double(total) << '\n';
    }
  }
}

/// Runs every (arm, kernel, seed) cell. With `out_dir`, records go to
/// out_dir/records/<cell>.csv next to a .hash file; a cell whose hash file
/// matches is loaded instead of re-run. Metrics, plot data, bundle times and
/// a manifest are written at the end.
inline ExperimentResult run_experiment(const ExperimentPlan& plan, const ExperimentResources& res,
                                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                       std::ostream* progress = nullptr) {
  plan.validate(res.training_classes);
  for (Arm arm : plan.arms) res.for_arm(arm);  // fail fast on missing inputs

  ExperimentResult result;
  const std::filesystem::path rec_dir = out_dir ? *out_dir / "records" : std::filesystem::path();
  if (out_dir) std::filesystem::create_directories(rec_dir);
  nlohmann::json cells = nlohmann::json::array();
  for (Arm arm : plan.arms) {
    for (const auto& k : plan.kernels) {
      for (auto seed : plan.seeds) {
        const std::string name = cell_name(arm, k, seed);
        const std::string hash = hex64(cell_hash(plan, res, arm, k, seed));
        bool loaded = false;
        if (out_dir) {
          std::ifstream hf(rec_dir / (name + ".hash"));
          std::string stored;
          if (hf >> stored && stored == hash) {
            std::ifstream rf(rec_dir / (name + ".csv"));
            if (rf) {
              TuningRecord r = read_record_csv(rf);
              r.spec = k;
              r.arm = std::string(to_string(arm));
              r.profile = plan.profile;
              r.seed = seed;
              result.records[name] = std::move(r);
              loaded = true;
              ++result.cells_skipped;
            }
          }
        }
        if (!loaded) {
          if (progress != nullptr) *progress << "running " << name << '\n' << std::flush;
          TuningRecord r = run_cell(plan, res, arm, k, seed);
          if (out_dir) {
            std::ofstream rf(rec_dir / (name + ".csv"));
            write_record_csv(rf, r);
            std::ofstream hf(rec_dir / (name + ".hash"));
            hf << hash << '\n';
          }
          result.records[name] = std::move(r);
          ++result.cells_run;
        }
        cells.push_back({{"cell", name}, {"arm", to_string(arm)}, {"kernel", k.signature()}, {"seed", seed},
                         {"hash", hash}, {"record", out_dir ? (rec_dir / (name + ".csv")).string() : ""}});
      }
    }
  }
  result.metrics = metrics_for(plan, result.records);
  if (out_dir) {
    std::ofstream mf(*out_dir / "metrics.csv");
    write_metrics_csv(mf, result.metrics);
    std::ofstream sf(*out_dir / "metrics_summary.csv");
    write_metrics_summary(sf, result.metrics);
    std::ofstream pf(*out_dir / "plot_data.csv");
    write_plot_data(pf, plan, result.records);
    std::ofstream bf(*out_dir / "bundle_times.csv");
    write_bundle_times(bf, plan, result.records);
    nlohmann::json manifest{{"plan", plan},
                            {"plan_hash", hex64(fnv1a(nlohmann::json(plan).dump()))},
                            {"model_hash", hex64(res.model_hash)},
                            {"cells", cells},
                            {"artifacts",
                             {{"metrics", (*out_dir / "metrics.csv").string()},
                              {"metrics_summary", (*out_dir / "metrics_summary.csv").string()},
                              {"plot_data", (*out_dir / "plot_data.csv").string()},
                              {"bundle_times", (*out_dir / "bundle_times.csv").string()}}}};
    std::ofstream jf(*out_dir / "manifest.json");
    jf << manifest.dump(2) << '\n';
  }
  return result;
}

/// Recomputes metrics and summaries from the record files of a finished
/// experiment directory.
inline std::vector<MetricsEntry> report_from_dir(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ConfigError("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("unreadable manifest: " + std::string(e.what()));
  }
  const ExperimentPlan plan = manifest.at("plan").get<ExperimentPlan>();
  std::map<std::string, TuningRecord> recs;
  for (Arm arm : plan.arms) {
    for (const auto& k : plan.kernels) {
      for (auto seed : plan.seeds) {
        const std::string name = cell_name(arm, k, seed);
        std::ifstream rf(dir / "records" / (name + ".csv"));
        if (!rf) continue;
        TuningRecord r = read_record_csv(rf);
        r.spec = k;
        r.arm = std::string(to_string(arm));
        r.profile = plan.profile;
        r.seed = seed;
        recs.emplace(name, std::move(r));
      }
    }
  }
  auto metrics = metrics_for(plan, recs);
  std::ofstream out(dir / "metrics.csv");
  write_metrics_csv(out, metrics);
  std::ofstream sum(dir / "metrics_summary.csv");
  write_metrics_summary(sum, metrics);
  return metrics;
}

/// Median over cells of a metric, for one arm.
inline double median_metric(const std::vector<MetricsEntry>& entries, const std::string& arm,
                            const std::function<std::optional<double>(const MetricsEntry&)>& get) {
  std::vector<double> v;
  for (const auto& e : entries) {
    if (e.arm != arm) continue;
    if (auto x = get(e)) v.push_back(*x);
  }
  return median(v);
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_HARNESS_HPP_
