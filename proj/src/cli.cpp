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
 * \file cli.cpp
 * \brief Subcommand implementations behind the tunegraph executable.
 */

#include "tunegraph/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

namespace tunegraph {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const HeldoutParams& h);

namespace {

HeldoutParams heldout_from_json(const nlohmann::json& j) {
  HeldoutParams h;
  h.count = j.value("count", h.count);
  h.seed = j.value("seed", h.seed);
  if (j.contains("op_types")) {
    h.op_types.clear();
    for (const auto& s : j.at("op_types")) h.op_types.push_back(parse_op_type(s.get<std::string>()));
  }
  if (h.count < 1 || h.op_types.empty()) throw ConfigError("heldout needs a positive count and op types");
  return h;
}

std::string config_hash(const PipelineConfig& c) { return hex64(fnv1a(pipeline_config_json(c).dump())); }

void write_manifest(const fs::path& dir, const std::string& command, const PipelineConfig& c,
                    const nlohmann::json& extra, const nlohmann::json& artifacts) {
  nlohmann::json m{{"command", command}, {"config_hash", config_hash(c)}, {"config", pipeline_config_json(c)},
                   {"artifacts", artifacts}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream f(dir / "manifest.json");
  f << m.dump(2) << '\n';
}

Dataset dataset_for(const PipelineConfig& c) {
  Rng rng(c.dataset_seed);
  return gen_dataset(c.dataset, rng);
}

std::uint64_t seed_or(const CommandOptions& o, std::uint64_t fallback) { return o.seed.value_or(fallback); }

fs::path ensure_out(const CommandOptions& o) {
  fs::path p(o.out);
  fs::create_directories(p);
  return p;
}

ModelState load_model(const std::string& dir, const std::string& name) {
  if (dir.empty()) throw ConfigError("--checkpoint <dir> is required");
  const fs::path p = fs::path(dir) / name;
  if (!fs::exists(p)) throw ConfigError("missing checkpoint " + p.string());
  return load_checkpoint_file(p.string());
}

std::vector<KernelSpec> plan_kernels(const PipelineConfig& c, const Dataset& ds) {
  if (!c.plan.kernels.empty()) return c.plan.kernels;
  return heldout_kernels(c.dataset, c.heldout.op_types, c.heldout.count, c.heldout.seed, ds.kernels);
}

/// Loads what the given arms need. Checkpoint requirements fail with the arm name.
ExperimentResources resources_for(const std::vector<Arm>& arms, const CommandOptions& o, const PipelineConfig& c,
                                  const Dataset& ds, const std::string& profile) {
  ExperimentResources res;
  for (const auto& k : ds.kernels) res.training_classes.insert(k.signature());
  std::uint64_t h = kFnvOffset;
  for (Arm a : arms) {
    if (!uses_cost_model(a)) continue;
    if (o.checkpoint.empty()) {
      throw ConfigError("arm " + std::string(to_string(a)) + " needs --checkpoint <dir> with meta-trained models");
    }
    if (uses_augmented_graphs(a)) {
      if (!res.model_augmented) res.model_augmented = load_model(o.checkpoint, "augmented.ckpt");
      if (!res.super_template) res.super_template = build_full_template();
    } else if (!res.model_raw) {
      res.model_raw = load_model(o.checkpoint, "raw.ckpt");
    }
  }
  if (res.model_raw) h = fnv1a(checkpoint_string(*res.model_raw), h);
  if (res.model_augmented) h = fnv1a(checkpoint_string(*res.model_augmented), h);
  res.model_hash = h;
  if (std::find(arms.begin(), arms.end(), Arm::kXgbXfer) != arms.end()) {
    Rng rng(hash_combine(c.dataset_seed, 0x78666572ULL));
    res.xfer_prior = xfer_prior_samples(ds, builtin_profile(profile), c.plan.xfer_prior_samples, rng);
  }
  return res;
}

}  // namespace

void to_json(nlohmann::json& j, const HeldoutParams& h) {
  std::vector<std::string> ops;
  for (auto op : h.op_types) ops.emplace_back(to_string(op));
  j = nlohmann::json{{"count", h.count}, {"op_types", ops}, {"seed", h.seed}};
}

PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig c;
  if (path.empty()) return c;
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  try {
    const nlohmann::json j = nlohmann::json::parse(f);
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetParams>();
    c.dataset_seed = j.value("dataset_seed", c.dataset_seed);
    if (j.contains("meta")) c.meta = j.at("meta").get<MetaConfig>();
    if (j.contains("plan")) c.plan = j.at("plan").get<ExperimentPlan>();
    if (j.contains("tune")) c.plan.tune = j.at("tune").get<TuneConfig>();
    if (j.contains("heldout")) c.heldout = heldout_from_json(j.at("heldout"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path + ": " + e.what());
  }
  c.dataset.validate();
  c.meta.validate();
  c.plan.tune.validate();
  return c;
}

nlohmann::json pipeline_config_json(const PipelineConfig& c) {
  return nlohmann::json{{"dataset", c.dataset}, {"dataset_seed", c.dataset_seed}, {"meta", c.meta},
                        {"plan", c.plan},       {"heldout", c.heldout}};
}

int cmd_gen_dataset(const CommandOptions& o, std::ostream& log) {
  PipelineConfig c = load_pipeline_config(o.config);
  c.dataset_seed = seed_or(o, c.dataset_seed);
  if (!o.profile.empty()) c.dataset.profile = o.profile;
  const fs::path out = ensure_out(o);
  const Dataset ds = dataset_for(c);
  write_dataset(out, ds);
  write_manifest(out, "gen-dataset", c,
                 {{"seed", c.dataset_seed}, {"profile", c.dataset.profile}, {"dataset_hash", hex64(ds.hash())},
                  {"samples", ds.rows.size()}},
                 {{"samples", (out / "samples.csv").string()},
                  {"kernels", (out / "kernels.json").string()},
                  {"graphs_raw", (out / "graphs_raw.txt").string()},
                  {"graphs_augmented", (out / "graphs_augmented.txt").string()}});
  log << "wrote " << ds.rows.size() << " samples from " << ds.kernels.size() << " kernels to " << out.string()
      << '\n';
  return 0;
}

int cmd_pretrain(const CommandOptions& o, std::ostream& log) {
  PipelineConfig c = load_pipeline_config(o.config);
  if (!o.profile.empty()) c.dataset.profile = o.profile;
  const std::uint64_t seed = seed_or(o, c.meta.seed);
  const fs::path out = ensure_out(o);
  const Dataset ds = dataset_for(c);
  std::ofstream losses(out / "pretrain_losses.csv");
  losses << "variant,epoch,loss\n";
  for (const auto* variant : {&ds.raw, &ds.augmented}) {
    const bool aug = variant == &ds.augmented;
    Rng rng(hash_combine(seed, aug ? 1 : 0));
    std::vector<double> el;
    const ModelState m = pretrain(*variant, c.meta, rng, {}, &el);
    for (std::size_t e = 0; e < el.size(); ++e) {
      losses << (aug ? "augmented" : "raw") << ',' << e << ',' << format_double(el[e]) << '\n';
    }
    save_checkpoint_file((out / (aug ? "augmented.ckpt" : "raw.ckpt")).string(), m);
    log << "pre-trained " << (aug ? "augmented" : "raw") << " model, final loss "
        << (el.empty() ? 0.0 : el.back()) << '\n';
  }
  write_manifest(out, "pretrain", c, {{"seed", seed}, {"dataset_hash", hex64(ds.hash())}},
                 {{"raw", (out / "raw.ckpt").string()},
                  {"augmented", (out / "augmented.ckpt").string()},
                  {"losses", (out / "pretrain_losses.csv").string()}});
  return 0;
}

int cmd_metatrain(const CommandOptions& o, std::ostream& log) {
  PipelineConfig c = load_pipeline_config(o.config);
  if (!o.profile.empty()) c.dataset.profile = o.profile;
  const std::uint64_t seed = seed_or(o, c.meta.seed);
  const fs::path out = ensure_out(o);
  const Dataset ds = dataset_for(c);
  for (const auto* variant : {&ds.raw, &ds.augmented}) {
    const bool aug = variant == &ds.augmented;
    const std::string name = aug ? "augmented" : "raw";
    ModelState init = load_model(o.checkpoint, name + ".ckpt");
    Rng rng(hash_combine(seed, aug ? 3 : 2));
    std::ofstream mlog(out / ("meta_train_" + name + ".csv"));
    const ModelState m = meta_train(std::move(init), *variant, c.meta, rng, &mlog);
    save_checkpoint_file((out / (name + ".ckpt")).string(), m);
    log << "meta-trained " << name << " model\n";
  }
  write_manifest(out, "metatrain", c, {{"seed", seed}, {"dataset_hash", hex64(ds.hash())}, {"init", o.checkpoint}},
                 {{"raw", (out / "raw.ckpt").string()},
                  {"augmented", (out / "augmented.ckpt").string()},
                  {"log_raw", (out / "meta_train_raw.csv").string()},
                  {"log_augmented", (out / "meta_train_augmented.csv").string()}});
  return 0;
}

int cmd_tune(const CommandOptions& o, std::ostream& log) {
  PipelineConfig c = load_pipeline_config(o.config);
  if (o.arm.empty()) throw ConfigError("tune needs --arm");
  const Arm arm = parse_arm(o.arm);
  const std::string profile = o.profile.empty() ? c.plan.profile : o.profile;
  builtin_profile(profile);
  const std::uint64_t seed = seed_or(o, 0);
  const fs::path out = ensure_out(o);
  const Dataset ds = dataset_for(c);
  const KernelSpec kernel = o.kernel.empty() ? plan_kernels(c, ds).front() : parse_signature(o.kernel);

  ExperimentPlan plan = c.plan;
  plan.arms = {arm};
  plan.kernels = {kernel};
  plan.seeds = {seed};
  plan.profile = profile;
  const ExperimentResources res = resources_for(plan.arms, o, c, ds, profile);
  plan.validate(res.training_classes);
  const TuningRecord r = run_cell(plan, res, arm, kernel, seed);
  {
    std::ofstream f(out / "record.csv");
    write_record_csv(f, r);
  }
  const MetricsEntry m = compute_metrics(r);
  {
    std::ofstream f(out / "metrics.csv");
    write_metrics_csv(f, {m});
  }
  write_manifest(out, "tune", c,
                 {{"arm", to_string(arm)}, {"seed", seed}, {"profile", profile}, {"kernel", kernel.signature()},
                  {"final_best_gflops", r.best()}},
                 {{"record", (out / "record.csv").string()}, {"metrics", (out / "metrics.csv").string()}});
  log << to_string(arm) << " on " << kernel.signature() << ": best " << r.best() << " GFLOPS after "
      << r.trials.size() << " measurements\n";
  return 0;
}

int cmd_compare(const CommandOptions& o, std::ostream& log) {
  PipelineConfig c = load_pipeline_config(o.config);
  ExperimentPlan plan = c.plan;
  if (!o.arm.empty()) plan.arms = {parse_arm(o.arm)};
  if (!o.profile.empty()) plan.profile = o.profile;
  builtin_profile(plan.profile);
  if (o.seed) {
    plan.seeds.clear();
    for (std::uint64_t i = 0; i < 10; ++i) plan.seeds.push_back(*o.seed + i);
  }
  const fs::path out = ensure_out(o);
  const Dataset ds = dataset_for(c);
  plan.kernels = plan_kernels(c, ds);
  const ExperimentResources res = resources_for(plan.arms, o, c, ds, plan.profile);
  const ExperimentResult result = run_experiment(plan, res, out, &log);
  log << "ran " << result.cells_run << " cells, reused " << result.cells_skipped << '\n';
  for (Arm a : plan.arms) {
    const double med = median_metric(result.metrics, std::string(to_string(a)),
                                     [](const MetricsEntry& e) -> std::optional<double> { return e.final_best; });
    log << to_string(a) << ": median final best " << med << " GFLOPS\n";
  }
  return 0;
}

int cmd_report(const CommandOptions& o, std::ostream& log) {
  const auto metrics = report_from_dir(o.out);
  log << "recomputed " << metrics.size() << " metric rows in " << o.out << '\n';
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"tunegraph: meta-learned cost models for tensor-program tuning"};
  app.require_subcommand(1);
  CommandOptions o;
  std::uint64_t seed = 0;
  using Handler = int (*)(const CommandOptions&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> subs;
  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", o.config, "JSON pipeline configuration");
    s->add_option("--seed", seed, "random seed");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--arm", o.arm, "tuning arm");
    s->add_option("--profile", o.profile, "platform profile");
    s->add_option("--checkpoint", o.checkpoint, "directory with raw.ckpt and augmented.ckpt");
    s->add_option("--kernel", o.kernel, "kernel signature to tune");
    subs.emplace_back(s, h);
  };
  add("gen-dataset", "generate the meta-training dataset", cmd_gen_dataset);
  add("pretrain", "pre-train the raw and augmented cost models", cmd_pretrain);
  add("metatrain", "meta-train pre-trained models (needs --checkpoint)", cmd_metatrain);
  add("tune", "tune one kernel with one arm", cmd_tune);
  add("compare", "run every (arm, kernel, seed) cell of the plan", cmd_compare);
  add("report", "recompute metrics from an experiment directory (--out)", cmd_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }
  for (const auto& [s, h] : subs) {
    if (!s->parsed()) continue;
    if (s->count("--seed") > 0) o.seed = seed;
    try {
      return h(o, out);
    } catch (const NumericError& e) {
      err << "numeric failure: " << e.what() << '\n';
      return 3;
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return 2;
    } catch (const DomainError& e) {
      err << "domain error: " << e.what() << '\n';
      return 2;
    } catch (const nlohmann::json::exception& e) {
      err << "config error: " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}

}  // namespace tunegraph
