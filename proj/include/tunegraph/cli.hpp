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
 * \file cli.hpp
 * \brief Pipeline configuration and the command-line subcommands.
 */

#ifndef TUNEGRAPH_CLI_HPP_
#define TUNEGRAPH_CLI_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tunegraph/harness.hpp"

namespace tunegraph {

/// How held-out tuning kernels are drawn when a plan lists none.
struct HeldoutParams {
  int count = 4;
  std::vector<OpType> op_types{OpType::kConv2d, OpType::kConv1d, OpType::kTranspose2d, OpType::kWinograd};
  std::uint64_t seed = 7;
};

/// Everything a subcommand may read from --config. Missing sections keep
/// their defaults; an empty path means all defaults.
struct PipelineConfig {
  DatasetParams dataset;
  std::uint64_t dataset_seed = 0;
  MetaConfig meta;
  ExperimentPlan plan;  // plan.tune is the tuning configuration
  HeldoutParams heldout;
};

PipelineConfig load_pipeline_config(const std::string& path);
nlohmann::json pipeline_config_json(const PipelineConfig& c);

/// Flags shared by every subcommand.
struct CommandOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string arm;
  std::string profile;
  std::string checkpoint;  // directory holding raw.ckpt and augmented.ckpt
  std::string kernel;      // signature for `tune`
};

int cmd_gen_dataset(const CommandOptions& o, std::ostream& log);
int cmd_pretrain(const CommandOptions& o, std::ostream& log);
int cmd_metatrain(const CommandOptions& o, std::ostream& log);
int cmd_tune(const CommandOptions& o, std::ostream& log);
int cmd_compare(const CommandOptions& o, std::ostream& log);
int cmd_report(const CommandOptions& o, std::ostream& log);

/// Parses argv and dispatches. Returns 0 on success, 2 on configuration or
/// domain errors, 3 on numeric failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tunegraph

#endif  // TUNEGRAPH_CLI_HPP_
