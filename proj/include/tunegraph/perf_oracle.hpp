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
 * \file perf_oracle.hpp
 * \brief Deterministic analytic stand-in for hardware measurement.
 *
 * GFLOPS for a (kernel, schedule) pair is a product of smooth factors
 * (occupancy, parallelism, cache pressure, reduction reuse, coalescing,
 * unrolling, padding waste, kernel size) times seeded lognormal noise. Tiles
 * whose shared-memory footprint exceeds the platform capacity are
 * infeasible, and a fixed hash
 * marks a further `infeasible_fraction` of the space as failing.
 */

#ifndef TUNEGRAPH_PERF_ORACLE_HPP_
#define TUNEGRAPH_PERF_ORACLE_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunegraph/common.hpp"
#include "tunegraph/kernel_space.hpp"

namespace tunegraph {

struct PlatformProfile {
  std::string name = "platform-A";
  double peak_gflops = 10000.0;
  std::int64_t l1_capacity = 4096;       // elements
  std::int64_t shared_capacity = 49152;  // elements
  std::int64_t occupancy_knee = 128;     // threads per block
  double unroll_benefit = 0.35;
  double infeasible_fraction = 0.02;
  double noise_std_rel = 0.02;
  std::uint64_t seed = 1;
  std::int64_t min_blocks = 32;  // blocks needed to fill the device

  void validate() const {
    if (!(peak_gflops > 0) || l1_capacity <= 0 || shared_capacity <= 0 || occupancy_knee <= 0 ||
        min_blocks <= 0) {
      throw ConfigError("platform profile " + name + ": capacities must be positive");
    }
    if (unroll_benefit < 0 || noise_std_rel < 0) throw ConfigError("platform profile " + name + ": negative coefficient");
    if (infeasible_fraction < 0 || infeasible_fraction >= 1) {
      throw ConfigError("platform profile " + name + ": infeasible_fraction must be in [0,1)");
    }
  }
};

inline PlatformProfile platform_a() { return PlatformProfile{}; }

inline PlatformProfile platform_b() {
  PlatformProfile p;
  p.name = "platform-B";
  p.peak_gflops = 12000.0;
  p.l1_capacity = 2048;
  p.shared_capacity = 32768;
  p.occupancy_knee = 512;
  p.unroll_benefit = 0.15;
  p.seed = 2;
  p.min_blocks = 80;
  return p;
}

inline PlatformProfile builtin_profile(const std::string& name) {
  if (name == "platform-A") return platform_a();
  if (name == "platform-B") return platform_b();
  throw ConfigError("unknown platform profile: " + name);
}

inline void to_json(nlohmann::json& j, const PlatformProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"peak_gflops", p.peak_gflops},
                     {"l1_capacity", p.l1_capacity},
                     {"shared_capacity", p.shared_capacity},
                     {"occupancy_knee", p.occupancy_knee},
                     {"unroll_benefit", p.unroll_benefit},
                     {"infeasible_fraction", p.infeasible_fraction},
                     {"noise_std_rel", p.noise_std_rel},
                     {"seed", p.seed},
                     {"min_blocks", p.min_blocks}};
}

/// Missing fields fall back to the built-in profile named by "base" (default platform-A).
inline void from_json(const nlohmann::json& j, PlatformProfile& p) {
  p = builtin_profile(j.value("base", std::string("platform-A")));
  p.name = j.value("name", p.name);
  p.peak_gflops = j.value("peak_gflops", p.peak_gflops);
  p.l1_capacity = j.value("l1_capacity", p.l1_capacity);
  p.shared_capacity = j.value("shared_capacity", p.shared_capacity);
  p.occupancy_knee = j.value("occupancy_knee", p.occupancy_knee);
  p.unroll_benefit = j.value("unroll_benefit", p.unroll_benefit);
  p.infeasible_fraction = j.value("infeasible_fraction", p.infeasible_fraction);
  p.noise_std_rel = j.value("noise_std_rel", p.noise_std_rel);
  p.seed = j.value("seed", p.seed);
  p.min_blocks = j.value("min_blocks", p.min_blocks);
  p.validate();
}

inline PlatformProfile load_profile_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read profile " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("profile " + path + ": " + e.what());
  }
  return j.get<PlatformProfile>();
}

struct Measurement {
  double gflops = 0.0;
  bool feasible = false;
  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Derived quantities of a tiled kernel that the oracle is built from.
struct TileGeometry {
  double block_threads = 1;  // spatial inner tile
  double row_width = 1;      // contiguous x run loaded per block
  double blocks = 1;         // spatial outer trip count
  double reduction_tile = 1;
  double shared_footprint = 0;
  double padding_efficiency = 1;
  double total_flops = 0;
};

inline TileGeometry tile_geometry(const KernelSpec& spec, const Schedule& s) {
  TileGeometry g;
  double useful = 1, padded = 1;
  for (const auto& a : kernel_axes(spec)) {
    const double t = a.knob.empty() ? static_cast<double>(a.extent) : static_cast<double>(s.tile_for(a.knob));
    const double outer = std::ceil(static_cast<double>(a.extent) / t);
    useful *= static_cast<double>(a.extent);
    padded *= outer * t;
    if (a.knob.empty()) continue;
    if (a.reduction) {
      g.reduction_tile *= t;
    } else {
      g.block_threads *= t;
      g.blocks *= outer;
    }
  }
  g.padding_efficiency = useful / padded;
  g.total_flops = 2.0 * useful;

  // Footprints are bounded by the tensors themselves; tiles past an axis
  // extent only cost idle threads and padded work.
  const bool one_d = is_one_dimensional(spec.op_type);
  const bool depthwise = spec.op_type == OpType::kDepthwise;
  const double stride = is_transposed(spec.op_type) ? 1.0 : static_cast<double>(spec.stride);
  const double out = static_cast<double>(spec.output_size());
  const double k = static_cast<double>(spec.kernel_size);
  const double in_extent = (out - 1.0) * stride + k;
  auto clamp = [](std::int64_t t, double extent) { return std::min(static_cast<double>(t), extent); };
  const double ty = one_d ? 1.0 : clamp(s.tile_y, out);
  const double ry = one_d ? 1.0 : clamp(s.tile_ry, k);
  const double tx = clamp(s.tile_x, out);
  const double rx = clamp(s.tile_rx, k);
  const double tf = clamp(s.tile_f, static_cast<double>(spec.out_channels));
  const double rc = depthwise ? 1.0 : clamp(s.tile_rc, static_cast<double>(spec.in_channels));
  const double in_rows = one_d ? 1.0 : std::min((ty - 1.0) * stride + ry, in_extent);
  const double in_cols = std::min((tx - 1.0) * stride + rx, in_extent);
  const double in_tile = (depthwise ? tf : rc) * in_rows * in_cols;
  const double w_tile = tf * rc * ry * rx;
  g.shared_footprint = in_tile + w_tile;
  g.row_width = tx;
  return g;
}

namespace detail {

inline std::uint64_t schedule_hash(const KernelSpec& spec, const Schedule& s) {
  std::uint64_t h = fnv1a(spec.signature());
  for (auto v : {s.tile_f, s.tile_y, s.tile_x, s.tile_rc, s.tile_ry, s.tile_rx, s.auto_unroll_max_step,
                 static_cast<std::int64_t>(s.unroll_explicit)}) {
    h = hash_combine(h, static_cast<std::uint64_t>(v));
  }
  return h;
}

inline double op_efficiency(OpType op) {
  switch (op) {
    case OpType::kConv1d: return 0.85;
    case OpType::kTranspose1d: return 0.7;
    case OpType::kConv2d: return 1.0;
    case OpType::kTranspose2d: return 0.8;
    case OpType::kWinograd: return 1.5;
    case OpType::kDepthwise: return 0.45;
  }
  return 1.0;
}

}  // namespace detail

/// Noise-free GFLOPS of a feasible schedule.
inline double oracle_mean_gflops(const KernelSpec& spec, const Schedule& s, const PlatformProfile& p) {
  const TileGeometry g = tile_geometry(spec, s);
  const double x = g.block_threads / static_cast<double>(p.occupancy_knee);
  const double occupancy = x / std::pow(1.0 + x * x * x * x, 0.25);
  const double oversubscribed = g.block_threads / (8.0 * static_cast<double>(p.occupancy_knee));
  const double thread_limit = 1.0 / (1.0 + oversubscribed * oversubscribed);
  const double parallelism = g.blocks / (g.blocks + static_cast<double>(p.min_blocks));
  const double pressure = g.shared_footprint / static_cast<double>(p.l1_capacity);
  const double cache = 1.0 / std::sqrt(1.0 + pressure * pressure);
  const double reuse = g.reduction_tile / (g.reduction_tile + 4.0);
  const double coalesce = g.row_width / (g.row_width + 2.0);

  double unroll = 1.0;
  const double r = g.reduction_tile;
  if (s.auto_unroll_max_step > 0 && r * g.block_threads <= static_cast<double>(s.auto_unroll_max_step)) {
    unroll *= 1.0 + p.unroll_benefit * std::min(1.0, r / 32.0);
  }
  if (s.unroll_explicit) {
    unroll *= r <= 64.0 ? 1.0 + 0.5 * p.unroll_benefit : 1.0 / (1.0 + r / 512.0);
  }
  const double size_scale = g.total_flops / (g.total_flops + 5.0e6);
  return p.peak_gflops * occupancy * thread_limit * parallelism * cache * reuse * coalesce * unroll *
         g.padding_efficiency * size_scale * detail::op_efficiency(spec.op_type);
}

inline Measurement measure(const KernelSpec& spec, const Schedule& s, const PlatformProfile& p) {
  const TileGeometry g = tile_geometry(spec, s);
  if (g.shared_footprint > static_cast<double>(p.shared_capacity)) return {0.0, false};
  const std::uint64_t h = detail::schedule_hash(spec, s);
  if (unit_from_hash(splitmix64(h ^ 0x5bd1e995ULL)) < p.infeasible_fraction) return {0.0, false};

  double gflops = oracle_mean_gflops(spec, s, p);
  if (p.noise_std_rel > 0) {
    const std::uint64_t nh = hash_combine(p.seed, h);
    const double u1 = std::max(unit_from_hash(splitmix64(nh)), 1e-300);
    const double u2 = unit_from_hash(splitmix64(nh + 1));
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    gflops *= std::exp(p.noise_std_rel * z);
  }
  return {std::max(gflops, 1e-12), true};
}

inline Measurement measure(const KernelSpec& spec, const KnobSpace& space, const KnobConfig& config,
                           const PlatformProfile& p) {
  return measure(spec, resolve(space, config), p);
}

/// Order-preserving elementwise measure.
inline std::vector<Measurement> batch_measure(const KernelSpec& spec, const KnobSpace& space,
                                              const std::vector<KnobConfig>& configs,
                                              const PlatformProfile& p) {
  std::vector<Measurement> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(measure(spec, space, c, p));
  return out;
}

// ---------------------------------------------------------------------------
// 256-config toy problem shared by the search tests
// ---------------------------------------------------------------------------

struct ToyProblem {
  KernelSpec spec;
  KnobSpace space;
};

inline ToyProblem toy_problem() {
  ToyProblem t;
  t.spec = {OpType::kConv2d, 32, 32, 32, 3, 1, 1};
  t.space = KnobSpace({{"tile_y", {1, 2, 4, 8}},
                       {"tile_x", {2, 4, 8, 16}},
                       {"tile_f", {1, 4, 8, 32}},
                       {"tile_rc", {1, 2, 4, 8}}});
  return t;
}

}  // namespace tunegraph

#endif  // TUNEGRAPH_PERF_ORACLE_HPP_
