// Copyright 2026 The scalecast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration: a flat `key = value` file with [sections]. See
// configs/README.md for the keys.

#ifndef SCALECAST_CONFIG_H_
#define SCALECAST_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scalecast/simengine.h"
#include "scalecast/workload.h"

namespace scalecast {

struct PlanSection {
  std::string model_id;  // empty: first model
  int nodes = 0;         // 0: cluster.node_count
  int first_node_id = 0;
};

struct RunConfig {
  ClusterSpec cluster;
  std::vector<ModelSpec> models;
  std::vector<Strategy> strategies{Strategy::kLambdaScale};
  AutoscalePolicy policy;
  SimOptions sim;
  std::uint64_t seed = 0;
  std::string trace_path;  // resolved against the config directory
  bool sort_trace = false;
  std::optional<BurstSpec> synth;
  PlanSection plan;

  const ModelSpec& plan_model() const;
};

// Throws ConfigError naming the offending line or key.
RunConfig parse_config(std::istream& is, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

// The configured trace file, else the synthetic burst (seeded by cfg.seed),
// else an empty trace.
std::vector<TraceRecord> build_trace(const RunConfig& cfg);

}  // namespace scalecast

#endif  // SCALECAST_CONFIG_H_
