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

// Discrete-event simulation of serverless model scaling.

#ifndef SCALECAST_SIMENGINE_H_
#define SCALECAST_SIMENGINE_H_

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scalecast/common.h"
#include "scalecast/event_log.h"
#include "scalecast/modelmgr.h"
#include "scalecast/multicast.h"
#include "scalecast/workload.h"

namespace scalecast {

struct ClusterSpec {
  int node_count = 8;
  int gpus_per_node = 1;
  Bytes gpu_mem_bytes = 80'000'000'000ULL;
  Bytes host_mem_bytes = 1'000'000'000'000ULL;
  double nic_Bps = 50e9;
  double nvlink_Bps = 300e9;
  double h2d_Bps = 64e9;
  double ssd_Bps = 5e9;
  double step_fixed_overhead_s = 0.0;
  double baseline_group_init_s = 0.2;

  void validate() const;
};

enum class Strategy { kLambdaScale, kBinaryTree, kBroadcastGroups, kSsdOnly, kIdeal };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

// Per-step duration: fixed overhead plus the nominal block payload times the
// schedule's sender degree, over the NIC rate.
double transfer_step_time(const MulticastSchedule& schedule, const BlockPlan& plan,
                          const ClusterSpec& cluster);

// Baseline transfer plans over `nodes` (nodes[0] is the source).
//   binary_tree: heap-ordered binary tree, pipelined by block, degree 2.
//   broadcast_groups: one binomial-tree broadcast per block, in sequence.
//   ssd_only, ideal: no network steps (kind kNone).
MulticastSchedule baseline_schedule(Strategy strategy, std::span<const NodeId> nodes,
                                    const BlockPlan& plan);

struct AutoscalePolicy {
  double threshold_hi = 2.0;      // queued requests per replica
  int capacity_per_replica = 4;   // requests one replica absorbs
  double keep_alive_s = 15.0;
  int min_replicas = 0;
  int max_replicas = 0;  // 0: unlimited
  // Decisions run on multiples of this period; 0 evaluates on every arrival.
  double eval_interval_s = 0.0;
};

struct ScaleDecision {
  int scale_out = 0;
  int scale_in = 0;
};

// Scale out by ceil((queue - active * capacity) / capacity) replicas when
// queue / active > threshold_hi (any queue with no replica counts); scale in
// one replica once idle_s >= keep_alive_s, never below min_replicas.
ScaleDecision autoscale(const AutoscalePolicy& policy, int queue_depth, int active_replicas,
                        double idle_s = 0.0);

struct Placement {
  NodeId node = 0;
  std::string model_id;
};

struct SimOptions {
  Strategy strategy = Strategy::kLambdaScale;
  int k = 1;   // max multicast sources
  int b = 0;   // blocks per model; 0 selects by the elbow rule
  double elbow_threshold = 0.01;
  double activation_bytes = 4e6;  // per inter-stage hop
  int batch_size = 1;
  double horizon_s = std::numeric_limits<double>::infinity();
  double throughput_window_s = 0.1;
  // Write the model to host memory when a node is released.
  bool write_back = false;
  // Every node holds every model on SSD.
  bool ssd_everywhere = true;
  std::vector<Placement> initial_gpu;
  std::vector<Placement> initial_memory;
};

struct SimResult {
  std::vector<LogRecord> log;
  MetricsReport metrics;
  // Duration of the network phase of the first scale-out (0 if none).
  double first_multicast_s = 0.0;
};

// Deterministic; throws InputValidation before simulating if the trace names
// an unknown model or is unsorted.
SimResult run(const ClusterSpec& cluster, const std::vector<ModelSpec>& models,
              const std::vector<TraceRecord>& trace, const AutoscalePolicy& policy,
              const SimOptions& options);

// Block count used for a model: options.b capped at layer_count, or the elbow
// selection over the cluster's node count.
int effective_block_count(const ModelSpec& model, const ClusterSpec& cluster,
                          const SimOptions& options);

}  // namespace scalecast

#endif  // SCALECAST_SIMENGINE_H_
