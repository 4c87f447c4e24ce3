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

// Execution pipelines built on top of a multicast schedule, plus the planning
// helpers for 2D pipelining, multi-GPU placement and mode switching.

#ifndef SCALECAST_PIPELINE_H_
#define SCALECAST_PIPELINE_H_

#include <string>
#include <utility>
#include <vector>

#include "scalecast/common.h"
#include "scalecast/multicast.h"

namespace scalecast {

struct Stage {
  NodeId node = 0;
  int device = 0;
  BlockId block_lo = 0;  // inclusive
  BlockId block_hi = 0;  // inclusive
  int group_id = 0;

  int block_span() const { return block_hi - block_lo + 1; }
};

enum class PipelineMode { kPipelined, kLocal };

struct ExecutionPipeline {
  int pipeline_id = 0;
  std::vector<Stage> stages;
  int activation_step = -1;  // -1: every stage already holds its blocks
  PipelineMode mode = PipelineMode::kPipelined;
  // Set when a stage range had to be widened past its group's leading chunk
  // to cover the model.
  bool extended = false;

  int capacity() const { return static_cast<int>(stages.size()); }
};

// Nodes of one pipeline before block assignment, with the sub-group each
// node came from.
struct PipelineDraft {
  std::vector<NodeId> nodes;
  std::vector<int> groups;
};

// Receivers of every group reordered by the step at which they finish their
// group's leading chunk (ties by node id). Sources stay at position 0.
std::vector<SubGroup> order_by_first_chunk(const MulticastSchedule& schedule);

// Pipeline formation over the receivers (members[1..]) of each group. While
// nodes remain: a lone remaining group forms pipelines from its nodes in
// order, at most `max_stages` per pipeline (0 = unlimited); otherwise with
// a = smallest remaining group size, a pipelines are formed, the t-th taking
// the t-th remaining node of every group.
std::vector<PipelineDraft> generate_pipelines(const std::vector<SubGroup>& groups,
                                              int max_stages = 0);

// Block ranges for a draft. Stages from distinct groups take their group's
// leading chunk, sorted into model order, with gaps absorbed by the preceding
// stage; stages all from one group split the blocks evenly.
ExecutionPipeline assign_blocks_to_stages(const PipelineDraft& draft,
                                          const std::vector<std::vector<BlockId>>& orders,
                                          int block_count);

// Latest arrival step over every stage's blocks (-1 if all are pre-held).
int activation_step(const ExecutionPipeline& pipeline,
                    const std::map<NodeId, std::vector<int>>& arrivals);

// Ordering, formation, block assignment and activation for a schedule.
std::vector<ExecutionPipeline> build_pipelines(const MulticastSchedule& schedule);

// Per-tick stage occupancy of a cyclic 2D pipeline. busy[t][s] is the batch
// at stage s during tick t (-1 if idle); waiting[t] lists batches queued for
// stage 0.
struct TwoDSchedule {
  int stage_count = 0;
  int batch_count = 0;
  std::vector<std::vector<int>> busy;
  std::vector<std::vector<int>> waiting;

  // Fraction of busy stage-ticks over [from_tick, end).
  double utilization(int from_tick) const;
  // Ticks between consecutive token completions of `batch`, or 0 if it
  // finishes fewer than two tokens.
  int token_latency(int batch) const;
};

TwoDSchedule plan_2d_schedule(const ExecutionPipeline& pipeline, int inflight_batches,
                              int ticks);

enum class MultiGpuStrategy { kCrossNodeSingleGpu, kCrossNodeMultiGpu, kIntraNodeReplicate };

const char* to_string(MultiGpuStrategy s);

MultiGpuStrategy select_multi_gpu_strategy(const ModelSpec& model, int node_gpus,
                                           int free_local_gpus);

struct SwitchAssignment {
  int request_id = 0;
  NodeId node = 0;
  int tokens_generated = 0;
  double recompute_cost_s = 0.0;
};

struct ModeSwitchPlan {
  int pipeline_id = 0;
  std::vector<SwitchAssignment> assignments;

  double total_recompute_s() const;
};

// Deals incomplete requests (id, tokens generated) round-robin over the stage
// nodes; each pays tokens * prefill_ms_per_token / 1000 of recomputation.
ModeSwitchPlan plan_mode_switch(ExecutionPipeline& pipeline,
                                const std::vector<std::pair<int, int>>& incomplete,
                                double prefill_ms_per_token);

// `pipeline_id,stage_index,node,device,block_lo,block_hi,activation_step`.
std::string pipelines_to_csv(const std::vector<ExecutionPipeline>& pipelines);

}  // namespace scalecast

#endif  // SCALECAST_PIPELINE_H_
