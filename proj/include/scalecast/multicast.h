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

// Block-level multicast planning: model partitioning, sub-group formation,
// k-way transfer ordering and binomial-pipeline step schedules.

#ifndef SCALECAST_MULTICAST_H_
#define SCALECAST_MULTICAST_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "scalecast/common.h"

namespace scalecast {

struct ModelSpec {
  std::string model_id;
  Bytes size_bytes = 0;
  int layer_count = 1;
  int gpus_per_replica = 1;
  // Compute time of one block for one token batch.
  double per_block_compute_ms = 1.0;
  double prefill_ms_per_token = 0.1;
};

void validate_model(const ModelSpec& model);

struct Block {
  BlockId id = 0;
  int layer_lo = 0;  // inclusive
  int layer_hi = 0;  // exclusive
  Bytes size_bytes = 0;
};

struct BlockPlan {
  int block_count = 0;
  Bytes model_size = 0;
  std::vector<Block> blocks;

  // Nominal per-block payload (M / b) used by the step-time model.
  double nominal_block_bytes() const {
    return block_count == 0 ? 0.0 : static_cast<double>(model_size) / block_count;
  }
};

// Splits the model into b contiguous layer ranges. Larger ranges come first
// when layer_count is not a multiple of b; bytes are proportional to layers.
BlockPlan partition_blocks(const ModelSpec& model, int b);

// Modeled end-to-end 1->N multicast time for b blocks:
// (b + ceil(log2 N) - 1) * (fixed_overhead_s + M / (b * bandwidth)).
double modeled_multicast_time(Bytes model_bytes, int n_nodes, int b,
                              double fixed_overhead_s, double bandwidth_Bps);

// Elbow selection over the modeled time. Returns the smallest b whose step to
// b+1 improves the modeled time by less than `improvement_threshold`
// (relative to T(b)), capped at layer_count.
int select_block_count(const ModelSpec& model, int n_nodes,
                       double fixed_overhead_s, double bandwidth_Bps,
                       double improvement_threshold = 0.01);

struct SubGroup {
  int group_id = 0;
  NodeId source = 0;
  std::vector<NodeId> members;  // members[0] == source
  std::vector<BlockId> transfer_order;
};

// Splits `nodes` into one sub-group per source. Destinations are dealt out in
// input order as contiguous runs; the first (N mod k) groups get one extra.
std::vector<SubGroup> partition_subgroups(std::span<const NodeId> nodes,
                                          std::span<const NodeId> sources);

// k-way circularly shifted chunk orders. Empty chunks (k > b) are skipped.
std::vector<std::vector<BlockId>> k_way_orders(int b, int k);

// Leading chunk (first ceil(b/k) entries) of an order, clipped to its length.
std::vector<BlockId> leading_chunk(std::span<const BlockId> order, int b, int k);

struct Transfer {
  int step = 0;
  NodeId sender = 0;
  NodeId receiver = 0;
  BlockId block = 0;

  friend bool operator==(const Transfer&, const Transfer&) = default;
};

using StepList = std::vector<std::vector<Transfer>>;

// Binomial pipeline over a (padded) hypercube for one sub-group. The source
// injects blocks in transfer_order, one per step; every node forwards the
// newest block (by transfer-order position) its dimension partner lacks, and
// idle slots left by padding are filled greedily.
StepList build_binomial_schedule(const SubGroup& group, int block_count);

// kNone marks strategies with no network transfer (local loads only).
enum class ScheduleKind { kBinomial, kBinaryTree, kBroadcast, kNone };

const char* to_string(ScheduleKind kind);

struct StepTimeModel {
  double fixed_overhead_s = 0.0;
  double bytes_per_second = 1.0;
};

struct MulticastSchedule {
  ScheduleKind kind = ScheduleKind::kBinomial;
  int block_count = 0;
  int max_sender_degree = 1;
  StepList steps;
  std::vector<SubGroup> subgroups;
  StepTimeModel step_time_model;

  int step_count() const { return static_cast<int>(steps.size()); }
};

// Builds one schedule per sub-group and merges them step by step.
// Throws ScheduleInvalid if the merged schedule fails validation.
MulticastSchedule compose_schedule(const std::vector<SubGroup>& groups,
                                   const BlockPlan& plan,
                                   StepTimeModel time_model = {});

enum class ViolationKind {
  kCausality,
  kSendDegree,
  kReceiveDegree,
  kIncomplete,
  kStepBound,
  kUnknownNode,
  kSelfSend,
  kBlockRange,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int step = -1;
  NodeId node = -1;
  BlockId block = -1;
};

std::vector<Violation> validate_schedule(const MulticastSchedule& schedule);

// Step index at which each non-source node received each block (indexed by
// block id); sources map to all -1.
std::map<NodeId, std::vector<int>> arrival_steps(const MulticastSchedule& schedule);

struct ScheduleSummary {
  int step_count = 0;
  std::map<NodeId, int> completion_step;  // last step index a node received in
};

ScheduleSummary summarize(const MulticastSchedule& schedule);

// `step,sender,receiver,block_id` lines sorted by (step, sender, receiver),
// preceded by a header line.
std::string schedule_to_csv(const MulticastSchedule& schedule);
std::string summary_to_text(const ScheduleSummary& summary);

// Step counts of build_binomial_schedule over a grid of group sizes and block
// counts, row-major over (sizes, blocks). The parallel variant splits the grid
// across OpenMP threads; the serial one is the reference.
std::vector<int> survey_step_counts_serial(std::span<const int> group_sizes,
                                           std::span<const int> block_counts);
std::vector<int> survey_step_counts_parallel(std::span<const int> group_sizes,
                                             std::span<const int> block_counts);

}  // namespace scalecast

#endif  // SCALECAST_MULTICAST_H_
