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

#include "scalecast/pipeline.h"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace scalecast {

std::vector<SubGroup> order_by_first_chunk(const MulticastSchedule& schedule) {
  const int b = schedule.block_count;
  const int k = static_cast<int>(schedule.subgroups.size());
  auto arrivals = arrival_steps(schedule);
  std::vector<SubGroup> out = schedule.subgroups;
  for (SubGroup& g : out) {
    if (g.members.size() < 2) continue;
    auto chunk = leading_chunk(g.transfer_order, b, k);
    auto ready = [&](NodeId n) {
      int s = -1;
      for (BlockId blk : chunk) s = std::max(s, arrivals.at(n)[blk]);
      return s;
    };
    std::stable_sort(g.members.begin() + 1, g.members.end(), [&](NodeId a, NodeId c) {
      int ra = ready(a), rc = ready(c);
      return ra != rc ? ra < rc : a < c;
    });
  }
  return out;
}

std::vector<PipelineDraft> generate_pipelines(const std::vector<SubGroup>& groups,
                                              int max_stages) {
  if (groups.empty()) throw InvalidArgument("generate_pipelines: no sub-groups");
  std::vector<std::deque<NodeId>> remaining;
  std::vector<int> ids;
  for (const SubGroup& g : groups) {
    remaining.emplace_back(g.members.begin() + (g.members.empty() ? 0 : 1), g.members.end());
    ids.push_back(g.group_id);
  }

  std::vector<PipelineDraft> out;
  for (;;) {
    std::vector<int> live;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (!remaining[i].empty()) live.push_back(static_cast<int>(i));
    if (live.empty()) break;

    if (live.size() == 1) {
      auto& q = remaining[live[0]];
      const std::size_t cap = max_stages > 0 ? max_stages : q.size();
      while (!q.empty()) {
        PipelineDraft d;
        for (std::size_t j = 0; j < cap && !q.empty(); ++j) {
          d.nodes.push_back(q.front());
          d.groups.push_back(ids[live[0]]);
          q.pop_front();
        }
        out.push_back(std::move(d));
      }
      break;
    }

    std::size_t a = remaining[live[0]].size();
    for (int i : live) a = std::min(a, remaining[i].size());
    for (std::size_t t = 0; t < a; ++t) {
      PipelineDraft d;
      for (int i : live) {
        d.nodes.push_back(remaining[i][t]);
        d.groups.push_back(ids[i]);
      }
      out.push_back(std::move(d));
    }
    for (int i : live) remaining[i].erase(remaining[i].begin(), remaining[i].begin() + a);
  }
  return out;
}

ExecutionPipeline assign_blocks_to_stages(const PipelineDraft& draft,
                                          const std::vector<std::vector<BlockId>>& orders,
                                          int block_count) {
  const int n = static_cast<int>(draft.nodes.size());
  const int b = block_count;
  if (n == 0) throw InvalidArgument("pipeline has no stages");
  if (n > b)
    throw InvalidArgument("pipeline has " + std::to_string(n) + " stages but only " +
                          std::to_string(b) + " blocks");

  ExecutionPipeline p;
  std::set<int> distinct(draft.groups.begin(), draft.groups.end());
  if (distinct.size() == 1 && n > 1) {
    int lo = 0;
    for (int j = 0; j < n; ++j) {
      int span = b / n + (j < b % n ? 1 : 0);
      p.stages.push_back({draft.nodes[j], 0, lo, lo + span - 1, draft.groups[j]});
      lo += span;
    }
    return p;
  }
  if (distinct.size() != static_cast<std::size_t>(n))
    throw InvalidArgument("pipeline mixes repeated and distinct sub-groups");

  const int k = static_cast<int>(orders.size());
  for (int j = 0; j < n; ++j) {
    const int g = draft.groups[j];
    if (g < 0 || g >= k) throw InvalidArgument("stage group id out of range");
    auto chunk = leading_chunk(orders[g], b, k);
    if (chunk.empty()) throw InvalidArgument("sub-group has an empty leading chunk");
    auto [lo, hi] = std::minmax_element(chunk.begin(), chunk.end());
    p.stages.push_back({draft.nodes[j], 0, *lo, *hi, g});
  }
  std::sort(p.stages.begin(), p.stages.end(),
            [](const Stage& a, const Stage& c) { return a.block_lo < c.block_lo; });

  // Each stage runs from its own start (0 for the first) to just before the
  // next stage's start.
  for (int j = 0; j < n; ++j) {
    int lo = j == 0 ? 0 : p.stages[j].block_lo;
    int hi = j + 1 < n ? p.stages[j + 1].block_lo - 1 : b - 1;
    if (lo != p.stages[j].block_lo || hi != p.stages[j].block_hi) p.extended = true;
    p.stages[j].block_lo = lo;
    p.stages[j].block_hi = hi;
  }
  return p;
}

int activation_step(const ExecutionPipeline& pipeline,
                    const std::map<NodeId, std::vector<int>>& arrivals) {
  int step = -1;
  for (const Stage& s : pipeline.stages) {
    const auto& arr = arrivals.at(s.node);
    for (BlockId blk = s.block_lo; blk <= s.block_hi; ++blk) step = std::max(step, arr[blk]);
  }
  return step;
}

std::vector<ExecutionPipeline> build_pipelines(const MulticastSchedule& schedule) {
  auto groups = order_by_first_chunk(schedule);
  std::vector<std::vector<BlockId>> orders;
  for (const SubGroup& g : groups) orders.push_back(g.transfer_order);
  auto arrivals = arrival_steps(schedule);

  std::vector<ExecutionPipeline> out;
  for (const PipelineDraft& d : generate_pipelines(groups, schedule.block_count)) {
    ExecutionPipeline p = assign_blocks_to_stages(d, orders, schedule.block_count);
    p.pipeline_id = static_cast<int>(out.size());
    p.activation_step = activation_step(p, arrivals);
    out.push_back(std::move(p));
  }
  return out;
}

double TwoDSchedule::utilization(int from_tick) const {
  long busy_ticks = 0, total = 0;
  for (std::size_t t = std::max(0, from_tick); t < busy.size(); ++t)
    for (int b : busy[t]) {
      ++total;
      if (b >= 0) ++busy_ticks;
    }
  return total == 0 ? 0.0 : static_cast<double>(busy_ticks) / total;
}

int TwoDSchedule::token_latency(int batch) const {
  std::vector<int> done;
  for (std::size_t t = 0; t < busy.size(); ++t)
    if (busy[t][stage_count - 1] == batch) done.push_back(static_cast<int>(t));
  return done.size() < 2 ? 0 : done[1] - done[0];
}

TwoDSchedule plan_2d_schedule(const ExecutionPipeline& pipeline, int inflight_batches,
                              int ticks) {
  if (inflight_batches < 1) throw InvalidArgument("inflight_batches must be >= 1");
  const int S = pipeline.capacity();
  if (S < 1) throw InvalidArgument("pipeline has no stages");

  TwoDSchedule out;
  out.stage_count = S;
  out.batch_count = inflight_batches;
  std::deque<int> queue;
  for (int i = 0; i < inflight_batches; ++i) queue.push_back(i);
  std::vector<int> cur(S, -1);
  for (int t = 0; t < ticks; ++t) {
    std::vector<int> next(S, -1);
    // A batch leaving the last stage goes back to the tail of the queue to
    // start its next token.
    if (cur[S - 1] >= 0) queue.push_back(cur[S - 1]);
    for (int s = S - 1; s > 0; --s) next[s] = cur[s - 1];
    if (!queue.empty()) {
      next[0] = queue.front();
      queue.pop_front();
    }
    cur = next;
    out.busy.push_back(cur);
    out.waiting.emplace_back(queue.begin(), queue.end());
  }
  return out;
}

const char* to_string(MultiGpuStrategy s) {
  switch (s) {
    case MultiGpuStrategy::kCrossNodeSingleGpu: return "cross_node_single_gpu";
    case MultiGpuStrategy::kCrossNodeMultiGpu: return "cross_node_multi_gpu";
    case MultiGpuStrategy::kIntraNodeReplicate: return "intra_node_replicate";
  }
  return "unknown";
}

MultiGpuStrategy select_multi_gpu_strategy(const ModelSpec& model, int node_gpus,
                                           int free_local_gpus) {
  if (node_gpus < 1) throw InvalidArgument("node_gpus must be >= 1");
  if (model.gpus_per_replica > node_gpus)
    throw UnsupportedConfiguration("model " + model.model_id + " needs " +
                                   std::to_string(model.gpus_per_replica) +
                                   " GPUs but a node has " + std::to_string(node_gpus));
  if (model.gpus_per_replica > 1) return MultiGpuStrategy::kCrossNodeMultiGpu;
  if (free_local_gpus >= 1) return MultiGpuStrategy::kIntraNodeReplicate;
  return MultiGpuStrategy::kCrossNodeSingleGpu;
}

double ModeSwitchPlan::total_recompute_s() const {
  double total = 0.0;
  for (const auto& a : assignments) total += a.recompute_cost_s;
  return total;
}

ModeSwitchPlan plan_mode_switch(ExecutionPipeline& pipeline,
                                const std::vector<std::pair<int, int>>& incomplete,
                                double prefill_ms_per_token) {
  ModeSwitchPlan plan;
  plan.pipeline_id = pipeline.pipeline_id;
  const std::size_t n = pipeline.stages.size();
  if (n == 0 && !incomplete.empty()) throw InvalidArgument("pipeline has no stages");
  for (std::size_t i = 0; i < incomplete.size(); ++i) {
    auto [id, tokens] = incomplete[i];
    plan.assignments.push_back(
        {id, pipeline.stages[i % n].node, tokens, tokens * prefill_ms_per_token / 1000.0});
  }
  pipeline.mode = PipelineMode::kLocal;
  return plan;
}

std::string pipelines_to_csv(const std::vector<ExecutionPipeline>& pipelines) {
  std::ostringstream os;
  os << "pipeline_id,stage_index,node,device,block_lo,block_hi,activation_step\n";
  for (const auto& p : pipelines)
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
      const Stage& s = p.stages[i];
      os << p.pipeline_id << ',' << i << ',' << s.node << ',' << s.device << ','
         << s.block_lo << ',' << s.block_hi << ',' << p.activation_step << '\n';
    }
  return os.str();
}

}  // namespace scalecast
