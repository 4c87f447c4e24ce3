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

#include "scalecast/multicast.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace scalecast {

void validate_model(const ModelSpec& model) {
  if (model.size_bytes == 0)
    throw InvalidArgument("model " + model.model_id + ": size_bytes must be > 0");
  if (model.layer_count < 1)
    throw InvalidArgument("model " + model.model_id + ": layer_count must be >= 1");
  if (model.gpus_per_replica < 1)
    throw InvalidArgument("model " + model.model_id + ": gpus_per_replica must be >= 1");
}

BlockPlan partition_blocks(const ModelSpec& model, int b) {
  validate_model(model);
  if (b < 1) throw InvalidArgument("block count must be >= 1 (got " + std::to_string(b) + ")");
  if (b > model.layer_count)
    throw InvalidArgument("block count must be <= layer_count " +
                          std::to_string(model.layer_count) + " (got " +
                          std::to_string(b) + ")");

  const int base = model.layer_count / b;
  const int extra = model.layer_count % b;
  // Byte offset of a layer boundary; exact integer arithmetic so the blocks
  // sum to the model size.
  auto offset = [&](int layer) -> Bytes {
    return static_cast<Bytes>(static_cast<unsigned __int128>(model.size_bytes) * layer /
                              model.layer_count);
  };

  BlockPlan plan;
  plan.block_count = b;
  plan.model_size = model.size_bytes;
  plan.blocks.reserve(b);
  int layer = 0;
  for (int i = 0; i < b; ++i) {
    int n = base + (i < extra ? 1 : 0);
    Block blk;
    blk.id = i;
    blk.layer_lo = layer;
    blk.layer_hi = layer + n;
    blk.size_bytes = offset(layer + n) - offset(layer);
    plan.blocks.push_back(blk);
    layer += n;
  }
  return plan;
}

double modeled_multicast_time(Bytes model_bytes, int n_nodes, int b,
                              double fixed_overhead_s, double bandwidth_Bps) {
  const int steps = b + ceil_log2(n_nodes) - 1;
  return steps * (fixed_overhead_s + static_cast<double>(model_bytes) / (b * bandwidth_Bps));
}

int select_block_count(const ModelSpec& model, int n_nodes, double fixed_overhead_s,
                       double bandwidth_Bps, double improvement_threshold) {
  validate_model(model);
  if (n_nodes < 1) throw InvalidArgument("n_nodes must be >= 1");
  if (fixed_overhead_s < 0.0) throw InvalidArgument("fixed_overhead_s must be >= 0");
  if (bandwidth_Bps <= 0.0) throw InvalidArgument("bandwidth must be > 0");
  if (improvement_threshold <= 0.0 || improvement_threshold >= 1.0)
    throw InvalidArgument("improvement_threshold must be in (0, 1)");

  for (int b = 1; b < model.layer_count; ++b) {
    double t = modeled_multicast_time(model.size_bytes, n_nodes, b, fixed_overhead_s,
                                      bandwidth_Bps);
    double next = modeled_multicast_time(model.size_bytes, n_nodes, b + 1,
                                         fixed_overhead_s, bandwidth_Bps);
    if ((t - next) / t < improvement_threshold) return b;
  }
  return model.layer_count;
}

std::vector<SubGroup> partition_subgroups(std::span<const NodeId> nodes,
                                          std::span<const NodeId> sources) {
  const int k = static_cast<int>(sources.size());
  const int n = static_cast<int>(nodes.size());
  if (k == 0) throw InvalidArgument("at least one source is required (k = 0)");
  if (k > n) throw InvalidArgument("more sources than nodes");

  std::set<NodeId> node_set;
  for (NodeId v : nodes)
    if (!node_set.insert(v).second)
      throw InvalidArgument("duplicate node id " + std::to_string(v));
  std::set<NodeId> source_set;
  for (NodeId s : sources) {
    if (!source_set.insert(s).second)
      throw InvalidArgument("duplicate source id " + std::to_string(s));
    if (!node_set.count(s))
      throw InvalidArgument("source " + std::to_string(s) + " is not in the node list");
  }

  std::vector<NodeId> dests;
  for (NodeId v : nodes)
    if (!source_set.count(v)) dests.push_back(v);

  std::vector<SubGroup> groups(k);
  std::size_t next = 0;
  for (int i = 0; i < k; ++i) {
    const int size = n / k + (i < n % k ? 1 : 0);
    groups[i].group_id = i;
    groups[i].source = sources[i];
    groups[i].members.push_back(sources[i]);
    for (int j = 1; j < size; ++j) groups[i].members.push_back(dests[next++]);
  }
  return groups;
}

std::vector<std::vector<BlockId>> k_way_orders(int b, int k) {
  if (b < 1) throw InvalidArgument("block count must be >= 1");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  const int l = (b + k - 1) / k;
  std::vector<std::vector<BlockId>> chunks(k);
  for (int i = 0; i < k; ++i)
    for (int j = l * i; j < std::min(l * (i + 1), b); ++j) chunks[i].push_back(j);

  std::vector<std::vector<BlockId>> orders(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const auto& c = chunks[(i + j) % k];
      orders[i].insert(orders[i].end(), c.begin(), c.end());
    }
  return orders;
}

std::vector<BlockId> leading_chunk(std::span<const BlockId> order, int b, int k) {
  const std::size_t l = static_cast<std::size_t>((b + k - 1) / k);
  return {order.begin(), order.begin() + std::min(l, order.size())};
}

StepList build_binomial_schedule(const SubGroup& group, int block_count) {
  const int L = static_cast<int>(group.members.size());
  const int b = block_count;
  if (L < 1) throw InvalidArgument("sub-group has no members");
  if (static_cast<int>(group.transfer_order.size()) != b)
    throw InvalidArgument("transfer order does not list every block");
  if (L == 1) return {};

  const int d = std::max(1, ceil_log2(L));
  // held[u][p]: node u holds the block at transfer-order position p.
  std::vector<std::vector<char>> held(L, std::vector<char>(b, 0));
  std::fill(held[0].begin(), held[0].end(), 1);
  std::vector<int> missing(L, b);
  missing[0] = 0;
  int incomplete = L - 1;

  // Newest position u holds that v lacks, or -1.
  auto newest_missing = [&](int u, int v) {
    for (int p = b - 1; p >= 0; --p)
      if (held[u][p] && !held[v][p]) return p;
    return -1;
  };

  struct Send {
    int from, to, pos;
  };
  StepList steps;
  const int step_cap = 4 * (b + d) + 16;
  for (int s = 0; incomplete > 0; ++s) {
    if (s > step_cap) throw std::logic_error("binomial schedule failed to converge");
    const int dim = s % d;
    std::vector<Send> sends;
    std::vector<char> sending(L, 0), receiving(L, 0);

    for (int u = 0; u < L; ++u) {
      const int v = u ^ (1 << dim);
      if (v >= L) continue;
      int pos = (u == 0 && s < b && !held[v][s]) ? s : newest_missing(u, v);
      if (pos < 0) continue;
      sends.push_back({u, v, pos});
      sending[u] = receiving[v] = 1;
    }
    for (int r = 1; r < L; ++r) {
      if (receiving[r] || missing[r] == 0) continue;
      int best_u = -1, best_pos = -1;
      for (int u = 0; u < L; ++u) {
        if (sending[u] || u == r) continue;
        int pos = newest_missing(u, r);
        if (pos > best_pos) best_u = u, best_pos = pos;
      }
      if (best_u < 0) continue;
      sends.push_back({best_u, r, best_pos});
      sending[best_u] = receiving[r] = 1;
    }

    std::vector<Transfer> step;
    step.reserve(sends.size());
    for (const Send& x : sends) {
      held[x.to][x.pos] = 1;
      if (--missing[x.to] == 0) --incomplete;
      step.push_back({s, group.members[x.from], group.members[x.to],
                      group.transfer_order[x.pos]});
    }
    std::sort(step.begin(), step.end(), [](const Transfer& a, const Transfer& c) {
      return std::tie(a.sender, a.receiver) < std::tie(c.sender, c.receiver);
    });
    steps.push_back(std::move(step));
  }
  return steps;
}

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kBinomial: return "binomial";
    case ScheduleKind::kBinaryTree: return "binary_tree";
    case ScheduleKind::kBroadcast: return "broadcast";
    case ScheduleKind::kNone: return "none";
  }
  return "unknown";
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCausality: return "causality";
    case ViolationKind::kSendDegree: return "send-degree";
    case ViolationKind::kReceiveDegree: return "receive-degree";
    case ViolationKind::kIncomplete: return "incomplete";
    case ViolationKind::kStepBound: return "step-bound";
    case ViolationKind::kUnknownNode: return "unknown-node";
    case ViolationKind::kSelfSend: return "self-send";
    case ViolationKind::kBlockRange: return "block-range";
  }
  return "unknown";
}

MulticastSchedule compose_schedule(const std::vector<SubGroup>& groups, const BlockPlan& plan,
                                   StepTimeModel time_model) {
  if (groups.empty()) throw InvalidArgument("no sub-groups to compose");
  MulticastSchedule schedule;
  schedule.kind = ScheduleKind::kBinomial;
  schedule.block_count = plan.block_count;
  schedule.subgroups = groups;
  schedule.step_time_model = time_model;
  for (const SubGroup& g : groups) {
    StepList part = build_binomial_schedule(g, plan.block_count);
    if (part.size() > schedule.steps.size()) schedule.steps.resize(part.size());
    for (std::size_t s = 0; s < part.size(); ++s)
      schedule.steps[s].insert(schedule.steps[s].end(), part[s].begin(), part[s].end());
  }
  for (auto& step : schedule.steps)
    std::sort(step.begin(), step.end(), [](const Transfer& a, const Transfer& c) {
      return std::tie(a.sender, a.receiver) < std::tie(c.sender, c.receiver);
    });

  auto violations = validate_schedule(schedule);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    std::ostringstream msg;
    msg << "schedule invalid: " << to_string(v.kind) << " at step " << v.step << ", node "
        << v.node << ", block " << v.block;
    throw ScheduleInvalid(msg.str(), v.step, v.node, v.block);
  }
  return schedule;
}

std::vector<Violation> validate_schedule(const MulticastSchedule& schedule) {
  std::vector<Violation> out;
  const int b = schedule.block_count;
  std::map<NodeId, std::vector<char>> held;
  std::map<NodeId, int> group_of;
  for (const SubGroup& g : schedule.subgroups) {
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      held[g.members[i]] = std::vector<char>(b, i == 0 ? 1 : 0);
      group_of[g.members[i]] = g.group_id;
    }
  }

  std::map<int, int> last_step_of_group;
  for (std::size_t s = 0; s < schedule.steps.size(); ++s) {
    const int step = static_cast<int>(s);
    std::map<NodeId, int> sends, recvs;
    std::vector<std::pair<NodeId, BlockId>> receipts;
    for (const Transfer& t : schedule.steps[s]) {
      if (!held.count(t.sender) || !held.count(t.receiver)) {
        out.push_back({ViolationKind::kUnknownNode, step,
                       held.count(t.sender) ? t.receiver : t.sender, t.block});
        continue;
      }
      if (t.block < 0 || t.block >= b) {
        out.push_back({ViolationKind::kBlockRange, step, t.sender, t.block});
        continue;
      }
      if (t.sender == t.receiver) {
        out.push_back({ViolationKind::kSelfSend, step, t.sender, t.block});
        continue;
      }
      if (++sends[t.sender] == schedule.max_sender_degree + 1)
        out.push_back({ViolationKind::kSendDegree, step, t.sender, t.block});
      if (++recvs[t.receiver] == 2)
        out.push_back({ViolationKind::kReceiveDegree, step, t.receiver, t.block});
      if (!held[t.sender][t.block])
        out.push_back({ViolationKind::kCausality, step, t.sender, t.block});
      receipts.emplace_back(t.receiver, t.block);
      auto& last = last_step_of_group[group_of[t.receiver]];
      last = std::max(last, step);
    }
    for (auto [node, block] : receipts) held[node][block] = 1;
  }

  for (const auto& [node, blocks] : held)
    for (int blk = 0; blk < b; ++blk)
      if (!blocks[blk]) {
        out.push_back({ViolationKind::kIncomplete, schedule.step_count(), node, blk});
        break;
      }

  if (schedule.kind == ScheduleKind::kBinomial) {
    for (const SubGroup& g : schedule.subgroups) {
      const int L = static_cast<int>(g.members.size());
      if (L < 2 || !is_power_of_two(L)) continue;
      auto it = last_step_of_group.find(g.group_id);
      const int used = it == last_step_of_group.end() ? 0 : it->second + 1;
      if (used > b + ceil_log2(L) - 1)
        out.push_back({ViolationKind::kStepBound, used - 1, g.source, -1});
    }
  }
  return out;
}

std::map<NodeId, std::vector<int>> arrival_steps(const MulticastSchedule& schedule) {
  std::map<NodeId, std::vector<int>> out;
  for (const SubGroup& g : schedule.subgroups)
    for (std::size_t i = 0; i < g.members.size(); ++i)
      out[g.members[i]] = std::vector<int>(schedule.block_count, i == 0 ? -1 : -2);
  for (const auto& step : schedule.steps)
    for (const Transfer& t : step) {
      auto& slot = out[t.receiver];
      if (slot.empty()) slot.assign(schedule.block_count, -2);
      if (slot[t.block] == -2) slot[t.block] = t.step;
    }
  return out;
}

ScheduleSummary summarize(const MulticastSchedule& schedule) {
  ScheduleSummary summary;
  summary.step_count = schedule.step_count();
  for (const SubGroup& g : schedule.subgroups)
    for (std::size_t i = 1; i < g.members.size(); ++i) summary.completion_step[g.members[i]] = -1;
  for (const auto& step : schedule.steps)
    for (const Transfer& t : step)
      summary.completion_step[t.receiver] = std::max(summary.completion_step[t.receiver], t.step);
  return summary;
}

std::string schedule_to_csv(const MulticastSchedule& schedule) {
  std::vector<Transfer> all;
  for (const auto& step : schedule.steps) all.insert(all.end(), step.begin(), step.end());
  std::sort(all.begin(), all.end(), [](const Transfer& a, const Transfer& c) {
    return std::tie(a.step, a.sender, a.receiver) < std::tie(c.step, c.sender, c.receiver);
  });
  std::ostringstream os;
  os << "step,sender,receiver,block_id\n";
  for (const Transfer& t : all)
    os << t.step << ',' << t.sender << ',' << t.receiver << ',' << t.block << '\n';
  return os.str();
}

std::string summary_to_text(const ScheduleSummary& summary) {
  std::ostringstream os;
  os << "step_count=" << summary.step_count << '\n';
  os << "node,completion_step\n";
  for (const auto& [node, step] : summary.completion_step) os << node << ',' << step << '\n';
  return os.str();
}

namespace {

int survey_one(int L, int b) {
  SubGroup g;
  for (int i = 0; i < L; ++i) g.members.push_back(i);
  for (int i = 0; i < b; ++i) g.transfer_order.push_back(i);
  return static_cast<int>(build_binomial_schedule(g, b).size());
}

}  // namespace

std::vector<int> survey_step_counts_serial(std::span<const int> group_sizes,
                                           std::span<const int> block_counts) {
  std::vector<int> out(group_sizes.size() * block_counts.size());
  for (std::size_t i = 0; i < group_sizes.size(); ++i)
    for (std::size_t j = 0; j < block_counts.size(); ++j)
      out[i * block_counts.size() + j] = survey_one(group_sizes[i], block_counts[j]);
  return out;
}

std::vector<int> survey_step_counts_parallel(std::span<const int> group_sizes,
                                             std::span<const int> block_counts) {
  const long long cols = static_cast<long long>(block_counts.size());
  const long long total = static_cast<long long>(group_sizes.size()) * cols;
  std::vector<int> out(total);
#pragma omp parallel for schedule(dynamic)
  for (long long idx = 0; idx < total; ++idx)
    out[idx] = survey_one(group_sizes[idx / cols], block_counts[idx % cols]);
  return out;
}

}  // namespace scalecast
