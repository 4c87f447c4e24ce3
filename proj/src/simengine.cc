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

#include "scalecast/simengine.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>

#include "scalecast/pipeline.h"

namespace scalecast {

void ClusterSpec::validate() const {
  if (node_count < 1) throw InvalidArgument("cluster.node_count must be >= 1");
  if (gpus_per_node < 1) throw InvalidArgument("cluster.gpus_per_node must be >= 1");
  if (gpu_mem_bytes == 0) throw InvalidArgument("cluster.gpu_mem_bytes must be > 0");
  for (auto [name, v] : {std::pair{"nic_Bps", nic_Bps}, std::pair{"nvlink_Bps", nvlink_Bps},
                         std::pair{"h2d_Bps", h2d_Bps}, std::pair{"ssd_Bps", ssd_Bps}})
    if (!(v > 0)) throw InvalidArgument(std::string("cluster.") + name + " must be > 0");
  if (step_fixed_overhead_s < 0)
    throw InvalidArgument("cluster.step_fixed_overhead_s must be >= 0");
  if (baseline_group_init_s < 0)
    throw InvalidArgument("cluster.baseline_group_init_s must be >= 0");
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kLambdaScale: return "lambda_scale";
    case Strategy::kBinaryTree: return "binary_tree";
    case Strategy::kBroadcastGroups: return "broadcast_groups";
    case Strategy::kSsdOnly: return "ssd_only";
    case Strategy::kIdeal: return "ideal";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& s) {
  for (Strategy x : {Strategy::kLambdaScale, Strategy::kBinaryTree, Strategy::kBroadcastGroups,
                     Strategy::kSsdOnly, Strategy::kIdeal})
    if (s == to_string(x)) return x;
  throw InvalidArgument("unknown strategy '" + s + "'");
}

double transfer_step_time(const MulticastSchedule& schedule, const BlockPlan& plan,
                          const ClusterSpec& cluster) {
  int degree = 1;
  for (const auto& step : schedule.steps) {
    std::map<NodeId, int> sends;
    for (const Transfer& t : step) degree = std::max(degree, ++sends[t.sender]);
  }
  return cluster.step_fixed_overhead_s + degree * plan.nominal_block_bytes() / cluster.nic_Bps;
}

MulticastSchedule baseline_schedule(Strategy strategy, std::span<const NodeId> nodes,
                                    const BlockPlan& plan) {
  if (nodes.empty()) throw InvalidArgument("baseline_schedule: no nodes");
  const int n = static_cast<int>(nodes.size());
  const int b = plan.block_count;
  MulticastSchedule s;
  s.block_count = b;
  SubGroup g;
  g.source = nodes[0];
  g.members.assign(nodes.begin(), nodes.end());
  for (int i = 0; i < b; ++i) g.transfer_order.push_back(i);
  s.subgroups.push_back(g);

  switch (strategy) {
    case Strategy::kBinaryTree: {
      s.kind = ScheduleKind::kBinaryTree;
      s.max_sender_degree = 2;
      if (n == 1) break;
      auto depth = [](int i) { return ceil_log2(i + 2) - 1; };
      const int steps = b + depth(n - 1) - 1;
      s.steps.resize(steps);
      for (int st = 0; st < steps; ++st) {
        for (int i = 1; i < n; ++i) {
          const int blk = st - depth(i) + 1;
          if (blk >= 0 && blk < b) s.steps[st].push_back({st, nodes[(i - 1) / 2], nodes[i], blk});
        }
        std::sort(s.steps[st].begin(), s.steps[st].end(), [](const Transfer& a, const Transfer& c) {
          return std::tie(a.sender, a.receiver) < std::tie(c.sender, c.receiver);
        });
      }
      break;
    }
    case Strategy::kBroadcastGroups: {
      s.kind = ScheduleKind::kBroadcast;
      if (n == 1) break;
      const int d = ceil_log2(n);
      for (int blk = 0; blk < b; ++blk)
        for (int r = 0; r < d; ++r) {
          std::vector<Transfer> step;
          const int st = static_cast<int>(s.steps.size());
          for (int i = 0; i < (1 << r) && i + (1 << r) < n; ++i)
            step.push_back({st, nodes[i], nodes[i + (1 << r)], blk});
          s.steps.push_back(std::move(step));
        }
      break;
    }
    case Strategy::kSsdOnly:
    case Strategy::kIdeal:
      s.kind = ScheduleKind::kNone;
      break;
    case Strategy::kLambdaScale:
      throw InvalidArgument("baseline_schedule: lambda_scale is not a baseline");
  }
  return s;
}

ScaleDecision autoscale(const AutoscalePolicy& policy, int queue_depth, int active_replicas,
                        double idle_s) {
  ScaleDecision d;
  const int cap = std::max(1, policy.capacity_per_replica);
  if (queue_depth > 0 &&
      (active_replicas == 0 ||
       static_cast<double>(queue_depth) / active_replicas > policy.threshold_hi)) {
    const int excess = queue_depth - active_replicas * cap;
    d.scale_out = std::max(1, (excess + cap - 1) / cap);
    if (policy.max_replicas > 0)
      d.scale_out = std::max(0, std::min(d.scale_out, policy.max_replicas - active_replicas));
  }
  if (queue_depth == 0 && idle_s >= policy.keep_alive_s && active_replicas > policy.min_replicas)
    d.scale_in = 1;
  return d;
}

int effective_block_count(const ModelSpec& model, const ClusterSpec& cluster,
                          const SimOptions& options) {
  if (options.b > 0) return std::min(options.b, model.layer_count);
  return select_block_count(model, cluster.node_count, cluster.step_fixed_overhead_s,
                            cluster.nic_Bps, options.elbow_threshold);
}

namespace {

std::string join(const std::vector<NodeId>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

struct Req {
  long long id = 0;
  int model = 0;
  double arrival = 0;
  int prompt = 1;
  int output = 1;
  int emitted = 0;
};

struct Batch {
  std::vector<int> reqs;
  double extra_s = 0.0;  // KV recomputation charged on the next pass
};

struct StageRt {
  NodeId node = 0;
  int slot = 0;
  int blocks = 1;
  std::deque<int> queue;
  int current = -1;
};

struct Unit {
  int model = 0;
  bool pipeline = false;
  std::vector<StageRt> stages;
  int capacity = 1;
  bool active = false;
  bool admitting = false;
  bool switching = false;
  bool switch_scheduled = false;
  bool dead = false;
  int inflight = 0;
  std::vector<int> detached;

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    for (const auto& s : stages) out.push_back(s.node);
    return out;
  }
};

struct NodeRt {
  int model = -1;
  std::vector<char> loaded;         // per replica slot
  std::vector<int> pipeline_unit;   // per slot, -1 if none
  std::vector<int> local_unit;      // per slot, -1 if none
  double idle_since = -1.0;
  long idle_token = 0;
  double pinned_until = -1.0;
  std::vector<std::pair<int, double>> memory;  // host cache: (model, last use)
};

struct Milestone {
  double time = 0;
  bool activate = false;  // else: node slot finished loading
  int target = 0;         // unit id or node
  int slot = 0;
};

struct ScaleOp {
  int model = 0;
  double t0 = 0;
  double net_start = 0;
  double step_time = 0;
  int steps = 0;
  std::vector<int> transfers_per_step;
  std::vector<Milestone> milestones;
};

struct Ev {
  double t;
  int rank;
  long long seq;
  EventKind kind;
  int a, b;

  bool operator>(const Ev& o) const {
    if (t != o.t) return t > o.t;
    if (rank != o.rank) return rank > o.rank;
    return seq > o.seq;
  }
};

class Sim {
 public:
  Sim(const ClusterSpec& c, const std::vector<ModelSpec>& models,
      const std::vector<TraceRecord>& trace, const AutoscalePolicy& policy,
      const SimOptions& opts)
      : c_(c), models_(models), policy_(policy), opts_(opts) {
    c_.validate();
    if (opts_.k < 1) throw InvalidArgument("k must be >= 1");
    if (opts_.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (opts_.activation_bytes < 0) throw InvalidArgument("activation_bytes must be >= 0");
    for (std::size_t i = 0; i < models_.size(); ++i) {
      const ModelSpec& m = models_[i];
      validate_model(m);
      if (m.model_id.find_first_of(",;= \t") != std::string::npos)
        throw InputValidation("model id '" + m.model_id + "' contains a reserved character");
      if (index_.count(m.model_id)) throw InputValidation("duplicate model id " + m.model_id);
      index_[m.model_id] = static_cast<int>(i);
      select_multi_gpu_strategy(m, c_.gpus_per_node, 0);  // throws if it cannot fit
      const int b = effective_block_count(m, c_, opts_);
      plans_.push_back(partition_blocks(m, b));
      pack_layout(plans_.back(), static_cast<Bytes>(opts_.activation_bytes),
                  c_.gpu_mem_bytes * static_cast<Bytes>(m.gpus_per_replica));
    }
    double prev = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const TraceRecord& r = trace[i];
      auto it = index_.find(r.model_id);
      if (it == index_.end())
        throw InputValidation("trace row " + std::to_string(i + 1) + " names unknown model '" +
                              r.model_id + "'");
      if (r.arrival_s < prev)
        throw InputValidation("trace row " + std::to_string(i + 1) + " is out of order");
      if (r.prompt_tokens < 1 || r.output_tokens < 1)
        throw InputValidation("trace row " + std::to_string(i + 1) + " has a zero token count");
      prev = r.arrival_s;
      reqs_.push_back({static_cast<long long>(i), it->second, r.arrival_s, r.prompt_tokens,
                       r.output_tokens, 0});
    }
    nodes_.resize(c_.node_count);
    queues_.resize(models_.size());
    eval_pending_.assign(models_.size(), 0);
  }

  SimResult run() {
    place_initial();
    for (std::size_t i = 0; i < reqs_.size(); ++i)
      push(reqs_[i].arrival, EventKind::kRequestArrival, static_cast<int>(i), 0);

    double now = 0.0;
    while (!finished() && !heap_.empty()) {
      Ev e = heap_.top();
      if (e.t > opts_.horizon_s) {
        now = opts_.horizon_s;
        break;
      }
      heap_.pop();
      now_ = now = e.t;
      handle(e);
    }
    if (!finished() && heap_.empty()) now = now_;
    log(now, EventKind::kSimEnd,
        {{"requests", std::to_string(reqs_.size())}, {"completed", std::to_string(completed_)}});

    SimResult res;
    res.metrics = aggregate(log_, to_string(opts_.strategy), opts_.throughput_window_s);
    res.first_multicast_s = first_multicast_s_;
    res.log = std::move(log_);
    return res;
  }

 private:
  int slots_for(int model) const {
    return std::max(1, c_.gpus_per_node / models_[model].gpus_per_replica);
  }

  bool finished() const { return arrived_ == reqs_.size() && completed_ == reqs_.size(); }

  void push(double t, EventKind kind, int a, int b) {
    heap_.push({t, static_cast<int>(kind), seq_++, kind, a, b});
  }

  void log(double t, EventKind kind, std::vector<std::pair<std::string, std::string>> fields) {
    log_.push_back({t, kind, std::move(fields)});
  }

  int allocated_gpus() const {
    int n = 0;
    for (const NodeRt& nd : nodes_)
      if (nd.model >= 0) ++n;
    return n * c_.gpus_per_node;
  }

  int replicas(int model) const {
    int n = 0;
    for (const NodeRt& nd : nodes_)
      if (nd.model == model) ++n;
    return n;
  }

  void assign_node(NodeId n, int model) {
    NodeRt& nd = nodes_[n];
    const int slots = slots_for(model);
    nd.model = model;
    nd.loaded.assign(slots, 0);
    nd.pipeline_unit.assign(slots, -1);
    nd.local_unit.assign(slots, -1);
    nd.idle_since = -1;
    ++nd.idle_token;
  }

  void place_initial() {
    std::vector<NodeId> placed;
    for (const Placement& p : opts_.initial_gpu) {
      int m = model_index(p.model_id);
      if (p.node < 0 || p.node >= c_.node_count)
        throw InputValidation("initial GPU placement on unknown node " + std::to_string(p.node));
      if (nodes_[p.node].model >= 0)
        throw InputValidation("node " + std::to_string(p.node) + " has two initial GPU models");
      assign_node(p.node, m);
      for (int s = 0; s < slots_for(m); ++s) {
        nodes_[p.node].loaded[s] = 1;
        make_local(p.node, s, m);
      }
      placed.push_back(p.node);
    }
    for (const Placement& p : opts_.initial_memory) {
      int m = model_index(p.model_id);
      if (p.node < 0 || p.node >= c_.node_count)
        throw InputValidation("initial memory placement on unknown node " +
                              std::to_string(p.node));
      cache_in_memory(p.node, m, 0.0);
    }
    log(0.0, EventKind::kScaleOut,
        {{"model", "*"}, {"nodes", join(placed)}, {"initial", "1"},
         {"allocated_gpus", std::to_string(allocated_gpus())}});
    for (NodeId n : placed) refresh_idle(n);
  }

  int model_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InputValidation("unknown model '" + id + "'");
    return it->second;
  }

  bool in_memory(NodeId n, int model) const {
    for (auto [m, t] : nodes_[n].memory)
      if (m == model) return true;
    return false;
  }

  void cache_in_memory(NodeId n, int model, double t) {
    auto& mem = nodes_[n].memory;
    for (auto& e : mem)
      if (e.first == model) {
        e.second = t;
        return;
      }
    mem.emplace_back(model, t);
    // LRU by bytes.
    auto used = [&]() {
      Bytes u = 0;
      for (auto [m, _] : mem) u += models_[m].size_bytes;
      return u;
    };
    while (used() > c_.host_mem_bytes && mem.size() > 1) {
      auto victim = std::min_element(mem.begin(), mem.end() - 1, [](const auto& a, const auto& b) {
        return a.second < b.second;
      });
      log(now_, EventKind::kEviction,
          {{"node", std::to_string(n)}, {"model", models_[victim->first].model_id},
           {"tier", "MEMORY"}});
      mem.erase(victim);
    }
  }

  int make_local(NodeId n, int slot, int model) {
    Unit u;
    u.model = model;
    u.pipeline = false;
    u.stages.push_back({n, slot, plans_[model].block_count, {}, -1});
    u.capacity = 1;
    u.active = u.admitting = true;
    units_.push_back(std::move(u));
    const int id = static_cast<int>(units_.size()) - 1;
    nodes_[n].local_unit[slot] = id;
    return id;
  }

  void handle(const Ev& e) {
    switch (e.kind) {
      case EventKind::kRequestArrival: on_arrival(e.a); break;
      case EventKind::kScaleOut: on_scale_out(e.a); break;
      case EventKind::kTransferStepDone: on_transfer_step(e.a, e.b); break;
      case EventKind::kLoadChunkDone: on_milestone(e.a, e.b); break;
      case EventKind::kStageTickDone: on_stage_done(e.a, e.b); break;
      case EventKind::kModeSwitch: on_mode_switch(e.a); break;
      case EventKind::kScaleIn: on_scale_in(e.a, e.b); break;
      default: break;
    }
  }

  void on_arrival(int ri) {
    const Req& r = reqs_[ri];
    ++arrived_;
    log(now_, EventKind::kRequestArrival,
        {{"request", std::to_string(r.id)}, {"model", models_[r.model].model_id},
         {"prompt", std::to_string(r.prompt)}, {"output", std::to_string(r.output)}});
    queues_[r.model].push_back(ri);
    dispatch(r.model);
    request_eval(r.model);
  }

  void request_eval(int model) {
    if (eval_pending_[model]) return;
    eval_pending_[model] = 1;
    double t = now_;
    if (policy_.eval_interval_s > 0)
      t = std::ceil(now_ / policy_.eval_interval_s) * policy_.eval_interval_s;
    push(t, EventKind::kScaleOut, model, 0);
  }

  void on_scale_out(int model) {
    eval_pending_[model] = 0;
    const int depth = static_cast<int>(queues_[model].size());
    ScaleDecision d = autoscale(policy_, depth, replicas(model));
    if (d.scale_out <= 0) return;
    std::vector<NodeId> free;
    for (NodeId n = 0; n < c_.node_count; ++n)
      if (nodes_[n].model < 0) free.push_back(n);
    std::stable_sort(free.begin(), free.end(), [&](NodeId a, NodeId b) {
      return in_memory(a, model) > in_memory(b, model);
    });
    if (free.size() > static_cast<std::size_t>(d.scale_out)) free.resize(d.scale_out);
    if (free.empty()) return;
    std::sort(free.begin(), free.end());
    start_op(model, free);
  }

  TierSnapshot snapshot(int model) const {
    TierSnapshot snap;
    const int b = plans_[model].block_count;
    const std::string& id = models_[model].model_id;
    for (NodeId n = 0; n < c_.node_count; ++n) {
      const NodeRt& nd = nodes_[n];
      if (nd.model == model && !nd.loaded.empty() && nd.loaded[0])
        snap.push_back({n, id, Tier::kGpu, b, now_, models_[model].size_bytes, false});
      if (in_memory(n, model))
        snap.push_back({n, id, Tier::kMemory, b, now_, models_[model].size_bytes, false});
      if (opts_.ssd_everywhere)
        snap.push_back({n, id, Tier::kSsd, b, now_, models_[model].size_bytes, false});
    }
    return snap;
  }

  // Adds "node slot loaded" milestones for every replica slot of a node.
  void node_loaded_at(ScaleOp& op, NodeId n, double t) {
    const double lag = plans_[op.model].nominal_block_bytes() / c_.nvlink_Bps;
    for (int s = 0; s < slots_for(op.model); ++s)
      op.milestones.push_back({t + (s ? lag : 0.0), false, n, s});
  }

  int make_pipeline_unit(int model, const ExecutionPipeline& p, int slot) {
    Unit u;
    u.model = model;
    u.pipeline = true;
    for (const Stage& s : p.stages) {
      u.stages.push_back({s.node, slot, s.block_span(), {}, -1});
      nodes_[s.node].pipeline_unit[slot] = static_cast<int>(units_.size());
    }
    u.capacity = static_cast<int>(u.stages.size());
    units_.push_back(std::move(u));
    return static_cast<int>(units_.size()) - 1;
  }

  void add_pipelines(ScaleOp& op, const std::vector<ExecutionPipeline>& ps,
                     const std::vector<double>& activation) {
    const double lag = plans_[op.model].nominal_block_bytes() / c_.nvlink_Bps;
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (int s = 0; s < slots_for(op.model); ++s) {
        int u = make_pipeline_unit(op.model, ps[i], s);
        op.milestones.push_back({activation[i] + (s ? lag : 0.0), true, u, s});
      }
  }

  void start_op(int model, const std::vector<NodeId>& demand) {
    const ModelSpec& m = models_[model];
    const BlockPlan& plan = plans_[model];
    const int b = plan.block_count;
    for (NodeId n : demand) assign_node(n, model);
    log(now_, EventKind::kScaleOut,
        {{"model", m.model_id}, {"nodes", join(demand)}, {"strategy", to_string(opts_.strategy)},
         {"allocated_gpus", std::to_string(allocated_gpus())}});

    const bool lambda = opts_.strategy == Strategy::kLambdaScale;
    StartupPlan sp = startup_plan(m, demand, snapshot(model), lambda ? opts_.k : 1, b);
    ScaleOp op;
    op.model = model;
    op.t0 = now_;
    const double size = static_cast<double>(m.size_bytes);

    for (NodeId n : sp.sources)
      if (in_memory(n, model)) cache_in_memory(n, model, now_);

    if (opts_.strategy == Strategy::kIdeal) {
      for (NodeId n : demand) node_loaded_at(op, n, now_);
    } else if (opts_.strategy == Strategy::kSsdOnly) {
      for (NodeId n : demand) {
        bool warm = in_memory(n, model);
        if (warm) cache_in_memory(n, model, now_);
        node_loaded_at(op, n, now_ + size / (warm ? c_.h2d_Bps : c_.ssd_Bps));
      }
    } else {
      for (NodeId n : sp.warm) cache_in_memory(n, model, now_);
      if (lambda && sp.warm.size() >= 2) {
        // Warm nodes load in k-way order and serve as one pipeline meanwhile.
        const double tb = plan.nominal_block_bytes() / c_.h2d_Bps;
        PipelineDraft d;
        d.nodes = sp.warm;
        for (std::size_t i = 0; i < sp.warm.size(); ++i) d.groups.push_back(static_cast<int>(i));
        ExecutionPipeline p = assign_blocks_to_stages(d, sp.warm_orders, b);
        int last = 0;
        for (const Stage& st : p.stages) {
          const auto& order = sp.warm_orders[st.group_id];
          for (BlockId blk = st.block_lo; blk <= st.block_hi; ++blk) {
            int pos = static_cast<int>(std::find(order.begin(), order.end(), blk) - order.begin());
            last = std::max(last, pos + 1);
          }
        }
        add_pipelines(op, {p}, {now_ + last * tb});
      }
      for (NodeId n : sp.warm) node_loaded_at(op, n, now_ + size / c_.h2d_Bps);

      std::vector<NodeId> cold = sp.cold;
      std::vector<NodeId> sources = sp.sources;
      double start = now_;
      if (sp.source_tiers.front() == Tier::kSsd) {
        // No faster copy anywhere: one node reads the model from SSD first.
        NodeId src = sources.front();
        start = now_ + size / c_.ssd_Bps;
        if (nodes_[src].model == model) {
          std::erase(cold, src);
          node_loaded_at(op, src, start);
        }
      }
      if (opts_.strategy == Strategy::kBroadcastGroups) start += c_.baseline_group_init_s;
      op.net_start = start;
      if (!cold.empty()) {
        MulticastSchedule sched;
        if (lambda) {
          std::vector<NodeId> all = sources;
          all.insert(all.end(), cold.begin(), cold.end());
          auto groups = partition_subgroups(all, sources);
          auto orders = k_way_orders(b, static_cast<int>(sources.size()));
          for (std::size_t i = 0; i < groups.size(); ++i) groups[i].transfer_order = orders[i];
          sched = compose_schedule(groups, plan);
        } else {
          std::vector<NodeId> all{sources.front()};
          all.insert(all.end(), cold.begin(), cold.end());
          sched = baseline_schedule(opts_.strategy, all, plan);
        }
        const double st = transfer_step_time(sched, plan, c_);
        sched.step_time_model = {c_.step_fixed_overhead_s, c_.nic_Bps};
        op.step_time = st;
        op.steps = sched.step_count();
        for (const auto& step : sched.steps)
          op.transfers_per_step.push_back(static_cast<int>(step.size()));
        if (lambda) {
          auto ps = build_pipelines(sched);
          std::vector<double> act;
          for (const auto& p : ps) act.push_back(start + (p.activation_step + 1) * st);
          add_pipelines(op, ps, act);
        }
        ScheduleSummary sum = summarize(sched);
        for (NodeId n : cold) node_loaded_at(op, n, start + (sum.completion_step.at(n) + 1) * st);
        if (first_multicast_s_ == 0.0) first_multicast_s_ = start + op.steps * st - now_;
      }
    }

    double end = now_;
    for (const Milestone& ms : op.milestones) end = std::max(end, ms.time);
    for (NodeId n : sp.sources) nodes_[n].pinned_until = std::max(nodes_[n].pinned_until, end);

    std::stable_sort(op.milestones.begin(), op.milestones.end(),
                     [](const Milestone& a, const Milestone& c) {
                       if (a.time != c.time) return a.time < c.time;
                       return a.activate > c.activate;
                     });
    ops_.push_back(std::move(op));
    const int oi = static_cast<int>(ops_.size()) - 1;
    const ScaleOp& o = ops_.back();
    for (int s = 0; s < o.steps; ++s)
      push(o.net_start + (s + 1) * o.step_time, EventKind::kTransferStepDone, oi, s);
    for (std::size_t i = 0; i < o.milestones.size(); ++i)
      push(o.milestones[i].time, EventKind::kLoadChunkDone, oi, static_cast<int>(i));
  }

  void on_transfer_step(int oi, int step) {
    log(now_, EventKind::kTransferStepDone,
        {{"op", std::to_string(oi)}, {"step", std::to_string(step)},
         {"transfers", std::to_string(ops_[oi].transfers_per_step[step])}});
  }

  void on_milestone(int oi, int mi) {
    const ScaleOp& op = ops_[oi];
    const Milestone& ms = op.milestones[mi];
    if (ms.activate) {
      Unit& u = units_[ms.target];
      if (u.dead) return;
      u.active = u.admitting = true;
      log(now_, EventKind::kLoadChunkDone,
          {{"op", std::to_string(oi)}, {"what", "activate"}, {"unit", std::to_string(ms.target)},
           {"nodes", join(u.nodes())}});
      dispatch(u.model);
      return;
    }
    NodeRt& nd = nodes_[ms.target];
    if (nd.model != op.model) return;
    nd.loaded[ms.slot] = 1;
    log(now_, EventKind::kLoadChunkDone,
        {{"op", std::to_string(oi)}, {"what", "loaded"}, {"node", std::to_string(ms.target)},
         {"slot", std::to_string(ms.slot)}});
    const int pu = nd.pipeline_unit[ms.slot];
    if (pu >= 0 && !units_[pu].dead) {
      Unit& u = units_[pu];
      bool all = true;
      for (const StageRt& s : u.stages) all = all && nodes_[s.node].loaded[ms.slot];
      if (all && !u.switch_scheduled) {
        u.switch_scheduled = true;
        push(now_, EventKind::kModeSwitch, pu, 0);
      }
    } else if (nd.local_unit[ms.slot] < 0) {
      make_local(ms.target, ms.slot, op.model);
      dispatch(op.model);
    }
    refresh_idle(ms.target);
  }

  void on_mode_switch(int ui) {
    Unit& u = units_[ui];
    log(now_, EventKind::kModeSwitch,
        {{"unit", std::to_string(ui)}, {"nodes", join(u.nodes())},
         {"inflight", std::to_string(u.inflight)}});
    u.admitting = false;
    u.switching = true;
    // Batches waiting for stage 0 sit at a token boundary.
    auto& q = u.stages[0].queue;
    while (!q.empty()) {
      detach(u, q.front());
      q.pop_front();
    }
    if (u.inflight == 0) finish_switch(ui);
  }

  void detach(Unit& u, int bi) {
    for (int r : batches_[bi].reqs) u.detached.push_back(r);
    batches_[bi].reqs.clear();
    --u.inflight;
  }

  void finish_switch(int ui) {
    // make_local grows units_, so work from copies.
    units_[ui].dead = true;
    const int model = units_[ui].model;
    const std::vector<StageRt> stages = units_[ui].stages;
    const int slot = stages[0].slot;
    ExecutionPipeline p;
    p.pipeline_id = ui;
    for (const StageRt& s : stages) {
      p.stages.push_back({s.node, s.slot, 0, 0, 0});
      nodes_[s.node].pipeline_unit[slot] = -1;
      if (nodes_[s.node].local_unit[slot] < 0) make_local(s.node, slot, model);
    }
    std::vector<std::pair<int, int>> incomplete;
    for (int r : units_[ui].detached) incomplete.emplace_back(r, reqs_[r].emitted);
    ModeSwitchPlan plan =
        plan_mode_switch(p, incomplete, models_[model].prefill_ms_per_token);

    std::map<NodeId, std::vector<const SwitchAssignment*>> per_node;
    for (const auto& a : plan.assignments) per_node[a.node].push_back(&a);
    for (auto& [node, list] : per_node) {
      const int lu = nodes_[node].local_unit[slot];
      for (std::size_t i = 0; i < list.size(); i += opts_.batch_size) {
        Batch bt;
        for (std::size_t j = i; j < std::min(list.size(), i + opts_.batch_size); ++j) {
          bt.reqs.push_back(list[j]->request_id);
          bt.extra_s += list[j]->recompute_cost_s;
        }
        batches_.push_back(std::move(bt));
        ++units_[lu].inflight;
        units_[lu].stages[0].queue.push_back(static_cast<int>(batches_.size()) - 1);
        try_start(lu, 0);
      }
    }
    dispatch(model);
    for (const StageRt& s : stages) refresh_idle(s.node);
  }

  double stage_duration(const Unit& u, int stage, const Batch& bt) const {
    const ModelSpec& m = models_[u.model];
    const int b = plans_[u.model].block_count;
    const StageRt& st = u.stages[stage];
    bool prefill = false;
    int prompt = 0;
    for (int r : bt.reqs) {
      prefill = prefill || reqs_[r].emitted == 0;
      prompt = std::max(prompt, reqs_[r].prompt);
    }
    double ms = prefill ? prompt * m.prefill_ms_per_token * st.blocks / b
                        : m.per_block_compute_ms * st.blocks;
    double t = ms / 1000.0;
    if (stage == 0) t += bt.extra_s;
    if (stage + 1 < static_cast<int>(u.stages.size())) t += opts_.activation_bytes / c_.nic_Bps;
    return t;
  }

  void try_start(int ui, int stage) {
    Unit& u = units_[ui];
    StageRt& st = u.stages[stage];
    if (st.current >= 0 || st.queue.empty()) return;
    st.current = st.queue.front();
    st.queue.pop_front();
    const double d = stage_duration(u, stage, batches_[st.current]);
    if (stage == 0) batches_[st.current].extra_s = 0.0;
    push(now_ + d, EventKind::kStageTickDone, ui, stage);
  }

  void on_stage_done(int ui, int stage) {
    Unit& u = units_[ui];
    StageRt& st = u.stages[stage];
    const int bi = st.current;
    st.current = -1;
    const int last = static_cast<int>(u.stages.size()) - 1;
    if (stage < last) {
      u.stages[stage + 1].queue.push_back(bi);
      try_start(ui, stage + 1);
      try_start(ui, stage);
      return;
    }

    const std::string nodes = join(u.nodes());
    Batch& bt = batches_[bi];
    std::vector<int> still;
    for (int r : bt.reqs) {
      Req& q = reqs_[r];
      ++q.emitted;
      log(now_, EventKind::kTokenEmitted,
          {{"request", std::to_string(q.id)}, {"token", std::to_string(q.emitted)},
           {"unit", std::to_string(ui)}, {"nodes", nodes}});
      if (q.emitted >= q.output) {
        log(now_, EventKind::kRequestDone, {{"request", std::to_string(q.id)}});
        ++completed_;
      } else {
        still.push_back(r);
      }
    }
    bt.reqs = std::move(still);
    if (bt.reqs.empty()) {
      --u.inflight;
    } else if (u.switching) {
      detach(u, bi);
    } else {
      u.stages[0].queue.push_back(bi);
    }
    try_start(ui, stage);
    try_start(ui, 0);
    if (u.switching && u.inflight == 0 && !u.dead) {
      finish_switch(ui);
      return;
    }
    dispatch(u.model);
    for (const StageRt& s : u.stages) refresh_idle(s.node);
  }

  void dispatch(int model) {
    auto& q = queues_[model];
    while (!q.empty()) {
      int best = -1;
      double best_load = 0;
      for (std::size_t i = 0; i < units_.size(); ++i) {
        const Unit& u = units_[i];
        if (u.dead || !u.active || !u.admitting || u.model != model || u.inflight >= u.capacity)
          continue;
        double load = static_cast<double>(u.inflight) / u.capacity + (u.pipeline ? 1e-9 : 0.0);
        if (best < 0 || load < best_load) {
          best = static_cast<int>(i);
          best_load = load;
        }
      }
      if (best < 0) break;
      Batch bt;
      while (!q.empty() && static_cast<int>(bt.reqs.size()) < opts_.batch_size) {
        bt.reqs.push_back(q.front());
        q.pop_front();
      }
      batches_.push_back(std::move(bt));
      Unit& u = units_[best];
      ++u.inflight;
      u.stages[0].queue.push_back(static_cast<int>(batches_.size()) - 1);
      try_start(best, 0);
      for (const StageRt& s : u.stages) refresh_idle(s.node);
    }
    for (NodeId n = 0; n < c_.node_count; ++n)
      if (nodes_[n].model == model) refresh_idle(n);
  }

  bool is_idle(NodeId n) const {
    const NodeRt& nd = nodes_[n];
    if (nd.model < 0 || !queues_[nd.model].empty()) return false;
    for (std::size_t s = 0; s < nd.loaded.size(); ++s) {
      if (!nd.loaded[s] || nd.pipeline_unit[s] >= 0) return false;
      const int lu = nd.local_unit[s];
      if (lu >= 0 && units_[lu].inflight > 0) return false;
    }
    return true;
  }

  void refresh_idle(NodeId n) {
    NodeRt& nd = nodes_[n];
    const bool idle = is_idle(n);
    if (idle && nd.idle_since < 0) {
      nd.idle_since = now_;
      ++nd.idle_token;
      push(now_ + policy_.keep_alive_s, EventKind::kScaleIn, n, static_cast<int>(nd.idle_token));
    } else if (!idle && nd.idle_since >= 0) {
      nd.idle_since = -1;
      ++nd.idle_token;
    }
  }

  void on_scale_in(NodeId n, int token) {
    NodeRt& nd = nodes_[n];
    if (token != static_cast<int>(nd.idle_token) || nd.idle_since < 0) return;
    if (now_ < nd.pinned_until) {
      push(nd.pinned_until, EventKind::kScaleIn, n, token);
      return;
    }
    const int model = nd.model;
    ScaleDecision d = autoscale(policy_, static_cast<int>(queues_[model].size()),
                                replicas(model), now_ - nd.idle_since);
    if (d.scale_in <= 0) return;
    for (int lu : nd.local_unit)
      if (lu >= 0) units_[lu].dead = true;
    nd.model = -1;
    nd.loaded.clear();
    nd.pipeline_unit.clear();
    nd.local_unit.clear();
    nd.idle_since = -1;
    ++nd.idle_token;
    log(now_, EventKind::kScaleIn,
        {{"model", models_[model].model_id}, {"node", std::to_string(n)},
         {"allocated_gpus", std::to_string(allocated_gpus())}});
    if (opts_.write_back) cache_in_memory(n, model, now_);
    for (std::size_t m = 0; m < models_.size(); ++m)
      if (!queues_[m].empty()) request_eval(static_cast<int>(m));
  }

  ClusterSpec c_;
  std::vector<ModelSpec> models_;
  AutoscalePolicy policy_;
  SimOptions opts_;
  std::map<std::string, int> index_;
  std::vector<BlockPlan> plans_;
  std::vector<Req> reqs_;
  std::vector<NodeRt> nodes_;
  std::vector<std::deque<int>> queues_;
  std::vector<char> eval_pending_;
  std::vector<Unit> units_;
  std::vector<Batch> batches_;
  std::vector<ScaleOp> ops_;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> heap_;
  std::vector<LogRecord> log_;
  long long seq_ = 0;
  double now_ = 0.0;
  std::size_t arrived_ = 0;
  std::size_t completed_ = 0;
  double first_multicast_s_ = 0.0;
};

}  // namespace

SimResult run(const ClusterSpec& cluster, const std::vector<ModelSpec>& models,
              const std::vector<TraceRecord>& trace, const AutoscalePolicy& policy,
              const SimOptions& options) {
  Sim sim(cluster, models, trace, policy, options);
  return sim.run();
}

}  // namespace scalecast
