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

#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <sstream>

#include "oracles.h"

namespace scalecast {
namespace {

const ModelSpec k13b{"m13b", 26'000'000'000ULL, 40};

std::vector<TraceRecord> Burst(int n, double t = 0.0) {
  return std::vector<TraceRecord>(n, {t, "m13b", 128, 16});
}

SimOptions Opts(Strategy s, int b = 16) {
  SimOptions o;
  o.strategy = s;
  o.b = b;
  o.initial_gpu = {{0, "m13b"}};
  return o;
}

std::string LogText(const SimResult& r) {
  std::ostringstream os;
  write_log(os, r.log);
  return os.str();
}

TEST(StrategyTest, NamesRoundTrip) {
  for (Strategy s : {Strategy::kLambdaScale, Strategy::kBinaryTree, Strategy::kBroadcastGroups,
                     Strategy::kSsdOnly, Strategy::kIdeal})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("nccl"), InvalidArgument);
}

TEST(StepTimeTest, NominalBlockOverNic) {
  BlockPlan plan = partition_blocks(k13b, 16);
  ClusterSpec c;
  std::vector<NodeId> nodes(8);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::vector<NodeId> src{0};
  auto g = partition_subgroups(nodes, src);
  g[0].transfer_order = k_way_orders(16, 1)[0];
  MulticastSchedule s = compose_schedule(g, plan);
  EXPECT_NEAR(transfer_step_time(s, plan, c), 26e9 / 16 / 50e9, 1e-15);
  EXPECT_NEAR(s.step_count() * transfer_step_time(s, plan, c), 0.585, 1e-9);
  c.step_fixed_overhead_s = 0.004;
  EXPECT_NEAR(transfer_step_time(s, plan, c), 0.004 + 0.0325, 1e-15);
}

TEST(BaselineTest, SchedulesAreValid) {
  for (int n : {2, 3, 5, 8, 12}) {
    std::vector<NodeId> nodes(n);
    std::iota(nodes.begin(), nodes.end(), 10);
    for (int b : {1, 4, 16}) {
      BlockPlan plan = partition_blocks(k13b, b);
      for (Strategy s : {Strategy::kBinaryTree, Strategy::kBroadcastGroups}) {
        MulticastSchedule m = baseline_schedule(s, nodes, plan);
        EXPECT_TRUE(validate_schedule(m).empty()) << to_string(s) << " n=" << n << " b=" << b;
      }
      EXPECT_EQ(baseline_schedule(Strategy::kIdeal, nodes, plan).kind, ScheduleKind::kNone);
      EXPECT_EQ(baseline_schedule(Strategy::kSsdOnly, nodes, plan).kind, ScheduleKind::kNone);
      EXPECT_THROW(baseline_schedule(Strategy::kLambdaScale, nodes, plan), InvalidArgument);
    }
  }
}

TEST(BaselineTest, BinaryTreeNoFasterThanBroadcast) {
  std::vector<NodeId> nodes(8);
  std::iota(nodes.begin(), nodes.end(), 0);
  BlockPlan plan = partition_blocks(k13b, 16);
  ClusterSpec c;
  auto tree = baseline_schedule(Strategy::kBinaryTree, nodes, plan);
  auto bcast = baseline_schedule(Strategy::kBroadcastGroups, nodes, plan);
  EXPECT_LE(tree.step_count() * transfer_step_time(tree, plan, c),
            bcast.step_count() * transfer_step_time(bcast, plan, c));
}

TEST(BaselineTest, BinaryTreeDepthPlusBlocks) {
  std::vector<NodeId> nodes(8);
  std::iota(nodes.begin(), nodes.end(), 0);
  BlockPlan plan = partition_blocks(k13b, 4);
  auto tree = baseline_schedule(Strategy::kBinaryTree, nodes, plan);
  EXPECT_EQ(tree.step_count(), 3 + 4 - 1);
  ClusterSpec c;
  EXPECT_NEAR(transfer_step_time(tree, plan, c), 2 * 26e9 / 4 / 50e9, 1e-12);
}

TEST(AutoscaleTest, Examples) {
  AutoscalePolicy p;
  EXPECT_EQ(autoscale(p, 40, 2).scale_out, 8);
  EXPECT_EQ(autoscale(p, 4, 2).scale_out, 0);
  EXPECT_EQ(autoscale(p, 1, 0).scale_out, 1);
  EXPECT_EQ(autoscale(p, 0, 0).scale_out, 0);
  p.max_replicas = 5;
  EXPECT_EQ(autoscale(p, 40, 2).scale_out, 3);
  AutoscalePolicy q;
  q.min_replicas = 1;
  EXPECT_EQ(autoscale(q, 0, 2, 15.0).scale_in, 1);
  EXPECT_EQ(autoscale(q, 0, 2, 14.9).scale_in, 0);
  EXPECT_EQ(autoscale(q, 0, 1, 100.0).scale_in, 0);
  EXPECT_EQ(autoscale(q, 3, 2, 100.0).scale_in, 0);
}

TEST(RunTest, EmptyTrace) {
  SimResult r = run({}, {k13b}, {}, {}, Opts(Strategy::kLambdaScale));
  ASSERT_FALSE(r.log.empty());
  EXPECT_EQ(r.log.back().kind, EventKind::kSimEnd);
  EXPECT_EQ(r.metrics.requests.size(), 0u);
  EXPECT_EQ(r.metrics.total_tokens, 0);
}

TEST(RunTest, HotStartTtftIsPrefill) {
  SimResult r = run({}, {k13b}, Burst(1), {}, Opts(Strategy::kLambdaScale));
  ASSERT_EQ(r.metrics.ttft_samples.size(), 1u);
  EXPECT_NEAR(r.metrics.ttft_samples[0], 128 * k13b.prefill_ms_per_token / 1000, 1e-12);
}

TEST(RunTest, RejectsBadTraces) {
  std::vector<TraceRecord> unknown{{0, "other", 1, 1}};
  EXPECT_THROW(run({}, {k13b}, unknown, {}, Opts(Strategy::kIdeal)), InputValidation);
  std::vector<TraceRecord> unsorted{{1, "m13b", 1, 1}, {0, "m13b", 1, 1}};
  EXPECT_THROW(run({}, {k13b}, unsorted, {}, Opts(Strategy::kIdeal)), InputValidation);
}

TEST(RunTest, Deterministic) {
  for (Strategy s : {Strategy::kLambdaScale, Strategy::kBinaryTree, Strategy::kSsdOnly}) {
    auto a = run({}, {k13b}, Burst(30), {}, Opts(s));
    auto b = run({}, {k13b}, Burst(30), {}, Opts(s));
    EXPECT_EQ(LogText(a), LogText(b));
  }
}

TEST(RunTest, ConservationAndOrdering) {
  BurstSpec bs;
  bs.base_rps = 2;
  bs.spike_rps = 30;
  bs.spike_times = {5};
  bs.spike_duration_s = 5;
  bs.duration_s = 40;
  bs.models = {"m13b"};
  auto trace = synth_burst(bs);
  for (Strategy s : {Strategy::kLambdaScale, Strategy::kBinaryTree, Strategy::kBroadcastGroups,
                     Strategy::kSsdOnly, Strategy::kIdeal}) {
    SimOptions o = Opts(s);
    o.batch_size = 2;
    SimResult r = run({}, {k13b}, trace, {}, o);
    std::map<long long, int> tokens;
    int done = 0;
    double last = 0;
    for (const auto& rec : r.log) {
      EXPECT_GE(rec.time_s, last);
      last = rec.time_s;
      if (rec.kind == EventKind::kTokenEmitted) ++tokens[rec.get_int("request")];
      if (rec.kind == EventKind::kRequestDone) ++done;
    }
    EXPECT_EQ(done, static_cast<int>(trace.size())) << to_string(s);
    long long want = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      EXPECT_EQ(tokens[static_cast<long long>(i)], trace[i].output_tokens);
      want += trace[i].output_tokens;
    }
    EXPECT_EQ(r.metrics.total_tokens, want);
  }
}

TEST(RunTest, GpuSecondsMatchReintegration) {
  BurstSpec bs;
  bs.base_rps = 1;
  bs.spike_rps = 20;
  bs.spike_times = {10, 60};
  bs.spike_duration_s = 8;
  bs.duration_s = 120;
  bs.models = {"m13b"};
  AutoscalePolicy p;
  p.keep_alive_s = 5;
  SimResult r = run({}, {k13b}, synth_burst(bs), p, Opts(Strategy::kLambdaScale));
  std::vector<std::pair<double, int>> samples;
  bool saw_scale_in = false;
  for (const auto& rec : r.log) {
    if (rec.kind == EventKind::kScaleOut || rec.kind == EventKind::kScaleIn)
      samples.push_back({rec.time_s, static_cast<int>(rec.get_int("allocated_gpus"))});
    saw_scale_in |= rec.kind == EventKind::kScaleIn;
  }
  EXPECT_TRUE(saw_scale_in);
  EXPECT_NEAR(r.metrics.gpu_seconds, oracle::step_integral(samples, r.metrics.end_time_s), 1e-6);
  EXPECT_GE(r.metrics.gpu_seconds, 0.0);
}

TEST(RunTest, FirstMulticastMatchesFormula) {
  SimResult r = run({}, {k13b}, Burst(50), {}, Opts(Strategy::kLambdaScale));
  EXPECT_NEAR(r.first_multicast_s, oracle::multicast_time(26e9, 8, 16, 0.0, 50e9), 1e-6);
  EXPECT_LT(r.first_multicast_s, 1.0);
}

TEST(RunTest, SsdOnlyWaitsForFullLoad) {
  SimResult ssd = run({}, {k13b}, Burst(50), {}, Opts(Strategy::kSsdOnly));
  SimResult lam = run({}, {k13b}, Burst(50), {}, Opts(Strategy::kLambdaScale));
  ClusterSpec c;
  EXPECT_NEAR(ssd.metrics.time_to_first_served_s,
              26e9 / c.ssd_Bps + 128 * k13b.prefill_ms_per_token / 1000, 1e-9);
  EXPECT_LT(lam.metrics.time_to_first_served_s, ssd.metrics.time_to_first_served_s);
  EXPECT_LT(lam.metrics.p90, ssd.metrics.p90);
}

TEST(RunTest, PipelinesServeBeforeLoadCompletes) {
  SimResult r = run({}, {k13b}, Burst(50), {}, Opts(Strategy::kLambdaScale));
  EXPECT_GT(r.metrics.time_to_first_served_s, 0.0);
  EXPECT_LT(r.metrics.time_to_first_served_s, r.first_multicast_s + 0.05);
  bool switched = false;
  for (const auto& rec : r.log) switched |= rec.kind == EventKind::kModeSwitch;
  EXPECT_TRUE(switched);
}

TEST(RunTest, MemorySourceLoadsFirst) {
  SimOptions o = Opts(Strategy::kLambdaScale);
  o.initial_gpu.clear();
  o.initial_memory = {{3, "m13b"}};
  SimResult r = run({}, {k13b}, Burst(20), {}, o);
  EXPECT_EQ(r.metrics.requests.size(), 20u);
  EXPECT_GT(r.metrics.time_to_first_served_s, 0.0);
}

TEST(RunTest, MultiGpuNodesAndReplicas) {
  ClusterSpec c;
  c.gpus_per_node = 4;
  c.node_count = 4;
  ModelSpec wide = k13b;
  wide.gpus_per_replica = 8;
  EXPECT_ANY_THROW(run(c, {wide}, Burst(1), {}, Opts(Strategy::kLambdaScale)));
  ModelSpec two = k13b;
  two.gpus_per_replica = 2;
  SimResult r = run(c, {two}, Burst(40), {}, Opts(Strategy::kLambdaScale));
  EXPECT_EQ(r.metrics.requests.size(), 40u);
}

TEST(RunTest, EffectiveBlockCount) {
  ClusterSpec c;
  SimOptions o;
  o.b = 0;
  EXPECT_EQ(effective_block_count(k13b, c, o), 13);
  o.b = 100;
  EXPECT_EQ(effective_block_count(k13b, c, o), 40);
}

}  // namespace
}  // namespace scalecast
