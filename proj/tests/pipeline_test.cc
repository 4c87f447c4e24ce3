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

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace scalecast {
namespace {

MulticastSchedule KWay(std::vector<NodeId> nodes, int k, int b) {
  ModelSpec m{"m", 1000ULL * b, b};
  std::vector<NodeId> sources(nodes.begin(), nodes.begin() + k);
  auto groups = partition_subgroups(nodes, sources);
  auto orders = k_way_orders(b, k);
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i].transfer_order = orders[i];
  return compose_schedule(groups, partition_blocks(m, b));
}

std::vector<NodeId> Range(int lo, int n) {
  std::vector<NodeId> v(n);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

SubGroup G(std::vector<NodeId> members, int id = 0) {
  SubGroup g;
  g.group_id = id;
  g.members = std::move(members);
  return g;
}

std::string ReadFile(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void ExpectCoversModel(const ExecutionPipeline& p, int b) {
  std::vector<int> count(b, 0);
  BlockId expect_lo = 0;
  for (const Stage& s : p.stages) {
    EXPECT_EQ(s.block_lo, expect_lo);
    for (BlockId x = s.block_lo; x <= s.block_hi; ++x) ++count[x];
    expect_lo = s.block_hi + 1;
  }
  for (int c : count) EXPECT_EQ(c, 1);
}

TEST(GeneratePipelinesTest, TwoGroupsPairByPosition) {
  auto d = generate_pipelines({G({1, 3, 4, 5}, 0), G({2, 6, 7, 8}, 1)});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].nodes, (std::vector<NodeId>{3, 6}));
  EXPECT_EQ(d[1].nodes, (std::vector<NodeId>{4, 7}));
  EXPECT_EQ(d[2].nodes, (std::vector<NodeId>{5, 8}));
  EXPECT_EQ(d[0].groups, (std::vector<int>{0, 1}));
}

TEST(GeneratePipelinesTest, SingleGroupFormsOnePipeline) {
  auto d = generate_pipelines({G({1, 3, 4, 5})});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].nodes, (std::vector<NodeId>{3, 4, 5}));
}

TEST(GeneratePipelinesTest, UnevenGroupsLeaveTail) {
  auto d = generate_pipelines({G({0, 10, 11}), G({1, 20, 21, 22})});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].nodes, (std::vector<NodeId>{10, 20}));
  EXPECT_EQ(d[1].nodes, (std::vector<NodeId>{11, 21}));
  EXPECT_EQ(d[2].nodes, (std::vector<NodeId>{22}));
}

TEST(GeneratePipelinesTest, EveryNodeExactlyOnce) {
  std::mt19937 rng(7);
  for (int c = 0; c < 300; ++c) {
    int k = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<SubGroup> groups;
    std::multiset<NodeId> in;
    NodeId next = 0;
    for (int i = 0; i < k; ++i) {
      int size = std::uniform_int_distribution<int>(1, 6)(rng);
      std::vector<NodeId> m(size);
      for (auto& x : m) x = next++;
      for (int j = 1; j < size; ++j) in.insert(m[j]);
      groups.push_back(G(m));
    }
    std::multiset<NodeId> out;
    for (const auto& d : generate_pipelines(groups))
      for (NodeId n : d.nodes) out.insert(n);
    EXPECT_EQ(in, out);
  }
  EXPECT_THROW(generate_pipelines({}), InvalidArgument);
}

TEST(AssignBlocksTest, LeadingChunksInModelOrder) {
  PipelineDraft d{{6, 3}, {1, 0}};
  auto p = assign_blocks_to_stages(d, k_way_orders(4, 2), 4);
  ASSERT_EQ(p.stages.size(), 2u);
  EXPECT_EQ(p.stages[0].node, 3);
  EXPECT_EQ(p.stages[0].block_lo, 0);
  EXPECT_EQ(p.stages[0].block_hi, 1);
  EXPECT_EQ(p.stages[1].node, 6);
  EXPECT_EQ(p.stages[1].block_lo, 2);
  EXPECT_EQ(p.stages[1].block_hi, 3);
  EXPECT_FALSE(p.extended);
}

TEST(AssignBlocksTest, SingleGroupEvenSplit) {
  PipelineDraft d{{3, 4, 5, 6}, {0, 0, 0, 0}};
  auto p = assign_blocks_to_stages(d, k_way_orders(8, 1), 8);
  ASSERT_EQ(p.stages.size(), 4u);
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(p.stages[j].block_lo, 2 * j);
    EXPECT_EQ(p.stages[j].block_hi, 2 * j + 1);
  }
}

TEST(AssignBlocksTest, UnevenChunksAreExtended) {
  // k=3, b=7: chunks of 3, 3, 1; stages from groups 0 and 2 leave a gap.
  PipelineDraft d{{10, 30}, {0, 2}};
  auto p = assign_blocks_to_stages(d, k_way_orders(7, 3), 7);
  ExpectCoversModel(p, 7);
  EXPECT_TRUE(p.extended);
}

TEST(BuildPipelinesTest, CoverageOnBalancedInputs) {
  for (int k : {1, 2, 4})
    for (int per : {2, 3, 4})
      for (int b : {4, 8, 12, 16}) {
        if (b % k) continue;
        auto s = KWay(Range(0, k * per), k, b);
        for (const auto& p : build_pipelines(s)) {
          ExpectCoversModel(p, b);
          EXPECT_GE(p.activation_step, (b + k - 1) / k - 1);
        }
      }
}

TEST(BuildPipelinesTest, PairsActivateAfterBOverKSteps) {
  for (int k : {1, 2, 4})
    for (int b : {4, 8, 16}) {
      auto ps = build_pipelines(KWay(Range(0, 2 * k), k, b));
      ASSERT_FALSE(ps.empty());
      int first = ps.front().activation_step;
      for (const auto& p : ps) first = std::min(first, p.activation_step);
      EXPECT_EQ(first + 1, b / k) << "k=" << k << " b=" << b;
    }
}

TEST(BuildPipelinesTest, NoNodeInTwoPipelines) {
  auto ps = build_pipelines(KWay(Range(0, 16), 4, 8));
  std::set<NodeId> seen;
  for (const auto& p : ps)
    for (const auto& s : p.stages) EXPECT_TRUE(seen.insert(s.node).second);
}

TEST(BuildPipelinesTest, ScaleExampleFixture) {
  auto s = KWay(Range(1, 8), 2, 4);
  std::ostringstream orders;
  for (const auto& g : s.subgroups) {
    for (std::size_t i = 0; i < g.transfer_order.size(); ++i)
      orders << (i ? " " : "") << g.transfer_order[i];
    orders << '\n';
  }
  const std::string dir = SCALECAST_SOURCE_DIR "/tests/fixtures/";
  EXPECT_EQ(orders.str(), ReadFile(dir + "plan_2to8_orders.txt"));
  EXPECT_EQ(pipelines_to_csv(build_pipelines(s)), ReadFile(dir + "plan_2to8_pipelines.csv"));
}

TEST(OrderByFirstChunkTest, SourcesStayFirst) {
  auto s = KWay(Range(0, 8), 2, 4);
  auto g = order_by_first_chunk(s);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].members.front(), 0);
  EXPECT_EQ(g[1].members.front(), 1);
  EXPECT_EQ(g[0].members.size(), 4u);
}

TEST(TwoDScheduleTest, FullPipelineAfterWarmup) {
  ExecutionPipeline p;
  p.stages.resize(4);
  TwoDSchedule t = plan_2d_schedule(p, 4, 16);
  for (int tick = 3; tick < 16; ++tick)
    for (int s = 0; s < 4; ++s) EXPECT_GE(t.busy[tick][s], 0) << tick;
  EXPECT_DOUBLE_EQ(t.utilization(3), 1.0);
  for (int b = 0; b < 4; ++b) EXPECT_EQ(t.token_latency(b), 4);
}

TEST(TwoDScheduleTest, HalfUtilizedWithTwoBatches) {
  ExecutionPipeline p;
  p.stages.resize(4);
  TwoDSchedule t = plan_2d_schedule(p, 2, 12);
  EXPECT_DOUBLE_EQ(t.utilization(4), 0.5);
  EXPECT_EQ(t.token_latency(0), 4);
}

TEST(TwoDScheduleTest, SingleStage) {
  ExecutionPipeline p;
  p.stages.resize(1);
  TwoDSchedule t = plan_2d_schedule(p, 1, 5);
  EXPECT_EQ(t.token_latency(0), 1);
}

TEST(TwoDScheduleTest, ConservesBatches) {
  ExecutionPipeline p;
  p.stages.resize(3);
  for (int batches : {1, 2, 3, 5, 9}) {
    TwoDSchedule t = plan_2d_schedule(p, batches, 20);
    for (int tick = 0; tick < 20; ++tick) {
      std::multiset<int> seen(t.waiting[tick].begin(), t.waiting[tick].end());
      for (int b : t.busy[tick])
        if (b >= 0) seen.insert(b);
      std::multiset<int> all;
      for (int b = 0; b < batches; ++b) all.insert(b);
      EXPECT_EQ(seen, all) << "batches=" << batches << " tick=" << tick;
    }
  }
  EXPECT_THROW(plan_2d_schedule(p, 0, 4), InvalidArgument);
}

TEST(MultiGpuTest, Cases) {
  ModelSpec one{"a", 1, 1, 1};
  ModelSpec four{"b", 1, 1, 4};
  EXPECT_EQ(select_multi_gpu_strategy(one, 4, 3), MultiGpuStrategy::kIntraNodeReplicate);
  EXPECT_EQ(select_multi_gpu_strategy(four, 4, 0), MultiGpuStrategy::kCrossNodeMultiGpu);
  EXPECT_EQ(select_multi_gpu_strategy(one, 1, 0), MultiGpuStrategy::kCrossNodeSingleGpu);
  EXPECT_THROW(select_multi_gpu_strategy(four, 2, 0), UnsupportedConfiguration);
}

TEST(ModeSwitchTest, RoundRobinAndRecomputeCost) {
  ExecutionPipeline p;
  p.stages = {{3, 0, 0, 1, 0}, {6, 0, 2, 3, 1}};
  auto plan = plan_mode_switch(p, {{1, 50}, {2, 0}, {3, 10}, {4, 7}}, 2.0);
  EXPECT_EQ(p.mode, PipelineMode::kLocal);
  ASSERT_EQ(plan.assignments.size(), 4u);
  int on3 = 0;
  for (const auto& a : plan.assignments) on3 += a.node == 3;
  EXPECT_EQ(on3, 2);
  EXPECT_DOUBLE_EQ(plan.assignments[0].recompute_cost_s, 50 * 2.0 / 1000);
  EXPECT_NEAR(plan.assignments[0].recompute_cost_s, 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(plan.total_recompute_s(), (50 + 0 + 10 + 7) * 2.0 / 1000);

  auto empty = plan_mode_switch(p, {}, 2.0);
  EXPECT_TRUE(empty.assignments.empty());
  EXPECT_EQ(empty.total_recompute_s(), 0.0);
}

TEST(ModeSwitchTest, BalancedForAnyCount) {
  ExecutionPipeline p;
  p.stages.resize(3);
  for (int i = 0; i < 3; ++i) p.stages[i].node = 10 + i;
  for (int n = 0; n < 20; ++n) {
    std::vector<std::pair<int, int>> reqs;
    for (int i = 0; i < n; ++i) reqs.push_back({i, i});
    auto plan = plan_mode_switch(p, reqs, 1.0);
    std::map<NodeId, int> per;
    for (const auto& a : plan.assignments) ++per[a.node];
    int lo = n, hi = 0;
    for (int i = 0; i < 3; ++i) {
      lo = std::min(lo, per[10 + i]);
      hi = std::max(hi, per[10 + i]);
    }
    EXPECT_LE(hi - lo, 1);
  }
}

}  // namespace
}  // namespace scalecast
