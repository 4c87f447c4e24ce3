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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.h"
#include "scalecast/cli.h"
#include "scalecast/modelmgr.h"
#include "scalecast/multicast.h"
#include "scalecast/pipeline.h"
#include "scalecast/simengine.h"
#include "scalecast/sweep.h"

namespace fs = std::filesystem;
using namespace scalecast;

namespace {

const std::string kConfigs = SCALECAST_SOURCE_DIR "/configs/";
const std::string kFixtures = SCALECAST_SOURCE_DIR "/tests/fixtures/";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MulticastSchedule KWay(const std::vector<NodeId>& nodes, int k, int b) {
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

SubGroup Group(int L, int b) {
  SubGroup g;
  g.members = Range(0, L);
  g.transfer_order = Range(0, b);
  return g;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int FirstActivation(const std::vector<ExecutionPipeline>& ps) {
  int first = ps.front().activation_step;
  for (const auto& p : ps) first = std::min(first, p.activation_step);
  return first;
}

std::map<Strategy, SimResult> RunAll(const RunConfig& cfg) {
  auto trace = build_trace(cfg);
  std::map<Strategy, SimResult> out;
  for (Strategy s : cfg.strategies) {
    SimOptions o = cfg.sim;
    o.strategy = s;
    out[s] = run(cfg.cluster, cfg.models, trace, cfg.policy, o);
  }
  return out;
}

Outcome StepCountBound() {
  auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  for (int L : {2, 4, 8, 16})
    for (int b = 1; b <= 32; ++b)
      if (static_cast<int>(build_binomial_schedule(Group(L, b), b).size()) !=
          b + ceil_log2(L) - 1)
        ++bad;
  double t = Seconds(t0);
  return {bad == 0 && t < 1.0, Fmt("128 cases, %.0f mismatches, %.3f s", bad, t)};
}

Outcome ScheduleValidity() {
  std::mt19937 rng(2026);
  int cases = 0, violations = 0;
  for (; cases < 2000; ++cases) {
    int n = std::uniform_int_distribution<int>(1, 16)(rng);
    int k = std::uniform_int_distribution<int>(1, std::min(4, n))(rng);
    int b = std::uniform_int_distribution<int>(1, 32)(rng);
    try {
      violations += static_cast<int>(validate_schedule(KWay(Range(0, n), k, b)).size());
    } catch (const ScheduleInvalid&) {
      ++violations;
    }
  }
  return {violations == 0, Fmt("%.0f random cases, %.0f violations", cases, violations)};
}

Outcome BruteForceOptimality() {
  auto t0 = std::chrono::steady_clock::now();
  int worse = 0, cases = 0;
  for (int L = 2; L <= 4; ++L)
    for (int b = 1; b <= 3; ++b, ++cases)
      if (static_cast<int>(build_binomial_schedule(Group(L, b), b).size()) >
          oracle::min_broadcast_steps(L, b))
        ++worse;
  double t = Seconds(t0);
  return {worse == 0 && t < 30.0,
          Fmt("%.0f cases, %.0f beaten by search, %.3f s", cases, worse, t)};
}

Outcome KWayActivation() {
  int bad = 0;
  std::string larger;
  for (int k : {1, 2, 4})
    for (int b : {4, 8, 16}) {
      if (FirstActivation(build_pipelines(KWay(Range(0, 2 * k), k, b))) + 1 != b / k) ++bad;
      int four = FirstActivation(build_pipelines(KWay(Range(0, 4 * k), k, b))) + 1;
      larger += " " + std::to_string(b / k) + "->" + std::to_string(four);
    }
  return {bad == 0, Fmt("9 cases with two-node groups, %.0f off;", bad) +
                        " four-node groups (b/k->steps):" + larger};
}

Outcome ScaleExampleFixture() {
  MulticastSchedule s = KWay(Range(1, 8), 2, 4);
  std::ostringstream orders;
  for (const auto& g : s.subgroups) {
    for (std::size_t i = 0; i < g.transfer_order.size(); ++i)
      orders << (i ? " " : "") << g.transfer_order[i];
    orders << '\n';
  }
  auto ps = build_pipelines(s);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& p : ps)
    if (p.stages.size() == 2) pairs.insert({p.stages[0].node, p.stages[1].node});
  bool orders_ok = orders.str() == ReadFile(kFixtures + "plan_2to8_orders.txt");
  bool csv_ok = pipelines_to_csv(ps) == ReadFile(kFixtures + "plan_2to8_pipelines.csv");
  bool pairs_ok = pairs == std::set<std::pair<NodeId, NodeId>>{{3, 6}, {4, 7}, {5, 8}};
  return {orders_ok && csv_ok && pairs_ok,
          std::string("orders ") + (orders_ok ? "match" : "differ") + ", pipelines " +
              (csv_ok ? "match" : "differ") + ", pairs " + (pairs_ok ? "match" : "differ")};
}

Outcome SubSecondScaling() {
  double formula = modeled_multicast_time(26'000'000'000ULL, 8, 16, 0.0, 50e9);
  RunConfig cfg = load_config(kConfigs + "burst13b.conf");
  SimOptions o = cfg.sim;
  o.strategy = Strategy::kLambdaScale;
  SimResult r = run(cfg.cluster, cfg.models, build_trace(cfg), cfg.policy, o);
  double sim = r.first_multicast_s;
  bool ok = std::abs(formula - 0.585) <= 1e-6 && std::abs(sim - 0.585) <= 1e-6 && sim < 1.0;
  return {ok, Fmt("predicted %.9f s, simulated %.9f s", formula, sim)};
}

Outcome StrategyOrdering() {
  auto r = RunAll(load_config(kConfigs + "burst13b.conf"));
  auto t = [&](Strategy s) { return r.at(s).metrics.time_to_first_served_s; };
  double i = t(Strategy::kIdeal), l = t(Strategy::kLambdaScale), bt = t(Strategy::kBinaryTree),
         bg = t(Strategy::kBroadcastGroups), ss = t(Strategy::kSsdOnly);
  bool ok = i >= 0 && i < l && l < bt && bt <= bg && bg < ss;
  return {ok, Fmt("ideal %.4f < lambda %.4f < binary %.4f <= broadcast %.4f < ssd %.4f", i, l,
                  bt, bg, ss)};
}

Outcome KScalingRamp() {
  RunConfig cfg = load_config(kConfigs + "burst13b.conf");
  cfg.strategies = {Strategy::kLambdaScale};
  auto trace = build_trace(cfg);
  std::vector<double> ks{1, 4};
  auto rows = run_sweep_serial(cfg, SweepAxis::kSources, ks, trace);
  double t1 = rows[0].result.metrics.time_to_first_served_s;
  double t4 = rows[1].result.metrics.time_to_first_served_s;
  double ratio = t4 > 0 ? t1 / t4 : 0;
  return {ratio >= 2.0 && ratio <= 6.0,
          Fmt("k=1 %.4f s, k=4 %.4f s, ratio %.2f", t1, t4, ratio)};
}

Outcome ElbowShape() {
  RunConfig cfg = load_config(kConfigs + "bsweep.conf");
  auto trace = build_trace(cfg);
  std::vector<double> bs(40);
  std::iota(bs.begin(), bs.end(), 1.0);
  auto rows = run_sweep_parallel(cfg, SweepAxis::kBlocks, bs, trace);
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].result.first_multicast_s < rows[best].result.first_multicast_s) best = i;
  int bmin = static_cast<int>(rows[best].value);
  if (bmin < 2 || 2 * bmin > 40) return {false, Fmt("minimum at the edge, b=%.0f", bmin)};
  double tm = rows[best].result.first_multicast_s;
  double th = rows[bmin / 2 - 1].result.first_multicast_s;
  double td = rows[2 * bmin - 1].result.first_multicast_s;
  return {tm < th && tm < td,
          Fmt("b_min=%.0f: T(b/2)=%.4f > T(b)=%.4f < T(2b)=%.4f", bmin, th, tm, td)};
}

Outcome CacheReplay() {
  std::vector<TraceRecord> rot;
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) {
    ids.push_back("m" + std::to_string(i % 4));
    rot.push_back({double(i), ids.back(), 1, 1});
  }
  LoadMix r = miss_ratio(rot, {1, 3}, std::numeric_limits<double>::infinity());
  bool rot_ok = r.ssd == oracle::lru_misses(ids, 3) && r.hot == 0 && r.memory == 0;

  BurstSpec bs;
  bs.base_rps = 0.2;
  bs.spike_rps = 4;
  bs.spike_times = {300, 900, 1500};
  bs.spike_duration_s = 60;
  bs.duration_s = 1800;
  for (int m = 0; m < 12; ++m) bs.models.push_back("m" + std::to_string(m));
  bs.seed = 4;
  LoadMix b = miss_ratio(synth_burst(bs), {1, 3}, 15.0);
  bool burst_ok = b.ssd_fraction() > b.memory_fraction();
  return {rot_ok && burst_ok,
          Fmt("rotation ssd %.0f of 100 (oracle %.0f); bursty ssd %.3f vs memory %.3f", r.ssd,
              oracle::lru_misses(ids, 3), b.ssd_fraction(), b.memory_fraction())};
}

Outcome GpuTimeDominance() {
  auto r = RunAll(load_config(kConfigs + "replay30m.conf"));
  auto g = [&](Strategy s) { return r.at(s).metrics.gpu_seconds; };
  double ideal = g(Strategy::kIdeal), l = g(Strategy::kLambdaScale);
  bool ok = l <= 1.25 * ideal;
  for (Strategy s : {Strategy::kBinaryTree, Strategy::kBroadcastGroups, Strategy::kSsdOnly})
    ok = ok && l < g(s);
  return {ok, Fmt("ideal %.1f, lambda %.1f (+%.1f%%), binary %.1f, broadcast %.1f", ideal, l,
                  100 * (l / ideal - 1), g(Strategy::kBinaryTree),
                  g(Strategy::kBroadcastGroups)) +
                  Fmt(", ssd %.1f", g(Strategy::kSsdOnly))};
}

Outcome Determinism() {
  RunConfig cfg = load_config(kConfigs + "replay30m.conf");
  fs::path base = fs::temp_directory_path() / "scalecast_acceptance";
  fs::remove_all(base);
  std::ostringstream sink;
  cmd_simulate(cfg, (base / "a").string(), sink);
  cmd_simulate(cfg, (base / "b").string(), sink);
  int files = 0, diff = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    fs::path other = base / "b" / fs::relative(e.path(), base / "a");
    if (ReadFile(e.path()) != ReadFile(other)) ++diff;
  }
  fs::remove_all(base);
  return {files > 0 && diff == 0, Fmt("%.0f files compared, %.0f differ", files, diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"step-count bound", StepCountBound},
      {"schedule validity", ScheduleValidity},
      {"brute-force optimality", BruteForceOptimality},
      {"k-way activation bound", KWayActivation},
      {"2->8 scaling fixture", ScaleExampleFixture},
      {"sub-second 13B scaling", SubSecondScaling},
      {"strategy ordering", StrategyOrdering},
      {"k-scaling ramp", KScalingRamp},
      {"elbow shape", ElbowShape},
      {"cache replay", CacheReplay},
      {"GPU-time dominance", GpuTimeDominance},
      {"determinism", Determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
