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

#include "scalecast/sweep.h"

#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

namespace scalecast {

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kBlocks: return "b";
    case SweepAxis::kSources: return "k";
    case SweepAxis::kBlockOverhead: return "block_overhead";
  }
  return "unknown";
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "b") return SweepAxis::kBlocks;
  if (s == "k") return SweepAxis::kSources;
  if (s == "block_overhead") return SweepAxis::kBlockOverhead;
  throw ConfigError("unknown sweep axis '" + s + "' (expected b, k or block_overhead)");
}

RunConfig apply_axis(const RunConfig& cfg, SweepAxis axis, double value) {
  RunConfig out = cfg;
  switch (axis) {
    case SweepAxis::kBlocks:
      if (value < 1 || value != std::floor(value))
        throw ConfigError("sweep b values must be positive integers");
      out.sim.b = static_cast<int>(value);
      break;
    case SweepAxis::kSources: {
      if (value < 1 || value != std::floor(value))
        throw ConfigError("sweep k values must be positive integers");
      const int k = static_cast<int>(value);
      if (k > out.cluster.node_count) throw ConfigError("sweep k exceeds cluster.node_count");
      out.sim.k = k;
      const std::string id = out.plan_model().model_id;
      std::erase_if(out.sim.initial_gpu, [&](const Placement& p) { return p.model_id == id; });
      for (NodeId n = 0; n < k; ++n) {
        std::erase_if(out.sim.initial_gpu, [&](const Placement& p) { return p.node == n; });
        out.sim.initial_gpu.push_back({n, id});
      }
      break;
    }
    case SweepAxis::kBlockOverhead:
      if (value < 0) throw ConfigError("sweep block_overhead values must be >= 0");
      out.cluster.step_fixed_overhead_s = value;
      break;
  }
  return out;
}

namespace {

SweepRow run_one(const RunConfig& base, SweepAxis axis, double value, Strategy s,
                 const std::vector<TraceRecord>& trace) {
  RunConfig cfg = apply_axis(base, axis, value);
  cfg.sim.strategy = s;
  SweepRow row;
  row.value = value;
  row.strategy = s;
  const ModelSpec& m = cfg.plan_model();
  row.block_count = effective_block_count(m, cfg.cluster, cfg.sim);
  row.modeled_multicast_s =
      modeled_multicast_time(m.size_bytes, cfg.cluster.node_count, row.block_count,
                             cfg.cluster.step_fixed_overhead_s, cfg.cluster.nic_Bps);
  row.result = run(cfg.cluster, cfg.models, trace, cfg.policy, cfg.sim);
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep_serial(const RunConfig& cfg, SweepAxis axis,
                                       const std::vector<double>& values,
                                       const std::vector<TraceRecord>& trace) {
  std::vector<SweepRow> rows;
  for (double v : values)
    for (Strategy s : cfg.strategies) rows.push_back(run_one(cfg, axis, v, s, trace));
  return rows;
}

std::vector<SweepRow> run_sweep_parallel(const RunConfig& cfg, SweepAxis axis,
                                         const std::vector<double>& values,
                                         const std::vector<TraceRecord>& trace) {
  const long ns = static_cast<long>(cfg.strategies.size());
  const long total = static_cast<long>(values.size()) * ns;
  std::vector<SweepRow> rows(total);
  std::vector<std::exception_ptr> errors(total);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < total; ++i) {
    try {
      rows[i] = run_one(cfg, axis, values[i / ns], cfg.strategies[i % ns], trace);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string sweep_to_csv(const RunConfig& cfg, SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "axis,value,strategy,block_count,modeled_multicast_s,simulated_multicast_s,"
        "time_to_first_served_s,ttft_p50_s,ttft_p90_s,ttft_p99_s,gpu_seconds,total_tokens\n";
  char buf[512];
  for (const SweepRow& r : rows) {
    const MetricsReport& m = r.result.metrics;
    std::snprintf(buf, sizeof buf, "%s,%g,%s,%d,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%lld\n",
                  to_string(axis), r.value, to_string(r.strategy), r.block_count,
                  r.modeled_multicast_s, r.result.first_multicast_s, m.time_to_first_served_s,
                  m.p50, m.p90, m.p99, m.gpu_seconds, m.total_tokens);
    os << buf;
  }
  if (axis == SweepAxis::kBlocks) {
    const ModelSpec& m = cfg.plan_model();
    os << "# elbow_b="
       << select_block_count(m, cfg.cluster.node_count, cfg.cluster.step_fixed_overhead_s,
                             cfg.cluster.nic_Bps, cfg.sim.elbow_threshold)
       << '\n';
  }
  return os.str();
}

}  // namespace scalecast
