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

#include "scalecast/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scalecast/pipeline.h"

namespace fs = std::filesystem;

namespace scalecast {

namespace {

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  f << content;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

void write_metrics(const fs::path& dir, const SimResult& r) {
  std::ostringstream log;
  write_log(log, r.log);
  write_file(dir / "events.log", log.str());
  write_file(dir / "requests.csv", requests_to_csv(r.metrics));
  write_file(dir / "throughput.csv", throughput_to_csv(r.metrics));
  write_file(dir / "allocation.csv", allocation_to_csv(r.metrics));
  write_file(dir / "summary.txt", summary_to_text(r.metrics));
}

}  // namespace

void cmd_plan(const RunConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const ModelSpec& model = cfg.plan_model();
  const int n = cfg.plan.nodes > 0 ? cfg.plan.nodes : cfg.cluster.node_count;
  const int k = std::min(cfg.sim.k, n);
  std::vector<NodeId> nodes, sources;
  for (int i = 0; i < n; ++i) nodes.push_back(cfg.plan.first_node_id + i);
  sources.assign(nodes.begin(), nodes.begin() + k);

  ClusterSpec cl = cfg.cluster;
  cl.node_count = n;
  const int b = effective_block_count(model, cl, cfg.sim);
  BlockPlan plan = partition_blocks(model, b);
  auto groups = partition_subgroups(nodes, sources);
  auto orders = k_way_orders(b, k);
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i].transfer_order = orders[i];
  MulticastSchedule sched =
      compose_schedule(groups, plan, {cl.step_fixed_overhead_s, cl.nic_Bps});
  auto pipelines = build_pipelines(sched);
  const double step = transfer_step_time(sched, plan, cl);

  std::ostringstream s;
  s << "model=" << model.model_id << '\n'
    << "nodes=" << n << '\n'
    << "sources=" << k << '\n'
    << "block_count=" << b << '\n'
    << "step_count=" << sched.step_count() << '\n'
    << "step_time_s=" << fmt(step) << '\n'
    << "predicted_multicast_s=" << fmt(sched.step_count() * step) << '\n';
  if (pipelines.empty()) {
    s << "first_activation_step=none\n"
      << "hot_path=1\n";
  } else {
    int first = pipelines.front().activation_step;
    for (const auto& p : pipelines) first = std::min(first, p.activation_step);
    s << "first_activation_step=" << first << '\n'
      << "first_activation_s=" << fmt((first + 1) * step) << '\n'
      << "pipelines=" << pipelines.size() << '\n'
      << "hot_path=0\n";
  }
  for (const auto& p : pipelines)
    if (p.extended)
      s << "warning=pipeline " << p.pipeline_id << " stage ranges extended to cover all blocks\n";
  s << "orders=";
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (i) s << '|';
    for (std::size_t j = 0; j < orders[i].size(); ++j) s << (j ? " " : "") << orders[i][j];
  }
  s << '\n';

  const fs::path dir(out_dir);
  write_file(dir / "schedule.csv", schedule_to_csv(sched));
  write_file(dir / "pipelines.csv", pipelines_to_csv(pipelines));
  write_file(dir / "schedule_summary.txt", summary_to_text(summarize(sched)));
  write_file(dir / "summary.txt", s.str());
  out << s.str();
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const auto trace = build_trace(cfg);
  const fs::path dir(out_dir);
  write_file(dir / "trace.csv", trace_to_csv(trace));
  for (Strategy s : cfg.strategies) {
    SimOptions o = cfg.sim;
    o.strategy = s;
    SimResult r = run(cfg.cluster, cfg.models, trace, cfg.policy, o);
    write_metrics(dir / to_string(s), r);
    const MetricsReport& m = r.metrics;
    out << to_string(s) << ": requests=" << m.requests.size() << " p50=" << fmt(m.p50)
        << " p90=" << fmt(m.p90) << " p99=" << fmt(m.p99)
        << " gpu_seconds=" << fmt(m.gpu_seconds)
        << " time_to_first_served_s=" << fmt(m.time_to_first_served_s) << '\n';
  }
}

void cmd_sweep(const RunConfig& cfg, SweepAxis axis, const std::vector<double>& values,
               const std::string& out_dir, std::ostream& out) {
  if (values.empty()) throw ConfigError("--sweep needs at least one value");
  const auto trace = build_trace(cfg);
  auto rows = run_sweep_parallel(cfg, axis, values, trace);
  const fs::path dir(out_dir);
  for (const SweepRow& r : rows) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%g", to_string(axis), r.value);
    write_metrics(dir / "sweep" / name / to_string(r.strategy), r.result);
  }
  const std::string table = sweep_to_csv(cfg, axis, rows);
  write_file(dir / "sweep.csv", table);
  out << table;
}

void cmd_report(const std::string& out_dir, double window_s, std::ostream& out) {
  const fs::path dir(out_dir);
  if (!fs::is_directory(dir)) throw InputValidation("no such output directory '" + out_dir + "'");
  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "events.log")) runs.push_back(e.path());
  std::sort(runs.begin(), runs.end());
  if (runs.empty()) throw InputValidation("no <strategy>/events.log under '" + out_dir + "'");

  std::ostringstream report, cdf;
  report << "strategy,requests,ttft_p50_s,ttft_p90_s,ttft_p99_s,gpu_seconds,total_tokens,"
            "time_to_first_served_s\n";
  cdf << "strategy,ttft_s,cdf\n";
  for (const auto& r : runs) {
    std::ifstream in(r / "events.log");
    const std::string label = r.filename().string();
    MetricsReport m = aggregate(read_log(in), label, window_s);
    report << label << ',' << m.requests.size() << ',' << fmt(m.p50) << ',' << fmt(m.p90) << ','
           << fmt(m.p99) << ',' << fmt(m.gpu_seconds) << ',' << m.total_tokens << ','
           << fmt(m.time_to_first_served_s) << '\n';
    std::vector<double> t = m.ttft_samples;
    std::sort(t.begin(), t.end());
    for (std::size_t i = 0; i < t.size(); ++i)
      cdf << label << ',' << fmt(t[i]) << ',' << fmt(double(i + 1) / t.size()) << '\n';
  }
  write_file(dir / "report.csv", report.str());
  write_file(dir / "ttft_cdf.csv", cdf.str());
  out << report.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"scalecast: multicast planning and scaling simulation"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", strategies, sweep_spec;
  long long seed = -1;
  double window_s = 0.1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override run.seed");
    sub->add_option("--strategy", strategies, "Comma-separated strategy ids");
  };
  CLI::App* plan = app.add_subcommand("plan", "Emit the multicast schedule and pipelines");
  add_common(plan);
  CLI::App* sim = app.add_subcommand("simulate", "Run the simulator per strategy");
  add_common(sim);
  CLI::App* sweep = app.add_subcommand("sweep", "Run one simulation per axis value");
  add_common(sweep);
  sweep->add_option("--sweep", sweep_spec, "<b|k|block_overhead>=v1,v2,...")->required();
  CLI::App* report = app.add_subcommand("report", "Summarize simulate output");
  report->add_option("--out", out_dir, "Directory written by simulate");
  report->add_option("--window", window_s, "Throughput window in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report->parsed()) {
      cmd_report(out_dir, window_s, out);
      return kExitOk;
    }
    RunConfig cfg = load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!strategies.empty()) {
      cfg.strategies.clear();
      std::stringstream ss(strategies);
      std::string s;
      while (std::getline(ss, s, ',')) {
        try {
          cfg.strategies.push_back(parse_strategy(s));
        } catch (const InvalidArgument& e) {
          throw ConfigError(std::string("--strategy: ") + e.what());
        }
      }
      if (cfg.strategies.empty()) throw ConfigError("--strategy: empty list");
    }
    if (plan->parsed()) {
      cmd_plan(cfg, out_dir, out);
    } else if (sim->parsed()) {
      cmd_simulate(cfg, out_dir, out);
    } else {
      auto eq = sweep_spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--sweep: expected <axis>=<v1,...>");
      SweepAxis axis = parse_axis(sweep_spec.substr(0, eq));
      std::vector<double> values;
      std::stringstream ss(sweep_spec.substr(eq + 1));
      std::string v;
      while (std::getline(ss, v, ',')) {
        try {
          values.push_back(std::stod(v));
        } catch (const std::logic_error&) {
          throw ConfigError("--sweep: bad value '" + v + "'");
        }
      }
      cmd_sweep(cfg, axis, values, out_dir, out);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace scalecast
