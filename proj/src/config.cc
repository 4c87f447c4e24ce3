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

#include "scalecast/config.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace scalecast {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

class Parser {
 public:
  explicit Parser(std::string key) : key_(std::move(key)) {}

  double real(const std::string& v) const {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double d;
    try {
      d = std::stod(v, &used);
    } catch (const std::logic_error&) {
      fail("expected a number, got '" + v + "'");
    }
    if (used != v.size()) fail("expected a number, got '" + v + "'");
    return d;
  }

  long long integer(const std::string& v) const {
    double d = real(v);
    if (d != std::floor(d) || std::abs(d) > 9e18) fail("expected an integer, got '" + v + "'");
    return static_cast<long long>(d);
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true/false, got '" + v + "'");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("config key '" + key_ + "': " + why);
  }

 private:
  std::string key_;
};

using Setter = std::function<void(const Parser&, const std::string&)>;

}  // namespace

const ModelSpec& RunConfig::plan_model() const {
  if (models.empty()) throw ConfigError("config defines no [model <id>] section");
  if (plan.model_id.empty()) return models.front();
  for (const auto& m : models)
    if (m.model_id == plan.model_id) return m;
  throw ConfigError("config key 'plan.model': unknown model '" + plan.model_id + "'");
}

RunConfig parse_config(std::istream& is, const std::string& base_dir) {
  RunConfig cfg;
  ClusterSpec& c = cfg.cluster;
  AutoscalePolicy& p = cfg.policy;
  SimOptions& o = cfg.sim;
  BurstSpec burst;
  bool have_synth = false;
  bool models_listed = false;

  std::map<std::string, std::map<std::string, Setter>> table;
  auto bytes = [](Bytes& dst) {
    return [&dst](const Parser& ps, const std::string& v) {
      double d = ps.real(v);
      if (d < 0) ps.fail("must be >= 0");
      dst = static_cast<Bytes>(std::llround(d));
    };
  };
  auto real = [](double& dst) {
    return [&dst](const Parser& ps, const std::string& v) { dst = ps.real(v); };
  };
  auto integer = [](int& dst) {
    return [&dst](const Parser& ps, const std::string& v) {
      dst = static_cast<int>(ps.integer(v));
    };
  };
  auto boolean = [](bool& dst) {
    return [&dst](const Parser& ps, const std::string& v) { dst = ps.boolean(v); };
  };

  table["cluster"] = {
      {"node_count", integer(c.node_count)},
      {"gpus_per_node", integer(c.gpus_per_node)},
      {"gpu_mem_bytes", bytes(c.gpu_mem_bytes)},
      {"host_mem_bytes", bytes(c.host_mem_bytes)},
      {"nic_Bps", real(c.nic_Bps)},
      {"nvlink_Bps", real(c.nvlink_Bps)},
      {"h2d_Bps", real(c.h2d_Bps)},
      {"ssd_Bps", real(c.ssd_Bps)},
      {"step_fixed_overhead_s", real(c.step_fixed_overhead_s)},
      {"baseline_group_init_s", real(c.baseline_group_init_s)},
  };
  table["policy"] = {
      {"threshold_hi", real(p.threshold_hi)},
      {"capacity_per_replica", integer(p.capacity_per_replica)},
      {"keep_alive_s", real(p.keep_alive_s)},
      {"min_replicas", integer(p.min_replicas)},
      {"max_replicas", integer(p.max_replicas)},
      {"eval_interval_s", real(p.eval_interval_s)},
  };
  table["run"] = {
      {"strategies",
       [&](const Parser& ps, const std::string& v) {
         cfg.strategies.clear();
         for (const auto& s : split_list(v)) {
           try {
             cfg.strategies.push_back(parse_strategy(s));
           } catch (const InvalidArgument& e) {
             ps.fail(e.what());
           }
         }
         if (cfg.strategies.empty()) ps.fail("empty strategy list");
       }},
      {"k", integer(o.k)},
      {"b",
       [&](const Parser& ps, const std::string& v) {
         o.b = v == "auto" ? 0 : static_cast<int>(ps.integer(v));
         if (v != "auto" && o.b < 1) ps.fail("must be >= 1 or 'auto'");
       }},
      {"seed",
       [&](const Parser& ps, const std::string& v) {
         cfg.seed = static_cast<std::uint64_t>(ps.integer(v));
       }},
      {"horizon_s", real(o.horizon_s)},
      {"batch_size", integer(o.batch_size)},
      {"activation_bytes", real(o.activation_bytes)},
      {"throughput_window_s", real(o.throughput_window_s)},
      {"elbow_threshold", real(o.elbow_threshold)},
      {"write_back", boolean(o.write_back)},
      {"ssd_everywhere", boolean(o.ssd_everywhere)},
      {"trace", [&](const Parser&, const std::string& v) { cfg.trace_path = v; }},
      {"sort_trace", boolean(cfg.sort_trace)},
  };
  table["synth"] = {
      {"base_rps", real(burst.base_rps)},
      {"spike_rps", real(burst.spike_rps)},
      {"spike_times",
       [&](const Parser& ps, const std::string& v) {
         burst.spike_times.clear();
         for (const auto& s : split_list(v)) burst.spike_times.push_back(ps.real(s));
       }},
      {"spike_duration_s", real(burst.spike_duration_s)},
      {"duration_s", real(burst.duration_s)},
      {"models",
       [&](const Parser&, const std::string& v) {
         burst.models = split_list(v);
         models_listed = true;
       }},
      {"model_weights",
       [&](const Parser& ps, const std::string& v) {
         burst.model_weights.clear();
         for (const auto& s : split_list(v)) burst.model_weights.push_back(ps.real(s));
       }},
      {"prompt_min", integer(burst.tokens.prompt_min)},
      {"prompt_max", integer(burst.tokens.prompt_max)},
      {"output_min", integer(burst.tokens.output_min)},
      {"output_max", integer(burst.tokens.output_max)},
  };
  auto placements = [&](std::vector<Placement>& dst) {
    return [&dst](const Parser& ps, const std::string& v) {
      dst.clear();
      for (const auto& item : split_list(v)) {
        auto colon = item.find(':');
        if (colon == std::string::npos) ps.fail("expected node:model, got '" + item + "'");
        dst.push_back({static_cast<NodeId>(ps.integer(trim(item.substr(0, colon)))),
                       trim(item.substr(colon + 1))});
      }
    };
  };
  table["initial"] = {
      {"gpu", placements(o.initial_gpu)},
      {"memory", placements(o.initial_memory)},
  };
  table["plan"] = {
      {"model", [&](const Parser&, const std::string& v) { cfg.plan.model_id = v; }},
      {"nodes", integer(cfg.plan.nodes)},
      {"first_node_id", integer(cfg.plan.first_node_id)},
  };

  std::string section;
  ModelSpec* model = nullptr;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      model = nullptr;
      if (section.rfind("model", 0) == 0 && section.size() > 5 &&
          (section[5] == ' ' || section[5] == '\t')) {
        std::string id = trim(section.substr(5));
        for (const auto& m : cfg.models)
          if (m.model_id == id)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate model '" +
                              id + "'");
        cfg.models.push_back({});
        cfg.models.back().model_id = id;
        model = &cfg.models.back();
        section = "model";
      } else if (!table.count(section)) {
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      }
      if (section == "synth") have_synth = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key '" + key +
                        "' outside any section");
    Parser ps(section + "." + key);
    if (section == "model") {
      ModelSpec& m = *model;
      if (key == "size_bytes") {
        double d = ps.real(value);
        if (d <= 0) ps.fail("must be > 0");
        m.size_bytes = static_cast<Bytes>(std::llround(d));
      } else if (key == "layer_count") {
        m.layer_count = static_cast<int>(ps.integer(value));
      } else if (key == "gpus_per_replica") {
        m.gpus_per_replica = static_cast<int>(ps.integer(value));
      } else if (key == "per_block_compute_ms") {
        m.per_block_compute_ms = ps.real(value);
      } else if (key == "prefill_ms_per_token") {
        m.prefill_ms_per_token = ps.real(value);
      } else {
        ps.fail("unknown key");
      }
      continue;
    }
    auto it = table[section].find(key);
    if (it == table[section].end()) ps.fail("unknown key");
    it->second(ps, value);
  }

  // Whole-config checks.
  if (cfg.models.empty()) throw ConfigError("config defines no [model <id>] section");
  for (const auto& m : cfg.models) {
    try {
      validate_model(m);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("config [model ") + m.model_id + "]: " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config ") + e.what());
  }
  if (o.k < 1) throw ConfigError("config key 'run.k': must be >= 1");
  if (o.batch_size < 1) throw ConfigError("config key 'run.batch_size': must be >= 1");
  if (!(o.throughput_window_s > 0))
    throw ConfigError("config key 'run.throughput_window_s': must be > 0");
  if (!(o.elbow_threshold > 0 && o.elbow_threshold < 1))
    throw ConfigError("config key 'run.elbow_threshold': must be in (0, 1)");
  if (p.capacity_per_replica < 1)
    throw ConfigError("config key 'policy.capacity_per_replica': must be >= 1");
  if (p.keep_alive_s < 0) throw ConfigError("config key 'policy.keep_alive_s': must be >= 0");
  if (p.eval_interval_s < 0)
    throw ConfigError("config key 'policy.eval_interval_s': must be >= 0");

  if (!cfg.trace_path.empty()) {
    std::filesystem::path tp(cfg.trace_path);
    if (tp.is_relative()) tp = std::filesystem::path(base_dir) / tp;
    if (!std::filesystem::exists(tp))
      throw ConfigError("config key 'run.trace': file '" + tp.string() + "' does not exist");
    cfg.trace_path = tp.string();
  }
  if (have_synth) {
    if (!models_listed) burst.models = {cfg.models.front().model_id};
    cfg.synth = burst;
  }
  cfg.plan_model();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  auto dir = std::filesystem::path(path).parent_path();
  return parse_config(in, dir.empty() ? "." : dir.string());
}

std::vector<TraceRecord> build_trace(const RunConfig& cfg) {
  if (!cfg.trace_path.empty()) return load_trace(cfg.trace_path, {}, cfg.sort_trace);
  if (cfg.synth) {
    BurstSpec b = *cfg.synth;
    b.seed = cfg.seed;
    return synth_burst(b);
  }
  return {};
}

}  // namespace scalecast
