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

#include "scalecast/workload.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "scalecast/common.h"

namespace scalecast {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

std::vector<TraceRecord> parse_trace(std::istream& is, const ColumnMapping& columns,
                                     bool sort_unsorted) {
  std::string line;
  if (!std::getline(is, line)) throw InputValidation("trace is empty (no header)");
  auto header = split(line, ',');
  for (auto& h : header) h = trim(h);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputValidation("trace header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ca = col(columns.arrival), cm = col(columns.model),
                    cp = col(columns.prompt), co = col(columns.output);

  std::vector<TraceRecord> out;
  bool sorted = true;
  for (int row = 2; std::getline(is, line); ++row) {
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    auto bad = [&](const std::string& why) {
      return InputValidation("trace line " + std::to_string(row) + ": " + why);
    };
    if (cells.size() != header.size())
      throw bad("expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(cells.size()));
    TraceRecord r;
    try {
      std::size_t used = 0;
      std::string a = trim(cells[ca]);
      r.arrival_s = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      std::string p = trim(cells[cp]);
      r.prompt_tokens = std::stoi(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      std::string o = trim(cells[co]);
      r.output_tokens = std::stoi(o, &used);
      if (used != o.size()) throw std::invalid_argument(o);
    } catch (const std::logic_error&) {
      throw bad("unparseable number");
    }
    r.model_id = trim(cells[cm]);
    if (r.model_id.empty()) throw bad("empty model_id");
    if (!std::isfinite(r.arrival_s) || r.arrival_s < 0) throw bad("arrival_s must be >= 0");
    if (r.prompt_tokens < 1) throw bad("prompt_tokens must be >= 1");
    if (r.output_tokens < 1) throw bad("output_tokens must be >= 1");
    if (!out.empty() && r.arrival_s < out.back().arrival_s) {
      if (!sort_unsorted) throw bad("arrival_s goes backwards (trace must be sorted)");
      sorted = false;
    }
    out.push_back(std::move(r));
  }
  if (!sorted)
    std::stable_sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) {
      return a.arrival_s < b.arrival_s;
    });
  if (!out.empty()) {
    const double t0 = out.front().arrival_s;
    for (auto& r : out) r.arrival_s -= t0;
  }
  return out;
}

std::vector<TraceRecord> load_trace(const std::string& path, const ColumnMapping& columns,
                                    bool sort_unsorted) {
  std::ifstream in(path);
  if (!in) throw InputValidation("cannot open trace '" + path + "'");
  return parse_trace(in, columns, sort_unsorted);
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream os;
  os << "arrival_s,model_id,prompt_tokens,output_tokens\n";
  for (const auto& r : trace)
    os << fmt(r.arrival_s) << ',' << r.model_id << ',' << r.prompt_tokens << ','
       << r.output_tokens << '\n';
  return os.str();
}

std::vector<TraceRecord> synth_burst(const BurstSpec& spec) {
  if (!(spec.base_rps > 0)) throw InvalidArgument("base_rps must be > 0");
  if (spec.spike_rps < spec.base_rps) throw InvalidArgument("spike_rps must be >= base_rps");
  if (spec.models.empty()) throw InvalidArgument("synth_burst needs at least one model");
  if (!spec.model_weights.empty() && spec.model_weights.size() != spec.models.size())
    throw InvalidArgument("model_weights must match models");
  const auto& tk = spec.tokens;
  if (tk.prompt_min < 1 || tk.prompt_max < tk.prompt_min || tk.output_min < 1 ||
      tk.output_max < tk.output_min)
    throw InvalidArgument("bad token distribution");

  // Rate breakpoints.
  std::vector<std::pair<double, double>> spikes;
  if (spec.spike_duration_s > 0)
    for (double t : spec.spike_times) spikes.emplace_back(t, t + spec.spike_duration_s);
  auto rate_at = [&](double t) {
    for (auto [a, b] : spikes)
      if (t >= a && t < b) return spec.spike_rps;
    return spec.base_rps;
  };
  auto next_change = [&](double t) {
    double n = spec.duration_s;
    for (auto [a, b] : spikes) {
      if (a > t) n = std::min(n, a);
      if (b > t) n = std::min(n, b);
    }
    return n;
  };

  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_int_distribution<int> prompt(tk.prompt_min, tk.prompt_max);
  std::uniform_int_distribution<int> output(tk.output_min, tk.output_max);
  std::vector<double> weights = spec.model_weights;
  if (weights.empty()) weights.assign(spec.models.size(), 1.0);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  std::vector<TraceRecord> out;
  double t = 0.0;
  while (t < spec.duration_s) {
    const double rate = rate_at(t);
    const double boundary = next_change(t);
    const double gap = unit_exp(rng) / rate;
    if (t + gap >= boundary) {
      // Memoryless: restart the draw at the rate change.
      t = boundary;
      continue;
    }
    t += gap;
    TraceRecord r;
    r.arrival_s = t;
    r.model_id = spec.models[pick(rng)];
    r.prompt_tokens = prompt(rng);
    r.output_tokens = output(rng);
    out.push_back(std::move(r));
  }
  return out;
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  long rank = static_cast<long>(std::ceil(p / 100.0 * n));
  rank = std::clamp(rank, 1L, static_cast<long>(samples.size()));
  return samples[rank - 1];
}

MetricsReport aggregate(const std::vector<LogRecord>& log, const std::string& label,
                        double window_s) {
  if (window_s <= 0) throw InvalidArgument("throughput window must be > 0");
  if (log.empty() || log.back().kind != EventKind::kSimEnd)
    throw IncompleteLog("event log does not end with sim_end");

  MetricsReport m;
  m.label = label;
  m.end_time_s = log.back().time_s;

  std::map<long long, RequestMetrics> reqs;
  std::vector<double> token_times;
  std::set<std::string> new_nodes;
  bool have_scale_out = false;
  double first_arrival = -1.0, first_served = -1.0;

  for (const LogRecord& r : log) {
    switch (r.kind) {
      case EventKind::kRequestArrival: {
        auto id = r.get_int("request");
        reqs[id] = {id, r.time_s, -1.0, -1.0};
        if (first_arrival < 0) first_arrival = r.time_s;
        break;
      }
      case EventKind::kTokenEmitted: {
        auto it = reqs.find(r.get_int("request"));
        if (it == reqs.end()) throw IncompleteLog("token for a request that never arrived");
        if (it->second.ttft_s < 0) it->second.ttft_s = r.time_s - it->second.arrival_s;
        token_times.push_back(r.time_s);
        if (first_served < 0 && have_scale_out) {
          if (const std::string* nodes = r.find("nodes"))
            for (const auto& n : split(*nodes, ';'))
              if (new_nodes.count(n)) first_served = r.time_s;
        }
        break;
      }
      case EventKind::kRequestDone: {
        auto it = reqs.find(r.get_int("request"));
        if (it == reqs.end()) throw IncompleteLog("completion for a request that never arrived");
        it->second.completion_s = r.time_s;
        break;
      }
      case EventKind::kScaleOut:
      case EventKind::kScaleIn: {
        int gpus = static_cast<int>(r.get_int("allocated_gpus"));
        if (!m.allocation.empty() && m.allocation.back().first == r.time_s)
          m.allocation.back().second = gpus;
        else
          m.allocation.emplace_back(r.time_s, gpus);
        if (r.kind == EventKind::kScaleOut && !have_scale_out) {
          const std::string* init = r.find("initial");
          if (!init || *init != "1") {
            have_scale_out = true;
            if (const std::string* nodes = r.find("nodes"))
              for (const auto& n : split(*nodes, ';')) new_nodes.insert(n);
          }
        }
        break;
      }
      default:
        break;
    }
  }

  for (const auto& [id, rm] : reqs) {
    m.requests.push_back(rm);
    if (rm.ttft_s >= 0) m.ttft_samples.push_back(rm.ttft_s);
  }
  m.p50 = percentile(m.ttft_samples, 50);
  m.p90 = percentile(m.ttft_samples, 90);
  m.p99 = percentile(m.ttft_samples, 99);
  m.total_tokens = static_cast<long long>(token_times.size());

  const long windows = static_cast<long>(std::ceil(m.end_time_s / window_s));
  std::vector<long> counts(std::max(windows, 0L), 0);
  for (double t : token_times) {
    long w = static_cast<long>(std::floor(t / window_s));
    if (w >= static_cast<long>(counts.size())) w = static_cast<long>(counts.size()) - 1;
    if (w >= 0) ++counts[w];
  }
  for (std::size_t i = 0; i < counts.size(); ++i)
    m.throughput.emplace_back(i * window_s, counts[i] / window_s);

  for (std::size_t i = 0; i < m.allocation.size(); ++i) {
    double until = i + 1 < m.allocation.size() ? m.allocation[i + 1].first : m.end_time_s;
    m.gpu_seconds += m.allocation[i].second * std::max(0.0, until - m.allocation[i].first);
  }
  if (first_served >= 0 && first_arrival >= 0)
    m.time_to_first_served_s = first_served - first_arrival;
  return m;
}

std::string requests_to_csv(const MetricsReport& m) {
  std::ostringstream os;
  os << "request_id,arrival_s,ttft_s,completion_s\n";
  for (const auto& r : m.requests)
    os << r.request_id << ',' << fmt(r.arrival_s) << ',' << fmt(r.ttft_s) << ','
       << fmt(r.completion_s) << '\n';
  return os.str();
}

std::string throughput_to_csv(const MetricsReport& m) {
  std::ostringstream os;
  os << "time_s,tokens_per_s\n";
  for (auto [t, v] : m.throughput) os << fmt(t) << ',' << fmt(v) << '\n';
  return os.str();
}

std::string allocation_to_csv(const MetricsReport& m) {
  std::ostringstream os;
  os << "time_s,allocated_gpus\n";
  for (auto [t, g] : m.allocation) os << fmt(t) << ',' << g << '\n';
  return os.str();
}

std::string summary_to_text(const MetricsReport& m) {
  std::ostringstream os;
  os << "label=" << m.label << '\n'
     << "requests=" << m.requests.size() << '\n'
     << "ttft_samples=" << m.ttft_samples.size() << '\n'
     << "ttft_p50_s=" << fmt(m.p50) << '\n'
     << "ttft_p90_s=" << fmt(m.p90) << '\n'
     << "ttft_p99_s=" << fmt(m.p99) << '\n'
     << "gpu_seconds=" << fmt(m.gpu_seconds) << '\n'
     << "total_tokens=" << m.total_tokens << '\n'
     << "time_to_first_served_s=" << fmt(m.time_to_first_served_s) << '\n'
     << "end_time_s=" << fmt(m.end_time_s) << '\n';
  return os.str();
}

}  // namespace scalecast
