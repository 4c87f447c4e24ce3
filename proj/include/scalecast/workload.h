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

// Request traces (CSV and synthetic) and metric aggregation over event logs.

#ifndef SCALECAST_WORKLOAD_H_
#define SCALECAST_WORKLOAD_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "scalecast/common.h"
#include "scalecast/event_log.h"

namespace scalecast {

struct TraceRecord {
  double arrival_s = 0.0;
  std::string model_id;
  int prompt_tokens = 1;
  int output_tokens = 1;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Header names for each field.
struct ColumnMapping {
  std::string arrival = "arrival_s";
  std::string model = "model_id";
  std::string prompt = "prompt_tokens";
  std::string output = "output_tokens";
};

// Parses a header + rows CSV. Arrival times are shifted so the first record
// is at 0. Unsorted input is rejected unless `sort_unsorted` is set.
// Errors name the 1-based line number.
std::vector<TraceRecord> parse_trace(std::istream& is, const ColumnMapping& columns = {},
                                     bool sort_unsorted = false);
std::vector<TraceRecord> load_trace(const std::string& path, const ColumnMapping& columns = {},
                                    bool sort_unsorted = false);

std::string trace_to_csv(const std::vector<TraceRecord>& trace);

// Uniform integer token counts.
struct TokenDistribution {
  int prompt_min = 64;
  int prompt_max = 256;
  int output_min = 8;
  int output_max = 32;
};

struct BurstSpec {
  double base_rps = 1.0;
  double spike_rps = 10.0;
  std::vector<double> spike_times;
  double spike_duration_s = 0.0;
  double duration_s = 60.0;
  std::vector<std::string> models = {"model"};
  // Relative pick weight per model; empty means uniform.
  std::vector<double> model_weights;
  TokenDistribution tokens;
  std::uint64_t seed = 0;
};

// Piecewise-constant Poisson arrivals: base_rps everywhere, spike_rps inside
// [t, t + spike_duration_s) for each spike time.
std::vector<TraceRecord> synth_burst(const BurstSpec& spec);

// Nearest-rank percentile of an unsorted sample; 0 for an empty sample.
double percentile(std::vector<double> samples, double p);

struct RequestMetrics {
  long long request_id = 0;
  double arrival_s = 0.0;
  double ttft_s = -1.0;        // -1: no token emitted
  double completion_s = -1.0;  // -1: not finished
};

struct MetricsReport {
  std::string label;
  std::vector<RequestMetrics> requests;
  std::vector<double> ttft_samples;
  double p50 = 0.0, p90 = 0.0, p99 = 0.0;
  std::vector<std::pair<double, double>> throughput;  // (window start, tokens/s)
  std::vector<std::pair<double, int>> allocation;     // (time, allocated GPUs)
  double gpu_seconds = 0.0;
  long long total_tokens = 0;
  // First token served by capacity added through the first non-initial
  // scale-out, measured from the first arrival; -1 if none.
  double time_to_first_served_s = -1.0;
  double end_time_s = 0.0;
};

// Rebuilds the metrics from a complete log (one ending in sim_end).
MetricsReport aggregate(const std::vector<LogRecord>& log, const std::string& label = "",
                        double window_s = 0.1);

std::string requests_to_csv(const MetricsReport& m);
std::string throughput_to_csv(const MetricsReport& m);
std::string allocation_to_csv(const MetricsReport& m);
std::string summary_to_text(const MetricsReport& m);

}  // namespace scalecast

#endif  // SCALECAST_WORKLOAD_H_
