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

// Command-line front end: plan, simulate, sweep, report.

#ifndef SCALECAST_CLI_H_
#define SCALECAST_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "scalecast/config.h"
#include "scalecast/sweep.h"

namespace scalecast {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// Writes schedule.csv, pipelines.csv and summary.txt under out_dir and
// echoes the summary to `out`.
void cmd_plan(const RunConfig& cfg, const std::string& out_dir, std::ostream& out);

// One run per strategy; each writes <out_dir>/<strategy>/{events.log,
// requests.csv, throughput.csv, allocation.csv, summary.txt}.
void cmd_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& out);

// Writes <out_dir>/sweep.csv plus per-run metrics under
// <out_dir>/sweep/<axis>_<value>/<strategy>/.
void cmd_sweep(const RunConfig& cfg, SweepAxis axis, const std::vector<double>& values,
               const std::string& out_dir, std::ostream& out);

// Re-aggregates every <out_dir>/<strategy>/events.log into report.csv and
// ttft_cdf.csv.
void cmd_report(const std::string& out_dir, double window_s, std::ostream& out);

// Full argument handling; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scalecast

#endif  // SCALECAST_CLI_H_
