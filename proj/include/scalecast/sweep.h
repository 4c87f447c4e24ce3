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

// Parameter sweeps: one independent simulation per (axis value, strategy).

#ifndef SCALECAST_SWEEP_H_
#define SCALECAST_SWEEP_H_

#include <string>
#include <vector>

#include "scalecast/config.h"
#include "scalecast/simengine.h"

namespace scalecast {

enum class SweepAxis { kBlocks, kSources, kBlockOverhead };

const char* to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& s);

// Copy of `cfg` with the axis set to `value`. The k axis also places the
// plan model on GPU nodes 0..k-1 so that k sources exist.
RunConfig apply_axis(const RunConfig& cfg, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  Strategy strategy = Strategy::kLambdaScale;
  int block_count = 0;
  double modeled_multicast_s = 0.0;
  SimResult result;
};

// Row order is value-major, then strategy in config order, for both variants.
// The parallel runner spreads runs over OpenMP threads; the serial one is the
// reference it is checked against.
std::vector<SweepRow> run_sweep_serial(const RunConfig& cfg, SweepAxis axis,
                                       const std::vector<double>& values,
                                       const std::vector<TraceRecord>& trace);
std::vector<SweepRow> run_sweep_parallel(const RunConfig& cfg, SweepAxis axis,
                                         const std::vector<double>& values,
                                         const std::vector<TraceRecord>& trace);

// Table with one line per row; for the b axis the elbow selection is appended
// as a trailing `# elbow_b=` line.
std::string sweep_to_csv(const RunConfig& cfg, SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace scalecast

#endif  // SCALECAST_SWEEP_H_
