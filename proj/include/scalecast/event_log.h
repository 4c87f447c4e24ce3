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

// Simulator event log records and their text form
// (`time_s,kind,key=value,...`).

#ifndef SCALECAST_EVENT_LOG_H_
#define SCALECAST_EVENT_LOG_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scalecast/common.h"

namespace scalecast {

// Declaration order is the tie-break rank for events at equal times.
enum class EventKind {
  kTransferStepDone,
  kLoadChunkDone,
  kStageTickDone,
  kTokenEmitted,
  kRequestDone,
  kModeSwitch,
  kRequestArrival,
  kScaleOut,
  kScaleIn,
  kEviction,
  kSimEnd,
};

const char* to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(const std::string& s);

struct LogRecord {
  double time_s = 0.0;
  EventKind kind = EventKind::kSimEnd;
  std::vector<std::pair<std::string, std::string>> fields;

  // Value of `key`, or nullptr.
  const std::string* find(const std::string& key) const;
  // Integer value of `key`; throws IncompleteLog if missing.
  long long get_int(const std::string& key) const;
};

std::string format_record(const LogRecord& r);
LogRecord parse_record(const std::string& line);

void write_log(std::ostream& os, const std::vector<LogRecord>& log);
std::vector<LogRecord> read_log(std::istream& is);

}  // namespace scalecast

#endif  // SCALECAST_EVENT_LOG_H_
