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

#include "scalecast/event_log.h"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "scalecast/common.h"

namespace scalecast {

namespace {

constexpr const char* kNames[] = {
    "transfer_step_done", "load_chunk_done", "stage_tick_done", "token_emitted",
    "request_done",       "mode_switch",     "request_arrival", "scale_out",
    "scale_in",           "eviction",        "sim_end",
};

}  // namespace

const char* to_string(EventKind kind) { return kNames[static_cast<int>(kind)]; }

std::optional<EventKind> parse_event_kind(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(EventKind::kSimEnd); ++i)
    if (s == kNames[i]) return static_cast<EventKind>(i);
  return std::nullopt;
}

const std::string* LogRecord::find(const std::string& key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return &v;
  return nullptr;
}

long long LogRecord::get_int(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw IncompleteLog(std::string(to_string(kind)) + " record lacks '" + key + "'");
  return std::strtoll(v->c_str(), nullptr, 10);
}

std::string format_record(const LogRecord& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", r.time_s);
  std::string out = buf;
  out += ',';
  out += to_string(r.kind);
  for (const auto& [k, v] : r.fields) {
    out += ',';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

LogRecord parse_record(const std::string& line) {
  LogRecord r;
  std::size_t pos = 0;
  auto next = [&]() {
    std::size_t end = line.find(',', pos);
    std::string tok = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? line.size() + 1 : end + 1;
    return tok;
  };
  std::string t = next();
  char* end = nullptr;
  r.time_s = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') throw InputValidation("bad log time: '" + line + "'");
  auto kind = parse_event_kind(next());
  if (!kind) throw InputValidation("bad log kind: '" + line + "'");
  r.kind = *kind;
  while (pos <= line.size()) {
    std::string f = next();
    auto eq = f.find('=');
    if (eq == std::string::npos) throw InputValidation("bad log field '" + f + "'");
    r.fields.emplace_back(f.substr(0, eq), f.substr(eq + 1));
  }
  return r;
}

void write_log(std::ostream& os, const std::vector<LogRecord>& log) {
  for (const LogRecord& r : log) os << format_record(r) << '\n';
}

std::vector<LogRecord> read_log(std::istream& is) {
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(parse_record(line));
  return out;
}

}  // namespace scalecast
