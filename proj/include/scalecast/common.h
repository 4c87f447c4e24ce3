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

#ifndef SCALECAST_COMMON_H_
#define SCALECAST_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scalecast {

using NodeId = int;
using BlockId = int;
using Bytes = std::uint64_t;

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ScheduleInvalid : public Error {
 public:
  ScheduleInvalid(const std::string& what, int step, NodeId node, BlockId block)
      : Error(what), step_(step), node_(node), block_(block) {}
  int step() const { return step_; }
  NodeId node() const { return node_; }
  BlockId block() const { return block_; }

 private:
  int step_;
  NodeId node_;
  BlockId block_;
};

class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

class UnsatisfiableScaling : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, Bytes deficit)
      : Error(what), deficit_(deficit) {}
  Bytes deficit() const { return deficit_; }

 private:
  Bytes deficit_;
};

class InputValidation : public Error {
 public:
  using Error::Error;
};

class IncompleteLog : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Ceiling of log2(n) for n >= 1.
inline int ceil_log2(long long n) {
  int d = 0;
  while ((1LL << d) < n) ++d;
  return d;
}

inline bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace scalecast

#endif  // SCALECAST_COMMON_H_
