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

// Model residency across storage tiers: startup classification, keep-alive /
// LRU eviction, cache replay and packed memory layouts.

#ifndef SCALECAST_MODELMGR_H_
#define SCALECAST_MODELMGR_H_

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scalecast/common.h"
#include "scalecast/multicast.h"
#include "scalecast/workload.h"

namespace scalecast {

enum class Tier { kGpu, kMemory, kSsd, kNull };

const char* to_string(Tier t);
Tier parse_tier(const std::string& s);

struct Residency {
  NodeId node = 0;
  std::string model_id;
  Tier tier = Tier::kNull;
  int blocks_resident = 0;
  double last_use_s = 0.0;
  Bytes bytes = 0;
  bool pinned = false;  // multicast source; never evicted
};

using TierSnapshot = std::vector<Residency>;

// Fastest tier holding all `block_count` blocks of the model on the node.
Tier best_tier(const TierSnapshot& snap, NodeId node, const std::string& model_id,
               int block_count);

// `node,model,tier,blocks_resident,last_use_s`, with header.
std::string snapshot_to_csv(const TierSnapshot& snap);
TierSnapshot parse_snapshot(std::istream& is);

struct StartupPlan {
  std::vector<NodeId> hot;   // GPU-resident; serve immediately
  std::vector<NodeId> warm;  // host memory; load over host-to-GPU
  std::vector<NodeId> cold;  // multicast receivers
  std::vector<NodeId> sources;
  std::vector<Tier> source_tiers;
  // Load order per warm node (k-way over the warm set).
  std::vector<std::vector<BlockId>> warm_orders;
};

// Classifies demand nodes and picks up to k multicast sources anywhere in the
// snapshot: GPU copies first, then host-memory copies, by node id. With
// neither, a single SSD holder becomes the source. Throws UnsatisfiableScaling
// when no copy exists at all.
StartupPlan startup_plan(const ModelSpec& model, std::span<const NodeId> demand_nodes,
                         const TierSnapshot& snap, int k, int block_count);

struct EvictionPolicy {
  double gpu_keep_alive_s = std::numeric_limits<double>::infinity();
  double memory_keep_alive_s = std::numeric_limits<double>::infinity();
  Bytes gpu_capacity = std::numeric_limits<Bytes>::max();     // per node
  Bytes memory_capacity = std::numeric_limits<Bytes>::max();  // per node
};

struct Eviction {
  enum class Reason { kKeepAlive, kCapacity };
  NodeId node = 0;
  std::string model_id;
  Tier tier = Tier::kNull;
  Reason reason = Reason::kKeepAlive;
};

// Entries idle >= keep-alive go first; then, per node and tier, least
// recently used entries until the tier fits its capacity. SSD entries and
// pinned entries are never evicted.
std::vector<Eviction> evict(const TierSnapshot& snap, double now_s, const EvictionPolicy& policy);
// Same keep-alive for both tiers.
std::vector<Eviction> evict(const TierSnapshot& snap, double now_s, double keep_alive_s,
                            Bytes gpu_capacity, Bytes memory_capacity);

void apply_evictions(TierSnapshot& snap, const std::vector<Eviction>& ev);

struct CacheConfig {
  int gpu_slots = 1;
  int memory_slots = 3;
};

struct LoadMix {
  long hot = 0, memory = 0, ssd = 0;

  long total() const { return hot + memory + ssd; }
  double hot_fraction() const { return total() ? double(hot) / total() : 0.0; }
  double memory_fraction() const { return total() ? double(memory) / total() : 0.0; }
  double ssd_fraction() const { return total() ? double(ssd) / total() : 0.0; }
};

// Replays a trace through one node's cache. A GPU hit is hot; otherwise a
// host-memory copy means a memory load, else an SSD load. Loads fill both
// tiers; keep-alive applies to both; each tier is LRU within its slot count.
LoadMix miss_ratio(const std::vector<TraceRecord>& trace, const CacheConfig& cfg,
                   double keep_alive_s);

struct Region {
  BlockId block = 0;
  Bytes offset = 0;
  Bytes length = 0;
};

struct MemoryLayout {
  std::vector<Region> regions;
  Bytes model_bytes = 0;
  Bytes activation_buffer_bytes = 0;
  Bytes staging_buffer_bytes = 0;

  Bytes total_bytes() const {
    return model_bytes + activation_buffer_bytes + staging_buffer_bytes;
  }
};

// One contiguous region per block in block order, plus fixed buffers. Throws
// CapacityError (with the deficit) when the total exceeds device_capacity.
MemoryLayout pack_layout(const BlockPlan& plan, Bytes working_set, Bytes device_capacity,
                         Bytes staging_bytes = 0);

}  // namespace scalecast

#endif  // SCALECAST_MODELMGR_H_
