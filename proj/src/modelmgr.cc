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

#include "scalecast/modelmgr.h"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace scalecast {

const char* to_string(Tier t) {
  switch (t) {
    case Tier::kGpu: return "GPU";
    case Tier::kMemory: return "MEMORY";
    case Tier::kSsd: return "SSD";
    case Tier::kNull: return "NULL";
  }
  return "NULL";
}

Tier parse_tier(const std::string& s) {
  if (s == "GPU") return Tier::kGpu;
  if (s == "MEMORY") return Tier::kMemory;
  if (s == "SSD") return Tier::kSsd;
  if (s == "NULL") return Tier::kNull;
  throw InvalidArgument("unknown tier '" + s + "'");
}

Tier best_tier(const TierSnapshot& snap, NodeId node, const std::string& model_id,
               int block_count) {
  Tier best = Tier::kNull;
  for (const Residency& r : snap)
    if (r.node == node && r.model_id == model_id && r.blocks_resident >= block_count &&
        r.tier < best)
      best = r.tier;
  return best;
}

std::string snapshot_to_csv(const TierSnapshot& snap) {
  std::ostringstream os;
  os << "node,model,tier,blocks_resident,last_use_s\n";
  char buf[32];
  for (const Residency& r : snap) {
    std::snprintf(buf, sizeof buf, "%.9f", r.last_use_s);
    os << r.node << ',' << r.model_id << ',' << to_string(r.tier) << ',' << r.blocks_resident
       << ',' << buf << '\n';
  }
  return os.str();
}

TierSnapshot parse_snapshot(std::istream& is) {
  TierSnapshot out;
  std::string line;
  std::getline(is, line);  // header
  for (int row = 2; std::getline(is, line); ++row) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string node, model, tier, blocks, last;
    if (!std::getline(ls, node, ',') || !std::getline(ls, model, ',') ||
        !std::getline(ls, tier, ',') || !std::getline(ls, blocks, ',') ||
        !std::getline(ls, last))
      throw InputValidation("snapshot line " + std::to_string(row) + ": expected 5 fields");
    Residency r;
    try {
      r.node = std::stoi(node);
      r.blocks_resident = std::stoi(blocks);
      r.last_use_s = std::stod(last);
    } catch (const std::logic_error&) {
      throw InputValidation("snapshot line " + std::to_string(row) + ": bad number");
    }
    r.model_id = model;
    r.tier = parse_tier(tier);
    out.push_back(std::move(r));
  }
  return out;
}

StartupPlan startup_plan(const ModelSpec& model, std::span<const NodeId> demand_nodes,
                         const TierSnapshot& snap, int k, int block_count) {
  if (demand_nodes.empty()) throw InvalidArgument("startup_plan: no demand nodes");
  if (k < 1) throw InvalidArgument("startup_plan: k must be >= 1");

  StartupPlan plan;
  for (NodeId n : demand_nodes) {
    switch (best_tier(snap, n, model.model_id, block_count)) {
      case Tier::kGpu: plan.hot.push_back(n); break;
      case Tier::kMemory: plan.warm.push_back(n); break;
      default: plan.cold.push_back(n); break;
    }
  }

  std::map<Tier, std::set<NodeId>> holders;
  for (const Residency& r : snap)
    if (r.model_id == model.model_id && r.blocks_resident >= block_count)
      holders[r.tier].insert(r.node);
  std::set<NodeId> chosen;
  for (Tier t : {Tier::kGpu, Tier::kMemory})
    for (NodeId n : holders[t]) {
      if (static_cast<int>(plan.sources.size()) == k) break;
      if (chosen.insert(n).second) {
        plan.sources.push_back(n);
        plan.source_tiers.push_back(t);
      }
    }
  if (plan.sources.empty()) {
    if (holders[Tier::kSsd].empty())
      throw UnsatisfiableScaling("no copy of model " + model.model_id +
                                 " in GPU, host memory or SSD");
    // Prefer an SSD holder that is also a cold demand node.
    NodeId pick = *holders[Tier::kSsd].begin();
    for (NodeId n : plan.cold)
      if (holders[Tier::kSsd].count(n)) {
        pick = n;
        break;
      }
    plan.sources.push_back(pick);
    plan.source_tiers.push_back(Tier::kSsd);
  }

  if (!plan.warm.empty())
    plan.warm_orders = k_way_orders(block_count, static_cast<int>(plan.warm.size()));
  return plan;
}

std::vector<Eviction> evict(const TierSnapshot& snap, double now_s, const EvictionPolicy& policy) {
  std::vector<Eviction> out;
  std::vector<char> gone(snap.size(), 0);
  for (std::size_t i = 0; i < snap.size(); ++i) {
    const Residency& r = snap[i];
    if (r.pinned) continue;
    double ka = r.tier == Tier::kGpu      ? policy.gpu_keep_alive_s
                : r.tier == Tier::kMemory ? policy.memory_keep_alive_s
                                          : -1.0;
    if (ka < 0) continue;
    if (now_s - r.last_use_s >= ka) {
      out.push_back({r.node, r.model_id, r.tier, Eviction::Reason::kKeepAlive});
      gone[i] = 1;
    }
  }

  // (node, tier) -> surviving entry indices.
  std::map<std::pair<NodeId, Tier>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < snap.size(); ++i)
    if (!gone[i] && (snap[i].tier == Tier::kGpu || snap[i].tier == Tier::kMemory))
      buckets[{snap[i].node, snap[i].tier}].push_back(i);
  for (auto& [key, idx] : buckets) {
    const Bytes cap = key.second == Tier::kGpu ? policy.gpu_capacity : policy.memory_capacity;
    Bytes used = 0;
    for (auto i : idx) used += snap[i].bytes;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return snap[a].last_use_s < snap[b].last_use_s;
    });
    for (auto i : idx) {
      if (used <= cap) break;
      if (snap[i].pinned) continue;
      used -= snap[i].bytes;
      out.push_back({snap[i].node, snap[i].model_id, snap[i].tier, Eviction::Reason::kCapacity});
    }
  }
  return out;
}

std::vector<Eviction> evict(const TierSnapshot& snap, double now_s, double keep_alive_s,
                            Bytes gpu_capacity, Bytes memory_capacity) {
  return evict(snap, now_s, EvictionPolicy{keep_alive_s, keep_alive_s, gpu_capacity,
                                           memory_capacity});
}

void apply_evictions(TierSnapshot& snap, const std::vector<Eviction>& ev) {
  std::erase_if(snap, [&](const Residency& r) {
    return std::any_of(ev.begin(), ev.end(), [&](const Eviction& e) {
      return e.node == r.node && e.model_id == r.model_id && e.tier == r.tier;
    });
  });
}

LoadMix miss_ratio(const std::vector<TraceRecord>& trace, const CacheConfig& cfg,
                   double keep_alive_s) {
  if (cfg.gpu_slots < 0 || cfg.memory_slots < 0)
    throw InvalidArgument("cache slots must be >= 0");
  // Every model counts as one byte so capacities are slot counts.
  TierSnapshot snap;
  LoadMix mix;
  auto has = [&](const std::string& m, Tier t) {
    return std::any_of(snap.begin(), snap.end(),
                       [&](const Residency& r) { return r.model_id == m && r.tier == t; });
  };
  const EvictionPolicy policy{keep_alive_s, keep_alive_s, static_cast<Bytes>(cfg.gpu_slots),
                              static_cast<Bytes>(cfg.memory_slots)};
  for (const TraceRecord& req : trace) {
    const double t = req.arrival_s;
    apply_evictions(snap, evict(snap, t, EvictionPolicy{keep_alive_s, keep_alive_s,
                                                        std::numeric_limits<Bytes>::max(),
                                                        std::numeric_limits<Bytes>::max()}));
    if (has(req.model_id, Tier::kGpu))
      ++mix.hot;
    else if (has(req.model_id, Tier::kMemory))
      ++mix.memory;
    else
      ++mix.ssd;
    for (Tier tier : {Tier::kGpu, Tier::kMemory}) {
      if (!has(req.model_id, tier)) snap.push_back({0, req.model_id, tier, 1, t, 1, false});
    }
    for (Residency& r : snap)
      if (r.model_id == req.model_id) r.last_use_s = t;
    apply_evictions(snap, evict(snap, t, policy));
  }
  return mix;
}

MemoryLayout pack_layout(const BlockPlan& plan, Bytes working_set, Bytes device_capacity,
                         Bytes staging_bytes) {
  MemoryLayout layout;
  Bytes offset = 0;
  for (const Block& b : plan.blocks) {
    layout.regions.push_back({b.id, offset, b.size_bytes});
    offset += b.size_bytes;
  }
  layout.model_bytes = offset;
  layout.activation_buffer_bytes = working_set;
  layout.staging_buffer_bytes = staging_bytes;
  const Bytes total = layout.total_bytes();
  if (total > device_capacity) {
    const Bytes deficit = total - device_capacity;
    throw CapacityError("layout needs " + std::to_string(total) + " bytes but the device has " +
                            std::to_string(device_capacity) + " (short by " +
                            std::to_string(deficit) + ")",
                        deficit);
  }
  return layout;
}

}  // namespace scalecast
