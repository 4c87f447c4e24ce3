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

// Reference computations used by the tests. None of them call into the
// library under test.

#ifndef SCALECAST_TESTS_ORACLES_H_
#define SCALECAST_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace scalecast::oracle {

// Minimum number of steps to spread b blocks from node 0 to L-1 receivers when
// every node sends at most one block and receives at most one block per step.
// Breadth-first search over per-node residency masks.
inline int min_broadcast_steps(int L, int b) {
  const std::uint32_t full = (1u << b) - 1;
  using State = std::vector<std::uint32_t>;
  State start(L, 0);
  start[0] = full;
  std::set<State> seen{start};
  std::deque<std::pair<State, int>> q{{start, 0}};
  while (!q.empty()) {
    auto [s, d] = q.front();
    q.pop_front();
    if (std::all_of(s.begin(), s.end(), [&](std::uint32_t m) { return m == full; })) return d;
    // Assign each receiver r = 1..L-1 either nothing or (sender, block),
    // senders distinct.
    std::vector<char> sender_used(L, 0);
    State next = s;
    auto rec = [&](auto&& self, int r) -> void {
      if (r == L) {
        if (next != s && seen.insert(next).second) q.push_back({next, d + 1});
        return;
      }
      self(self, r + 1);
      for (int u = 0; u < L; ++u) {
        if (u == r || sender_used[u]) continue;
        for (int blk = 0; blk < b; ++blk) {
          const std::uint32_t bit = 1u << blk;
          if (!(s[u] & bit) || (s[r] & bit)) continue;
          sender_used[u] = 1;
          next[r] = s[r] | bit;
          self(self, r + 1);
          next[r] = s[r];
          sender_used[u] = 0;
        }
      }
    };
    rec(rec, 1);
  }
  return -1;
}

// (b + ceil(log2 N) - 1) * (overhead + M / (b * bw)).
inline double multicast_time(double model_bytes, int n, int b, double overhead, double bw) {
  int d = 0;
  while ((1 << d) < n) ++d;
  return (b + d - 1) * (overhead + model_bytes / (b * bw));
}

// Plain LRU replay of one node: `slots` models fit; every access that misses
// counts, and the accessed model becomes most recent.
inline int lru_misses(const std::vector<std::string>& accesses, int slots) {
  std::list<std::string> lru;
  int misses = 0;
  for (const auto& m : accesses) {
    auto it = std::find(lru.begin(), lru.end(), m);
    if (it == lru.end()) {
      ++misses;
      lru.push_front(m);
      if (static_cast<int>(lru.size()) > slots) lru.pop_back();
    } else {
      lru.splice(lru.begin(), lru, it);
    }
  }
  return misses;
}

// Integral of a right-continuous step function (time, value) up to `end`.
inline double step_integral(std::vector<std::pair<double, int>> pts, double end) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double t1 = i + 1 < pts.size() ? pts[i + 1].first : end;
    area += pts[i].second * (std::min(t1, end) - pts[i].first);
  }
  return area;
}

// Sorted-sample nearest rank: the ceil(p/100 * n)-th smallest value.
inline double nearest_rank(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * v.size()));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace scalecast::oracle

#endif  // SCALECAST_TESTS_ORACLES_H_
