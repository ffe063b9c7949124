// Copyright 2026 The sketchsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Brute-force references shared by the unit tests and the acceptance run.
// They use only the topology and the transfer list, never the MILP code.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/topology.hpp"

namespace sketchsynth::testing {

// Exhaustive oracle for the relaxed objective: every chunk picks a delivery
// tree (any parent per reached rank), time is the larger of the deepest
// required arrival and the busiest link's summed latency.
inline double brute_force_routing(const Topology& t, const CollectiveSpec& spec, Megabytes s) {
  const int n = t.num_ranks();
  struct Option {
    Micros depth;
    std::vector<std::size_t> links;
  };
  std::vector<std::vector<Option>> options(static_cast<std::size_t>(spec.num_chunks));
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    const Rank src = spec.precondition[c][0];
    std::vector<Rank> parent(static_cast<std::size_t>(n), -1);
    std::function<void(Rank)> rec = [&](Rank r) {
      if (r == n) {
        Option o{0.0, {}};
        for (Rank v = 0; v < n; ++v) {
          if (v == src) continue;
          if (parent[v] < 0) {
            if (spec.in_postcondition(c, v)) return;
            continue;
          }
          Micros depth = 0.0;
          Rank at = v;
          int hops = 0;
          while (at != src) {
            if (parent[at] < 0 || ++hops > n) return;
            depth += t.link(parent[at], at).latency(s);
            at = parent[at];
          }
          o.links.push_back(*t.find_link(parent[v], v));
          if (spec.in_postcondition(c, v)) o.depth = std::max(o.depth, depth);
        }
        options[c].push_back(std::move(o));
        return;
      }
      if (r == src) return rec(r + 1);
      parent[r] = -1;
      rec(r + 1);
      for (Rank p = 0; p < n; ++p) {
        if (p != r && t.has_link(p, r)) {
          parent[r] = p;
          rec(r + 1);
        }
      }
      parent[r] = -1;
    };
    rec(0);
  }
  double best = kInfinity;
  std::vector<Micros> load(t.links().size(), 0.0);
  std::function<void(ChunkId, double)> pick = [&](ChunkId c, double current) {
    if (current >= best) return;
    if (c == spec.num_chunks) {
      best = current;
      return;
    }
    for (const Option& o : options[c]) {
      double next = std::max(current, o.depth);
      for (std::size_t li : o.links) {
        load[li] += t.links()[li].latency(s);
        next = std::max(next, load[li]);
      }
      pick(c + 1, next);
      for (std::size_t li : o.links) load[li] -= t.links()[li].latency(s);
    }
  };
  pick(0, 0.0);
  return best;
}

// Exhaustive grouping oracle: every split of every eligible link's chain into
// runs of at most `window`, timed by an independent earliest-start pass.
inline double brute_force_grouping(const std::vector<Transfer>& ts, const std::vector<int>& sequence, const Topology& t,
                            Megabytes s, int window, long* evaluated) {
  const std::size_t n = ts.size();
  std::map<std::pair<Rank, Rank>, std::vector<int>> chains;
  for (int i : sequence) chains[{ts[i].src, ts[i].dst}].push_back(i);
  std::vector<std::vector<int>> links;
  for (auto& [k, c] : chains) links.push_back(c);

  // Group id per transfer; cut[l][q] means positions q and q+1 of chain l split.
  std::vector<std::vector<bool>> cut(links.size());
  for (std::size_t l = 0; l < links.size(); ++l) cut[l].assign(links[l].size() > 0 ? links[l].size() - 1 : 0, true);

  auto time_of = [&]() -> double {
    std::vector<int> group(n, -1);
    std::vector<int> size;
    std::vector<std::vector<int>> order;  // per chain, group ids in order
    for (std::size_t l = 0; l < links.size(); ++l) {
      order.emplace_back();
      int run = 0;
      for (std::size_t q = 0; q < links[l].size(); ++q) {
        if (q == 0 || cut[l][q - 1]) {
          size.push_back(0);
          order.back().push_back(static_cast<int>(size.size()) - 1);
          run = 0;
        }
        if (++run > window) return kInfinity;
        group[static_cast<std::size_t>(links[l][q])] = static_cast<int>(size.size()) - 1;
        ++size.back();
      }
    }
    const std::size_t m = size.size();
    std::vector<double> lat(m);
    for (std::size_t i = 0; i < n; ++i) {
      const Link& l = t.link(ts[i].src, ts[i].dst);
      lat[static_cast<std::size_t>(group[i])] = l.alpha + l.beta * s * size[static_cast<std::size_t>(group[i])];
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (ts[j].chunk == ts[i].chunk && ts[j].dst == ts[i].src && ts[j].phase <= ts[i].phase) {
          if (group[j] == group[i]) return kInfinity;
          edges.emplace_back(group[j], group[i]);
        }
      }
    }
    for (const auto& o : order) {
      for (std::size_t k = 1; k < o.size(); ++k) edges.emplace_back(o[k - 1], o[k]);
    }
    std::vector<double> start(m, 0.0);
    for (std::size_t round = 0; round <= m; ++round) {
      bool changed = false;
      for (auto [a, b] : edges) {
        const double f = start[static_cast<std::size_t>(a)] + lat[static_cast<std::size_t>(a)];
        if (f > start[static_cast<std::size_t>(b)] + 1e-12) {
          start[static_cast<std::size_t>(b)] = f;
          changed = true;
        }
      }
      if (!changed) {
        double total = 0.0;
        for (std::size_t g = 0; g < m; ++g) total = std::max(total, start[g] + lat[g]);
        return total;
      }
    }
    return kInfinity;  // cyclic grouping
  };

  double best = kInfinity;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t l = 0; l < links.size(); ++l) {
    for (std::size_t q = 0; q < cut[l].size(); ++q) slots.emplace_back(l, q);
  }
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == slots.size()) {
      ++*evaluated;
      best = std::min(best, time_of());
      return;
    }
    for (bool c : {true, false}) {
      cut[slots[k].first][slots[k].second] = c;
      rec(k + 1);
    }
    cut[slots[k].first][slots[k].second] = true;
  };
  rec(0);
  return best;
}

}  // namespace sketchsynth::testing
