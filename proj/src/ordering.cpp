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

#include "sketchsynth/ordering.hpp"

#include <algorithm>
#include <tuple>

namespace sketchsynth {

OrderingDirection default_direction(const Topology& topology) {
  return topology.switches().empty() ? OrderingDirection::kReverse : OrderingDirection::kForward;
}

Ordering order_transfers(const std::vector<Transfer>& transfers, const LogicalTopology& lt, Megabytes chunk_size,
                         OrderingDirection direction) {
  const Topology& topo = lt.base();
  const std::size_t n = transfers.size();
  const bool reverse = direction == OrderingDirection::kReverse;

  std::vector<std::size_t> link(n);
  std::vector<std::vector<std::size_t>> sides(n);
  std::vector<Micros> lat(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transfer& t = transfers[i];
    const auto li = topo.find_link(t.src, t.dst);
    if (!li) {
      fail(ErrorCode::kValidation, "ordering: missing link " + std::to_string(t.src) + "->" + std::to_string(t.dst),
           "ordering");
    }
    link[i] = *li;
    sides[i] = topo.switches_containing(t.src, t.dst);
    lat[i] = lt.latency(t.src, t.dst, chunk_size);
  }

  const auto deps = data_dependencies(transfers);
  std::vector<std::vector<int>> pred(n), succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d : deps[i]) {
      pred[i].push_back(d);
      succ[static_cast<std::size_t>(d)].push_back(static_cast<int>(i));
    }
  }
  if (reverse) std::swap(pred, succ);

  // Remaining latency (this transfer plus the longest tail after it) and
  // latency already traversed before it, both along dependency chains.
  std::vector<Micros> remaining(n, -1.0), traversed(n, -1.0);
  std::vector<int> topo_order;
  {
    std::vector<int> indeg(n, 0);
    for (std::size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(pred[i].size());
    std::vector<int> stack;
    for (std::size_t i = 0; i < n; ++i) {
      if (indeg[i] == 0) stack.push_back(static_cast<int>(i));
    }
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      topo_order.push_back(v);
      for (int w : succ[static_cast<std::size_t>(v)]) {
        if (--indeg[static_cast<std::size_t>(w)] == 0) stack.push_back(w);
      }
    }
    if (topo_order.size() != n) fail(ErrorCode::kInternal, "transfer dependencies form a cycle", "ordering");
  }
  for (int v : topo_order) {
    Micros t = 0.0;
    for (int p : pred[static_cast<std::size_t>(v)]) {
      t = std::max(t, traversed[static_cast<std::size_t>(p)] + lat[static_cast<std::size_t>(p)]);
    }
    traversed[static_cast<std::size_t>(v)] = t;
  }
  for (auto it = topo_order.rbegin(); it != topo_order.rend(); ++it) {
    Micros tail = 0.0;
    for (int w : succ[static_cast<std::size_t>(*it)]) tail = std::max(tail, remaining[static_cast<std::size_t>(w)]);
    remaining[static_cast<std::size_t>(*it)] = lat[static_cast<std::size_t>(*it)] + tail;
  }

  std::vector<Micros> link_time(topo.links().size(), 0.0);
  std::vector<Micros> side_time(topo.switches().size(), 0.0);
  std::vector<Micros> ready(n, 0.0);
  std::vector<int> waiting(n);
  std::vector<int> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    waiting[i] = static_cast<int>(pred[i].size());
    if (waiting[i] == 0) candidates.push_back(static_cast<int>(i));
  }

  auto est = [&](std::size_t i) {
    Micros t = std::max(ready[i], link_time[link[i]]);
    for (std::size_t h : sides[i]) t = std::max(t, side_time[h]);
    return t;
  };
  auto key = [&](std::size_t i) {
    const Transfer& t = transfers[i];
    return std::make_tuple(est(i), -remaining[i], traversed[i], t.chunk, t.dst, t.src);
  };

  std::vector<int> picked;
  std::vector<Micros> start(n, 0.0);
  picked.reserve(n);
  while (!candidates.empty()) {
    std::size_t best_pos = 0;
    auto best_key = key(static_cast<std::size_t>(candidates[0]));
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      auto kk = key(static_cast<std::size_t>(candidates[k]));
      if (kk < best_key) {
        best_key = kk;
        best_pos = k;
      }
    }
    const auto i = static_cast<std::size_t>(candidates[best_pos]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best_pos));
    const Micros s = std::get<0>(best_key);
    const Micros f = s + lat[i];
    start[i] = s;
    picked.push_back(static_cast<int>(i));
    link_time[link[i]] = f;
    for (std::size_t h : sides[i]) side_time[h] = f;
    for (int w : succ[i]) {
      ready[static_cast<std::size_t>(w)] = std::max(ready[static_cast<std::size_t>(w)], f);
      if (--waiting[static_cast<std::size_t>(w)] == 0) candidates.push_back(w);
    }
  }

  Ordering out;
  out.estimate.assign(n, 0.0);
  if (reverse) {
    Micros horizon = 0.0;
    for (std::size_t i = 0; i < n; ++i) horizon = std::max(horizon, start[i] + lat[i]);
    for (std::size_t i = 0; i < n; ++i) out.estimate[i] = horizon - start[i] - lat[i];
    out.sequence.assign(picked.rbegin(), picked.rend());
  } else {
    out.estimate = start;
    out.sequence = std::move(picked);
  }

  out.chunk_order.assign(topo.links().size(), {});
  for (std::size_t h = 0; h < topo.switches().size(); ++h) {
    const auto& hyper = topo.switches()[h];
    out.switch_orders.push_back({hyper.kind, hyper.anchor, h, {}});
  }
  for (int i : out.sequence) {
    const Transfer& t = transfers[static_cast<std::size_t>(i)];
    out.chunk_order[link[static_cast<std::size_t>(i)]].push_back(t.chunk);
    for (std::size_t h : sides[static_cast<std::size_t>(i)]) {
      auto& so = out.switch_orders[h];
      so.events.emplace_back(t.chunk, so.kind == SwitchSide::kSend ? t.dst : t.src);
    }
  }
  return out;
}

Ordering order_chunks(const RoutingSolution& routing, const LogicalTopology& lt, OrderingDirection direction) {
  return order_transfers(routing.transfers(), lt, routing.chunk_size, direction);
}

}  // namespace sketchsynth
