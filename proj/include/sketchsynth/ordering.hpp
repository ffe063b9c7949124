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

#pragma once

#include <utility>
#include <vector>

#include "sketchsynth/routing.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

struct SwitchOrder {
  SwitchSide kind = SwitchSide::kSend;
  Rank anchor = 0;
  std::size_t hyperedge = 0;
  // (chunk, peer): peer is the destination on the send side, the source on
  // the receive side.
  std::vector<std::pair<ChunkId, Rank>> events;
};

struct Ordering {
  // Transfer indices in global order; every per-link and per-switch order
  // below is a projection of it.
  std::vector<int> sequence;
  // Greedy estimate of each transfer's send time, indexed like the transfers.
  std::vector<Micros> estimate;
  std::vector<std::vector<ChunkId>> chunk_order;  // per logical link index
  std::vector<SwitchOrder> switch_orders;         // one per switch-hyperedge
};

// Forward when the topology has switch-hyperedges, reverse otherwise.
OrderingDirection default_direction(const Topology& topology);

// Greedy list scheduling of the transfers. Among transfers whose
// predecessors are placed, picks the earliest estimated start, then the
// longest remaining latency path, then the shortest traversed latency path,
// then the lowest chunk id and destination. Reverse runs the same pass on the
// time-reversed dependency graph and flips the result.
Ordering order_transfers(const std::vector<Transfer>& transfers, const LogicalTopology& lt, Megabytes chunk_size,
                         OrderingDirection direction);

Ordering order_chunks(const RoutingSolution& routing, const LogicalTopology& lt, OrderingDirection direction);

}  // namespace sketchsynth
