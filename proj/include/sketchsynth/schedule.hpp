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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/common.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

// One chunk crossing one link. A reducing transfer folds the sender's
// partial result into the receiver's copy instead of overwriting it.
struct Transfer {
  ChunkId chunk = 0;
  Rank src = 0;
  Rank dst = 0;
  bool reduce = false;
  int phase = 0;

  friend bool operator==(const Transfer&, const Transfer&) = default;
};

// For every transfer, the transfers whose arrival it must wait for: all
// transfers of the same chunk into its source rank from the same or an
// earlier phase.
std::vector<std::vector<int>> data_dependencies(const std::vector<Transfer>& transfers);

// Serialization chains induced by a global order: one chain per link and one
// per switch-hyperedge side, each listing transfer indices in sequence order.
std::vector<std::vector<int>> serialization_chains(const std::vector<Transfer>& transfers,
                                                   const std::vector<int>& sequence,
                                                   const Topology& topology);

// Latency of a transfer travelling in a contiguous group of `group_size` chunks.
Micros group_latency(const LogicalTopology& lt, Rank src, Rank dst, Megabytes chunk_size, int group_size);

struct Timing {
  std::vector<Micros> send;
  std::vector<Micros> arrive;
  Micros total = 0.0;
};

// Earliest start times. Transfers sharing a group id leave together and pay
// one alpha; consecutive chain members from different groups serialize.
// Throws kInternal if the orders contradict the data dependencies.
Timing retime_asap(const std::vector<Transfer>& transfers, const std::vector<int>& group,
                   const std::vector<std::vector<int>>& chains, const LogicalTopology& lt,
                   Megabytes chunk_size);

struct ScheduledSend {
  ChunkId chunk = 0;
  Rank src = 0;
  Rank dst = 0;
  Micros send_time = 0.0;
  Micros arrive_time = 0.0;
  int group = 0;
  bool reduce = false;
  int phase = 0;

  Transfer transfer() const { return {chunk, src, dst, reduce, phase}; }
  friend bool operator==(const ScheduledSend&, const ScheduledSend&) = default;
};

struct StageStats {
  std::string stage;
  std::string status;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  int binaries = 0;
  int rows = 0;

  friend bool operator==(const StageStats&, const StageStats&) = default;
};

// A timed algorithm. `sends` is in global sequence order, so the order of
// sends on each link (and switch side) is their order in this list.
struct Schedule {
  std::string name;
  std::string topology;
  CollectiveKind kind = CollectiveKind::kAllgather;
  int num_ranks = 0;
  int partition_factor = 1;
  int num_chunks = 0;
  Megabytes input_size = 0.0;
  Megabytes chunk_size = 0.0;
  std::vector<ScheduledSend> sends;
  Micros total_time = 0.0;
  std::optional<Micros> lower_bound;
  std::vector<StageStats> stats;

  // MB per microsecond.
  double algorithm_bandwidth() const { return total_time > 0.0 ? input_size / total_time : 0.0; }
  std::vector<Transfer> transfers() const;
  std::vector<int> groups() const;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Renumbers groups densely in order of first appearance.
void normalize_groups(Schedule& schedule);

// Recomputes send/arrive/total from the list order and groups.
void retime(Schedule& schedule, const LogicalTopology& lt);

std::string serialize_schedule(const Schedule& schedule);
Schedule parse_schedule(std::string_view text);
Schedule load_schedule_file(const std::string& path);

}  // namespace sketchsynth
