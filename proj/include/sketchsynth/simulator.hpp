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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

struct BusyInterval {
  Rank src = 0;
  Rank dst = 0;
  Micros start = 0.0;
  Micros end = 0.0;
  int group = 0;
  std::vector<ChunkId> chunks;
};

// How many times each rank's input is folded into a value; a plain copy of
// rank r's data is {r: 1}.
using Provenance = std::vector<int>;

struct SimReport {
  Micros total_time = 0.0;
  Megabytes input_size = 0.0;
  std::vector<BusyInterval> timeline;
  // (chunk, rank) -> time the rank first held the chunk.
  std::map<std::pair<ChunkId, Rank>, Micros> arrival;
  // (chunk, rank) -> final contribution counts.
  std::map<std::pair<ChunkId, Rank>, Provenance> provenance;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  double algorithm_bandwidth() const { return total_time > 0.0 ? input_size / total_time : 0.0; }
};

// Replays the timed sends. Latencies, arrivals, exclusivity and data
// availability are all recomputed from the cost model; nothing is taken from
// the recorded arrive times.
SimReport simulate(const Schedule& schedule, const LogicalTopology& lt, const CollectiveSpec& spec);

struct PostconditionResult {
  bool pass = true;
  std::vector<std::string> failures;
};

PostconditionResult check_postcondition(const SimReport& report, const CollectiveSpec& spec);

std::string serialize_report(const SimReport& report);

enum class Baseline { kRingAllgather, kAllpairsAlltoall, kRingAllreduce };

std::string_view to_string(Baseline baseline);
Baseline parse_baseline(std::string_view text);

// Ring order over all ranks, trying 0,1,..,n-1 first. Empty when the logical
// topology has no Hamiltonian cycle.
std::vector<Rank> find_ring(const Topology& topology);

// Textbook algorithm timed under the same cost model. Throws kValidation
// when the pattern does not embed in the topology.
Schedule baseline_schedule(Baseline baseline, const LogicalTopology& lt, const CollectiveSpec& spec,
                           Megabytes input_size);

}  // namespace sketchsynth
