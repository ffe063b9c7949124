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
#include <utility>
#include <vector>

#include "sketchsynth/milp/model.hpp"
#include "sketchsynth/milp/solver.hpp"
#include "sketchsynth/ordering.hpp"
#include "sketchsynth/schedule.hpp"

namespace sketchsynth {

struct ContiguityConfig {
  ContiguityScope scope = ContiguityScope::kInternode;
  // Largest number of chunks one contiguous transfer may carry.
  int max_contiguous = 4;
};

bool contiguity_eligible(const Topology& topology, Rank src, Rank dst, ContiguityScope scope);

struct ContiguityModel {
  milp::Model model;
  std::vector<Transfer> transfers;
  std::vector<int> sequence;
  Megabytes chunk_size = 0.0;
  int time_var = -1;
  std::vector<int> send;  // per transfer
  // (i, j) -> binary, i ordered before j on the same link.
  std::map<std::pair<int, int>, int> together;
  // All-separate earliest-start schedule; its values seed the solver.
  Timing separate;
  std::vector<double> start_hint;
};

ContiguityModel encode_contiguity(const std::vector<Transfer>& transfers, const Ordering& ordering,
                                  const LogicalTopology& lt, Megabytes chunk_size, const ContiguityConfig& config);

// Decodes the groups, then re-times them at their earliest starts, which
// never lengthens the solver's schedule. Returns the sends in sequence
// order with groups numbered densely; metadata is left to the caller.
// Throws kInfeasible (an ordering bug) or kSolverTimeout without incumbent.
Schedule solve_contiguity(const ContiguityModel& model, const LogicalTopology& lt,
                          const milp::SolverConfig& config = {});

}  // namespace sketchsynth
