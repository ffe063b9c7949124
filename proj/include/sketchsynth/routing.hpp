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
#include <utility>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/milp/model.hpp"
#include "sketchsynth/milp/solver.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

// Bandwidth-relaxed routing model. Index tables map (chunk, link) and
// (chunk, rank) to model columns, -1 where the column was pruned.
struct RoutingModel {
  milp::Model model;
  CollectiveSpec spec;
  std::vector<std::pair<Rank, Rank>> links;  // logical links, same indices as lt.base().links()
  std::vector<bool> switched;                // link belongs to some switch-hyperedge
  Megabytes chunk_size = 0.0;
  double gamma = 0.0;
  int time_var = -1;
  std::vector<std::vector<int>> is_sent;  // [chunk][link]
  std::vector<std::vector<int>> send;     // [chunk][link]
  std::vector<std::vector<int>> start;    // [chunk][rank]
  std::vector<int> is_util;               // [link]
};

// Throws kInfeasible naming the chunk when the sketch leaves a required
// destination unreachable, kValidation for multi-source chunks or symmetry
// offsets that map a link onto one with a different cost.
RoutingModel encode_routing(const LogicalTopology& lt, const CollectiveSpec& spec, const CommSketch& sketch,
                            std::optional<Megabytes> chunk_size = std::nullopt);

struct RoutedSend {
  ChunkId chunk = 0;
  Rank src = 0;
  Rank dst = 0;
  Micros send_time = 0.0;
  Micros arrive_time = 0.0;
  friend bool operator==(const RoutedSend&, const RoutedSend&) = default;
};

struct RoutingSolution {
  std::string status;
  Micros lower_bound_time = 0.0;
  double objective = 0.0;
  Megabytes chunk_size = 0.0;
  // Per chunk, the sends of its delivery tree in depth-first order from the
  // precondition rank, children by ascending destination.
  std::vector<std::vector<RoutedSend>> paths;
  // Switched links that carry at least one chunk.
  std::vector<std::pair<Rank, Rank>> utilized;
  StageStats stats;

  std::vector<Transfer> transfers() const;
};

// Throws kInfeasible, or kSolverTimeout when the limit hits before any
// routing is found.
RoutingSolution solve_routing(const RoutingModel& model, const milp::SolverConfig& config = {});

std::string serialize_routing(const RoutingSolution& routing);

}  // namespace sketchsynth
