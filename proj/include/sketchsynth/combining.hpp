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

#include "sketchsynth/contiguity.hpp"
#include "sketchsynth/milp/solver.hpp"
#include "sketchsynth/ordering.hpp"
#include "sketchsynth/schedule.hpp"

namespace sketchsynth {

struct CombineOptions {
  ContiguityConfig contiguity;
  milp::SolverConfig solver;
  std::optional<OrderingDirection> direction;  // default_direction when empty
};

// Reverses every Allgather send into a reducing send of the same chunk, then
// orders and times the reversed sends from scratch: a rank folds its
// children's partials in before passing its own on. The result is a
// ReduceScatter with the same chunk layout and chunk size.
Schedule invert_allgather(const Schedule& allgather, const LogicalTopology& lt, const CombineOptions& options = {});

// Phase 0 is the ReduceScatter, phase 1 the Allgather. Each chunk's
// Allgather sends wait only on that chunk's reduction, not on a barrier.
Schedule compose_allreduce(const Schedule& reducescatter, const Schedule& allgather, const LogicalTopology& lt);

}  // namespace sketchsynth
