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

#include <functional>
#include <optional>
#include <string>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/milp/solver.hpp"
#include "sketchsynth/routing.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

struct SynthesisOptions {
  CollectiveKind kind = CollectiveKind::kAllgather;
  // Overrides of the sketch's hyperparameters.
  std::optional<int> chunks;
  std::optional<Megabytes> size;
  std::optional<HyperedgePolicy> policy;
  std::optional<OrderingDirection> direction;
  milp::SolverConfig solver;
  // Receives each finished stage's JSON (routing, contiguity, combining) so
  // callers can keep intermediate artifacts when a later stage fails.
  std::function<void(const std::string& stage, const std::string& json)> on_stage;
};

// The sketch with the option overrides folded in.
CommSketch effective_sketch(const CommSketch& sketch, const SynthesisOptions& options);

struct SynthesisResult {
  CollectiveSpec spec;
  LogicalTopology logical;
  // Stage 1 of the non-combining collective that was routed (the Allgather
  // for reducing collectives).
  RoutingSolution routing;
  Schedule schedule;
};

// Routing, ordering and contiguity, plus inversion and composition for
// reducescatter and allreduce.
SynthesisResult synthesize(const Topology& topology, const CommSketch& sketch, const SynthesisOptions& options);

}  // namespace sketchsynth
