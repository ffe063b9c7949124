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
#include <string_view>
#include <vector>

#include "sketchsynth/milp/model.hpp"

namespace sketchsynth::milp {

struct SolverConfig {
  double time_limit_seconds = 60.0;
  // Deterministic budget; hitting it behaves like the time limit.
  long node_limit = 200'000;
  double rel_gap_tol = 1e-4;
  double abs_gap_tol = 1e-9;
  double feas_tol = 1e-6;
  double int_tol = 1e-5;
};

enum class SolveStatus {
  kOptimal,
  kFeasible,      // limit reached with an incumbent
  kInfeasible,
  kUnbounded,
  kNoSolution,    // limit reached before any incumbent
};

std::string_view to_string(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::kNoSolution;
  std::vector<double> values;   // one per model variable
  double objective = 0.0;
  double bound = 0.0;           // best proven lower bound
  double gap = 0.0;             // (objective - bound) / max(1, |objective|)
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;

  bool has_values() const { return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible; }
};

// Branch-and-bound over the LP relaxation: presolve, bounded dual simplex,
// most-fractional branching (ties by declaration order), depth-first until
// the first incumbent and best-bound afterwards.
//
// `start` optionally supplies values for the binaries (others ignored); the
// solver fixes them, solves the LP, and keeps the result as the first
// incumbent when it is feasible.
Solution solve(const Model& model, const SolverConfig& config = {},
               const std::optional<std::vector<double>>& start = std::nullopt);

}  // namespace sketchsynth::milp
