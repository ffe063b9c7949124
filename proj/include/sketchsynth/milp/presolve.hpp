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

#include <string>
#include <vector>

#include "sketchsynth/milp/model.hpp"

namespace sketchsynth::milp {

// Reductions applied to a model without indicators: fixed columns, singleton
// rows turned into bounds, rows made redundant by activity bounds, duplicate
// rows, and doubleton equalities a*x + b*y = c aggregated into
// x = s*y + o. A binary is never expressed through a continuous column.
struct Presolved {
  Model reduced;
  bool infeasible = false;
  std::string reason;

  // Original column j equals scale[j] * reduced[reduced_of[base[j]]] + offset[j],
  // or offset[j] when base[j] == -1.
  std::vector<int> base;
  std::vector<double> scale;
  std::vector<double> offset;
  std::vector<int> reduced_of;    // original -> reduced index, -1 if removed
  std::vector<int> original_of;   // reduced -> original index
};

Presolved presolve(const Model& linear_model);

std::vector<double> postsolve(const Presolved& presolved, const std::vector<double>& reduced_values);

}  // namespace sketchsynth::milp
