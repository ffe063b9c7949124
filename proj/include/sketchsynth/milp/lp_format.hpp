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
#include <string_view>

#include "sketchsynth/milp/model.hpp"

namespace sketchsynth::milp {

// CPLEX LP text. Indicators are written as big-M rows (see
// Model::linearized). Every variable gets an explicit Bounds line, in
// declaration order, so a reader can recover the variable order.
std::string export_lp(const Model& model);

// Reads the subset of the LP format that export_lp writes: Minimize,
// Subject To, Bounds, Binaries, End, and '\' comments.
Model parse_lp(std::string_view text);

}  // namespace sketchsynth::milp
