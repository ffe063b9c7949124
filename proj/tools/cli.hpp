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

#include <ostream>
#include <string>
#include <vector>

namespace sketchsynth::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // internal or numerical solver failure
inline constexpr int kInvalid = 2;      // bad input, failed verification
inline constexpr int kTimeout = 3;      // a solver limit was hit; the incumbent was written
inline constexpr int kInfeasible = 4;
inline constexpr int kNoIncumbent = 5;  // a solver limit was hit before any solution

// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sketchsynth::cli
