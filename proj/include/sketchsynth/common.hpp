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

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchsynth {

using Rank = int;
using ChunkId = int;

// Durations are microseconds, sizes are MB (1 MB = 1024 * 1024 bytes).
using Micros = double;
using Megabytes = double;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  kParse,
  kValidation,
  kInfeasible,
  kSolverTimeout,
  kSolverFailure,
  kInternal,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// `stage` names the pipeline stage that raised it (may be empty).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message,
                       std::string stage = {});

// Parses "1M", "32KB", "0.5", "2GB", ... into megabytes. Suffixes use powers
// of 1024; a bare number is already in MB.
Megabytes parse_size(std::string_view text);

// Formats a size in MB using the largest suffix that keeps an integral value
// when possible ("32K", "1M", "0.1M").
std::string format_size(Megabytes size);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace sketchsynth
