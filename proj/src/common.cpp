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

#include "sketchsynth/common.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace sketchsynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
      return "parse error";
    case ErrorCode::kValidation:
      return "validation error";
    case ErrorCode::kInfeasible:
      return "infeasible";
    case ErrorCode::kSolverTimeout:
      return "solver timeout";
    case ErrorCode::kSolverFailure:
      return "solver failure";
    case ErrorCode::kInternal:
      return "internal error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(stage.empty() ? message : stage + ": " + message),
      code_(code),
      stage_(std::move(stage)) {}

void fail(ErrorCode code, const std::string& message, std::string stage) {
  throw Error(code, message, std::move(stage));
}

Megabytes parse_size(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  }
  if (s.empty()) fail(ErrorCode::kParse, "empty size string");

  std::size_t pos = 0;
  while (pos < s.size() &&
         (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
          s[pos] == 'e' || s[pos] == 'E' ||
          ((s[pos] == '-' || s[pos] == '+') && pos > 0 &&
           (s[pos - 1] == 'e' || s[pos - 1] == 'E')))) {
    ++pos;
  }
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(s.substr(0, pos), &used);
    if (used != pos) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "malformed size '" + std::string(text) + "'");
  }

  std::string suffix;
  for (char ch : s.substr(pos)) {
    suffix.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  double scale = 1.0;
  if (suffix.empty() || suffix == "M" || suffix == "MB") {
    scale = 1.0;
  } else if (suffix == "B") {
    scale = 1.0 / (1024.0 * 1024.0);
  } else if (suffix == "K" || suffix == "KB") {
    scale = 1.0 / 1024.0;
  } else if (suffix == "G" || suffix == "GB") {
    scale = 1024.0;
  } else {
    fail(ErrorCode::kParse, "unknown size suffix in '" + std::string(text) + "'");
  }
  const double mb = value * scale;
  if (!std::isfinite(mb) || mb <= 0.0) {
    fail(ErrorCode::kValidation, "size must be positive: '" + std::string(text) + "'");
  }
  return mb;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, end);
}

std::string format_size(Megabytes size) {
  const double bytes = size * 1024.0 * 1024.0;
  struct Unit {
    double scale;
    const char* suffix;
  };
  constexpr Unit kUnits[] = {{1024.0 * 1024.0 * 1024.0, "G"},
                             {1024.0 * 1024.0, "M"},
                             {1024.0, "K"}};
  for (const auto& unit : kUnits) {
    const double v = bytes / unit.scale;
    if (v >= 1.0 && std::floor(v) == v) {
      return format_double(v) + unit.suffix;
    }
  }
  return format_double(size) + "M";
}

}  // namespace sketchsynth
