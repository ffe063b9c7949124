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

#include <chrono>
#include <memory>
#include <string_view>
#include <vector>

namespace sketchsynth::milp {

// min cost'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
// A is stored column-wise (CSC).
struct LpProblem {
  int num_rows = 0;
  int num_cols = 0;
  std::vector<int> col_start;  // num_cols + 1 entries
  std::vector<int> row_index;
  std::vector<double> value;
  std::vector<double> cost;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<double> row_lower;
  std::vector<double> row_upper;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kLimit, kNumericalFailure };

std::string_view to_string(LpStatus status);

struct LpLimits {
  long max_iterations = 1'000'000;
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
};

// Bounded dual simplex over a sparse LU basis factorization with
// product-form updates. Every structural column is boxed (infinite bounds
// are replaced by a large finite value), so any basis can be made dual
// feasible by placing nonbasic columns at the right bound; this is what
// lets branch-and-bound change bounds and re-solve from the current basis.
class DualSimplex {
 public:
  explicit DualSimplex(const LpProblem& problem);
  ~DualSimplex();
  DualSimplex(const DualSimplex&) = delete;
  DualSimplex& operator=(const DualSimplex&) = delete;

  void set_column_bounds(int col, double lower, double upper);
  double column_lower(int col) const;
  double column_upper(int col) const;

  LpStatus solve(const LpLimits& limits = {});

  double objective() const;
  std::vector<double> column_values() const;
  long iterations() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sketchsynth::milp
