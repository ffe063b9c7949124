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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sketchsynth::milp {

enum class VarKind { kContinuous, kBinary };
enum class Sense { kLe, kEq, kGe };

std::string_view to_string(Sense sense);

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0.0;
  double ub = 0.0;
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Term {
  int var = 0;
  double coef = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// binary == active_value  implies  body holds.
struct Indicator {
  std::string name;
  int binary = 0;
  bool active_value = true;
  Constraint body;
  friend bool operator==(const Indicator&, const Indicator&) = default;
};

// Minimize objective subject to linear rows and indicator constraints.
class Model {
 public:
  int add_variable(std::string name, VarKind kind, double lb, double ub);
  int add_continuous(std::string name, double lb, double ub) {
    return add_variable(std::move(name), VarKind::kContinuous, lb, ub);
  }
  int add_binary(std::string name) { return add_variable(std::move(name), VarKind::kBinary, 0.0, 1.0); }

  int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);
  int add_indicator(std::string name, int binary, bool active_value, std::vector<Term> terms,
                    Sense sense, double rhs);

  void set_objective(std::vector<Term> terms, double constant = 0.0);
  void add_objective_term(int var, double coef);

  void set_bounds(int var, double lb, double ub);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Indicator>& indicators() const { return indicators_; }
  const std::vector<Term>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  const Variable& variable(int v) const { return variables_.at(static_cast<std::size_t>(v)); }
  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_binaries() const;

  // Throws Error(kValidation) when a coefficient is not finite, an index is
  // out of range, bounds are inverted, a name is not LP-safe, or an indicator
  // refers to a non-binary.
  void validate() const;

  // Same model with every indicator replaced by big-M rows derived from
  // variable bounds. Rows are named "<indicator>_le" / "<indicator>_ge".
  Model linearized() const;

  double evaluate_objective(const std::vector<double>& x) const;
  // Largest violation of bounds, rows, indicators and integrality.
  double max_violation(const std::vector<double>& x, double int_tol = 1e-5) const;

  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<Indicator> indicators_;
  std::vector<Term> objective_;
  double objective_constant_ = 0.0;
};

// Activity range of sum(terms) over the variable bounds.
struct Activity {
  double min = 0.0;
  double max = 0.0;
};
Activity activity_range(const Model& model, const std::vector<Term>& terms);

// Sorts terms by variable and merges duplicates; drops exact zeros.
std::vector<Term> canonical_terms(std::vector<Term> terms);

bool is_lp_name(std::string_view name);

}  // namespace sketchsynth::milp
