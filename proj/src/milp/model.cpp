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

#include "sketchsynth/milp/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sketchsynth/common.hpp"

namespace sketchsynth::milp {
namespace {

[[noreturn]] void malformed(const std::string& message) {
  fail(ErrorCode::kValidation, message, "milp");
}

double row_violation(const std::vector<Term>& terms, Sense sense, double rhs,
                     const std::vector<double>& x) {
  double lhs = 0.0;
  for (const Term& t : terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
  const double scale = std::max(1.0, std::abs(rhs));
  switch (sense) {
    case Sense::kLe:
      return std::max(0.0, lhs - rhs) / scale;
    case Sense::kGe:
      return std::max(0.0, rhs - lhs) / scale;
    case Sense::kEq:
      return std::abs(lhs - rhs) / scale;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Sense sense) {
  switch (sense) {
    case Sense::kLe:
      return "<=";
    case Sense::kEq:
      return "=";
    case Sense::kGe:
      return ">=";
  }
  return "<=";
}

bool is_lp_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  const char first = name.front();
  if (!(std::isalpha(static_cast<unsigned char>(first)) || first == '_')) return false;
  if (first == 'e' || first == 'E') return false;
  for (char ch : name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) return false;
  }
  return true;
}

std::vector<Term> canonical_terms(std::vector<Term> terms) {
  std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const Term& t : terms) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  return out;
}

int Model::add_variable(std::string name, VarKind kind, double lb, double ub) {
  variables_.push_back(Variable{std::move(name), kind, lb, ub});
  return static_cast<int>(variables_.size()) - 1;
}

int Model::add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
  constraints_.push_back(Constraint{std::move(name), canonical_terms(std::move(terms)), sense, rhs});
  return static_cast<int>(constraints_.size()) - 1;
}

int Model::add_indicator(std::string name, int binary, bool active_value, std::vector<Term> terms,
                         Sense sense, double rhs) {
  Indicator ind;
  ind.name = std::move(name);
  ind.binary = binary;
  ind.active_value = active_value;
  ind.body = Constraint{ind.name, canonical_terms(std::move(terms)), sense, rhs};
  indicators_.push_back(std::move(ind));
  return static_cast<int>(indicators_.size()) - 1;
}

void Model::set_objective(std::vector<Term> terms, double constant) {
  objective_ = canonical_terms(std::move(terms));
  objective_constant_ = constant;
}

void Model::add_objective_term(int var, double coef) {
  objective_.push_back(Term{var, coef});
  objective_ = canonical_terms(std::move(objective_));
}

void Model::set_bounds(int var, double lb, double ub) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.lb = lb;
  v.ub = ub;
}

int Model::num_binaries() const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(),
                                        [](const Variable& v) { return v.kind == VarKind::kBinary; }));
}

void Model::validate() const {
  const int n = num_variables();
  for (const auto& v : variables_) {
    if (!is_lp_name(v.name)) malformed("variable name '" + v.name + "' is not LP-safe");
    if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub) {
      malformed("variable '" + v.name + "' has invalid bounds");
    }
    if (v.kind == VarKind::kBinary && (v.lb < 0.0 || v.ub > 1.0)) {
      malformed("binary '" + v.name + "' has bounds outside [0, 1]");
    }
  }
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const Term& t : terms) {
      if (t.var < 0 || t.var >= n) malformed(where + " references an undeclared variable");
      if (!std::isfinite(t.coef)) malformed(where + " has a non-finite coefficient");
    }
  };
  check_terms(objective_, "objective");
  if (!std::isfinite(objective_constant_)) malformed("objective constant is not finite");
  for (const auto& c : constraints_) {
    if (!is_lp_name(c.name)) malformed("constraint name '" + c.name + "' is not LP-safe");
    check_terms(c.terms, "constraint '" + c.name + "'");
    if (!std::isfinite(c.rhs)) malformed("constraint '" + c.name + "' has a non-finite rhs");
  }
  for (const auto& ind : indicators_) {
    if (!is_lp_name(ind.name)) malformed("indicator name '" + ind.name + "' is not LP-safe");
    if (ind.binary < 0 || ind.binary >= n || variable(ind.binary).kind != VarKind::kBinary) {
      malformed("indicator '" + ind.name + "' is not controlled by a binary");
    }
    check_terms(ind.body.terms, "indicator '" + ind.name + "'");
    if (!std::isfinite(ind.body.rhs)) malformed("indicator '" + ind.name + "' has a non-finite rhs");
    for (const Term& t : ind.body.terms) {
      if (t.var == ind.binary) malformed("indicator '" + ind.name + "' mentions its own binary");
    }
  }
}

Activity activity_range(const Model& model, const std::vector<Term>& terms) {
  Activity a;
  for (const Term& t : terms) {
    const Variable& v = model.variable(t.var);
    if (t.coef > 0) {
      a.min += t.coef * v.lb;
      a.max += t.coef * v.ub;
    } else {
      a.min += t.coef * v.ub;
      a.max += t.coef * v.lb;
    }
  }
  return a;
}

Model Model::linearized() const {
  Model out;
  out.variables_ = variables_;
  out.constraints_ = constraints_;
  out.objective_ = objective_;
  out.objective_constant_ = objective_constant_;
  for (const auto& ind : indicators_) {
    const Activity act = activity_range(*this, ind.body.terms);
    const double rhs = ind.body.rhs;
    auto emit = [&](Sense part, const std::string& suffix) {
      // part == kLe:  body <= rhs when active.  part == kGe: body >= rhs.
      double m = part == Sense::kLe ? act.max - rhs : rhs - act.min;
      if (!std::isfinite(m)) malformed("indicator '" + ind.name + "' has unbounded activity");
      m = std::max(m, 0.0);
      std::vector<Term> terms = ind.body.terms;
      double row_rhs = rhs;
      if (ind.active_value) {
        // body - rhs <= M (1 - b)  or  body - rhs >= -M (1 - b)
        terms.push_back(Term{ind.binary, part == Sense::kLe ? m : -m});
        row_rhs = part == Sense::kLe ? rhs + m : rhs - m;
      } else {
        // body - rhs <= M b  or  body - rhs >= -M b
        terms.push_back(Term{ind.binary, part == Sense::kLe ? -m : m});
      }
      out.add_constraint(ind.name + suffix, std::move(terms), part, row_rhs);
    };
    if (ind.body.sense != Sense::kGe) emit(Sense::kLe, "_le");
    if (ind.body.sense != Sense::kLe) emit(Sense::kGe, "_ge");
  }
  return out;
}

double Model::evaluate_objective(const std::vector<double>& x) const {
  double value = objective_constant_;
  for (const Term& t : objective_) value += t.coef * x[static_cast<std::size_t>(t.var)];
  return value;
}

double Model::max_violation(const std::vector<double>& x, double int_tol) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const Variable& v = variables_[i];
    worst = std::max({worst, v.lb - x[i], x[i] - v.ub});
    if (v.kind == VarKind::kBinary) {
      const double frac = std::abs(x[i] - std::round(x[i]));
      if (frac > int_tol) worst = std::max(worst, frac);
    }
  }
  for (const auto& c : constraints_) worst = std::max(worst, row_violation(c.terms, c.sense, c.rhs, x));
  for (const auto& ind : indicators_) {
    const bool active = std::round(x[static_cast<std::size_t>(ind.binary)]) == (ind.active_value ? 1.0 : 0.0);
    if (active) worst = std::max(worst, row_violation(ind.body.terms, ind.body.sense, ind.body.rhs, x));
  }
  return worst;
}

}  // namespace sketchsynth::milp
