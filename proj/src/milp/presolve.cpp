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

#include "sketchsynth/milp/presolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sketchsynth/common.hpp"

namespace sketchsynth::milp {
namespace {

constexpr double kTol = 1e-9;
constexpr int kMaxPasses = 25;

struct Row {
  std::string name;
  std::vector<Term> terms;
  Sense sense;
  double rhs;
};

class Presolver {
 public:
  explicit Presolver(const Model& model) : model_(model) {
    const auto n = static_cast<std::size_t>(model.num_variables());
    base_.resize(n);
    scale_.assign(n, 1.0);
    offset_.assign(n, 0.0);
    lb_.resize(n);
    ub_.resize(n);
    binary_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      base_[j] = static_cast<int>(j);
      const Variable& v = model.variables()[j];
      lb_[j] = v.lb;
      ub_[j] = v.ub;
      binary_[j] = v.kind == VarKind::kBinary;
      if (binary_[j]) round_binary(j);
    }
    for (const auto& c : model.constraints()) rows_.push_back(Row{c.name, c.terms, c.sense, c.rhs});
  }

  Presolved run() {
    Presolved out;
    for (int pass = 0; pass < kMaxPasses && !infeasible_; ++pass) {
      changed_ = false;
      reduce_rows();
      if (infeasible_) break;
      fix_columns();
      aggregate_doubletons();
      if (infeasible_) break;
      remove_duplicates();
      if (!changed_) break;
    }
    out.infeasible = infeasible_;
    out.reason = reason_;
    if (infeasible_) return out;

    const int n = model_.num_variables();
    out.reduced_of.assign(static_cast<std::size_t>(n), -1);
    for (int j = 0; j < n; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if (base_[jj] != j) continue;
      const Variable& v = model_.variables()[jj];
      out.reduced_of[jj] = out.reduced.add_variable(v.name, v.kind, lb_[jj], ub_[jj]);
      out.original_of.push_back(j);
    }
    for (int j = 0; j < n; ++j) resolve(j);
    out.base = base_;
    out.scale = scale_;
    out.offset = offset_;

    double constant = model_.objective_constant();
    std::vector<Term> obj;
    for (const Term& t : model_.objective()) {
      const auto jj = static_cast<std::size_t>(t.var);
      constant += t.coef * offset_[jj];
      if (base_[jj] >= 0) {
        obj.push_back(Term{out.reduced_of[static_cast<std::size_t>(base_[jj])], t.coef * scale_[jj]});
      }
    }
    out.reduced.set_objective(std::move(obj), constant);
    for (const Row& r : rows_) {
      std::vector<Term> terms;
      for (const Term& t : r.terms) terms.push_back(Term{out.reduced_of[static_cast<std::size_t>(t.var)], t.coef});
      out.reduced.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
    }
    return out;
  }

 private:
  void mark_infeasible(const std::string& why) {
    if (!infeasible_) reason_ = why;
    infeasible_ = true;
  }

  void round_binary(std::size_t j) {
    lb_[j] = std::ceil(lb_[j] - 1e-6);
    ub_[j] = std::floor(ub_[j] + 1e-6);
  }

  // Collapses the chain for j so base_[j] is a root (or -1).
  void resolve(int j) {
    const auto jj = static_cast<std::size_t>(j);
    const int b = base_[jj];
    if (b < 0 || b == j) return;
    resolve(b);
    const auto bb = static_cast<std::size_t>(b);
    offset_[jj] += scale_[jj] * offset_[bb];
    scale_[jj] *= scale_[bb];
    base_[jj] = base_[bb];
    if (base_[jj] < 0) scale_[jj] = 0.0;
  }

  // Rewrites a row over root columns.
  void substitute(Row& row) {
    std::vector<Term> terms;
    for (const Term& t : row.terms) {
      resolve(t.var);
      const auto vv = static_cast<std::size_t>(t.var);
      row.rhs -= t.coef * offset_[vv];
      if (base_[vv] >= 0) terms.push_back(Term{base_[vv], t.coef * scale_[vv]});
    }
    row.terms = canonical_terms(std::move(terms));
    for (auto& t : row.terms) {
      if (std::abs(t.coef) < 1e-12) t.coef = 0.0;
    }
    std::erase_if(row.terms, [](const Term& t) { return t.coef == 0.0; });
  }

  bool tighten(int var, double lo, double hi) {
    const auto jj = static_cast<std::size_t>(var);
    bool moved = false;
    if (lo > lb_[jj] + kTol) {
      lb_[jj] = lo;
      moved = true;
    }
    if (hi < ub_[jj] - kTol) {
      ub_[jj] = hi;
      moved = true;
    }
    if (binary_[jj]) round_binary(jj);
    if (lb_[jj] > ub_[jj]) {
      if (lb_[jj] - ub_[jj] <= 1e-7 * std::max(1.0, std::abs(lb_[jj]))) {
        ub_[jj] = lb_[jj];
      } else {
        mark_infeasible("bounds of '" + model_.variables()[jj].name + "' cross");
      }
    }
    return moved;
  }

  void reduce_rows() {
    std::vector<Row> kept;
    for (Row& row : rows_) {
      substitute(row);
      const double scale = std::max(1.0, std::abs(row.rhs));
      if (row.terms.empty()) {
        const bool ok = row.sense == Sense::kLe   ? 0.0 <= row.rhs + 1e-7 * scale
                        : row.sense == Sense::kGe ? 0.0 >= row.rhs - 1e-7 * scale
                                                  : std::abs(row.rhs) <= 1e-7 * scale;
        if (!ok) mark_infeasible("row '" + row.name + "' has no columns left and is violated");
        changed_ = true;
        continue;
      }
      if (row.terms.size() == 1) {
        const Term t = row.terms[0];
        const double v = row.rhs / t.coef;
        double lo = -kInfinity, hi = kInfinity;
        const bool positive = t.coef > 0;
        if (row.sense == Sense::kEq) {
          lo = hi = v;
        } else if ((row.sense == Sense::kLe) == positive) {
          hi = v;
        } else {
          lo = v;
        }
        tighten(t.var, lo, hi);
        changed_ = true;
        continue;
      }
      const Activity act = activity(row.terms);
      const double tol = 1e-9 * scale;
      bool redundant = false;
      switch (row.sense) {
        case Sense::kLe:
          if (act.min > row.rhs + 1e-7 * scale) mark_infeasible("row '" + row.name + "' cannot be satisfied");
          redundant = act.max <= row.rhs + tol;
          break;
        case Sense::kGe:
          if (act.max < row.rhs - 1e-7 * scale) mark_infeasible("row '" + row.name + "' cannot be satisfied");
          redundant = act.min >= row.rhs - tol;
          break;
        case Sense::kEq:
          if (act.min > row.rhs + 1e-7 * scale || act.max < row.rhs - 1e-7 * scale) {
            mark_infeasible("row '" + row.name + "' cannot be satisfied");
          }
          redundant = std::abs(act.max - act.min) <= tol && std::abs(act.max - row.rhs) <= tol;
          break;
      }
      if (redundant) {
        changed_ = true;
        continue;
      }
      kept.push_back(std::move(row));
    }
    rows_ = std::move(kept);
  }

  Activity activity(const std::vector<Term>& terms) const {
    Activity a;
    for (const Term& t : terms) {
      const auto jj = static_cast<std::size_t>(t.var);
      if (t.coef > 0) {
        a.min += t.coef * lb_[jj];
        a.max += t.coef * ub_[jj];
      } else {
        a.min += t.coef * ub_[jj];
        a.max += t.coef * lb_[jj];
      }
    }
    return a;
  }

  void fix_columns() {
    for (std::size_t j = 0; j < base_.size(); ++j) {
      if (base_[j] != static_cast<int>(j)) continue;
      if (lb_[j] == ub_[j]) {
        base_[j] = -1;
        scale_[j] = 0.0;
        offset_[j] = lb_[j];
        changed_ = true;
      }
    }
  }

  void aggregate_doubletons() {
    std::vector<Row> kept;
    for (Row& row : rows_) {
      substitute(row);
      if (row.sense != Sense::kEq || row.terms.size() != 2 || !eliminate(row)) kept.push_back(std::move(row));
    }
    rows_ = std::move(kept);
  }

  // a*x + b*y = c. Returns true when one column was aggregated away.
  bool eliminate(const Row& row) {
    Term tx = row.terms[0];
    Term ty = row.terms[1];
    auto xi = static_cast<std::size_t>(tx.var);
    auto yi = static_cast<std::size_t>(ty.var);
    // Prefer eliminating a continuous column; keep the earlier one otherwise.
    if (binary_[xi] && !binary_[yi]) {
      std::swap(tx, ty);
      std::swap(xi, yi);
    } else if (binary_[xi] == binary_[yi] && tx.var < ty.var) {
      std::swap(tx, ty);
      std::swap(xi, yi);
    }
    // x = s*y + o
    const double s = -ty.coef / tx.coef;
    const double o = row.rhs / tx.coef;
    if (binary_[xi]) {
      const bool same = std::abs(s - 1.0) < 1e-12 && std::abs(o) < 1e-12;
      const bool complement = std::abs(s + 1.0) < 1e-12 && std::abs(o - 1.0) < 1e-12;
      if (!same && !complement) return false;
    }
    double lo = (lb_[xi] - o) / s;
    double hi = (ub_[xi] - o) / s;
    if (s < 0) std::swap(lo, hi);
    tighten(ty.var, lo, hi);
    base_[xi] = ty.var;
    scale_[xi] = s;
    offset_[xi] = o;
    changed_ = true;
    return true;
  }

  void remove_duplicates() {
    std::map<std::pair<int, std::vector<std::pair<int, double>>>, std::size_t> seen;
    std::vector<Row> kept;
    for (Row& row : rows_) {
      // Aggregation can cancel every term; reduce_rows judges those next pass.
      if (row.terms.empty()) {
        kept.push_back(std::move(row));
        continue;
      }
      // Normalize so the first coefficient is +1; flip sense when dividing by a negative.
      const double lead = row.terms.front().coef;
      std::vector<std::pair<int, double>> key;
      for (const Term& t : row.terms) key.emplace_back(t.var, t.coef / lead);
      Sense sense = row.sense;
      double rhs = row.rhs / lead;
      if (lead < 0 && sense != Sense::kEq) sense = sense == Sense::kLe ? Sense::kGe : Sense::kLe;
      auto [it, inserted] = seen.emplace(std::make_pair(static_cast<int>(sense), key), kept.size());
      if (inserted) {
        kept.push_back(Row{row.name, row.terms, row.sense, row.rhs});
        // Store in normalized form so later duplicates compare directly.
        Row& k = kept.back();
        for (auto& t : k.terms) t.coef /= lead;
        k.sense = sense;
        k.rhs = rhs;
        continue;
      }
      Row& other = kept[it->second];
      changed_ = true;
      if (sense == Sense::kLe) {
        other.rhs = std::min(other.rhs, rhs);
      } else if (sense == Sense::kGe) {
        other.rhs = std::max(other.rhs, rhs);
      } else if (std::abs(other.rhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs))) {
        mark_infeasible("rows '" + other.name + "' and '" + row.name + "' conflict");
      }
    }
    rows_ = std::move(kept);
  }

  const Model& model_;
  std::vector<int> base_;
  std::vector<double> scale_;
  std::vector<double> offset_;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<bool> binary_;
  std::vector<Row> rows_;
  bool changed_ = false;
  bool infeasible_ = false;
  std::string reason_;
};

}  // namespace

Presolved presolve(const Model& linear_model) {
  if (!linear_model.indicators().empty()) {
    fail(ErrorCode::kInternal, "presolve expects a linearized model", "milp");
  }
  Presolver p(linear_model);
  return p.run();
}

std::vector<double> postsolve(const Presolved& presolved, const std::vector<double>& reduced_values) {
  std::vector<double> out(presolved.base.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const int b = presolved.base[j];
    out[j] = presolved.offset[j];
    if (b >= 0) {
      const int r = presolved.reduced_of[static_cast<std::size_t>(b)];
      out[j] += presolved.scale[j] * reduced_values[static_cast<std::size_t>(r)];
    }
  }
  return out;
}

}  // namespace sketchsynth::milp
