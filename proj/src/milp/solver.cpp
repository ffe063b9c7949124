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

#include "sketchsynth/milp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "sketchsynth/common.hpp"
#include "sketchsynth/milp/presolve.hpp"
#include "sketchsynth/milp/simplex.hpp"

namespace sketchsynth::milp {
namespace {

using Clock = std::chrono::steady_clock;

LpProblem to_lp(const Model& model) {
  LpProblem lp;
  lp.num_cols = model.num_variables();
  lp.num_rows = static_cast<int>(model.constraints().size());
  std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(lp.num_cols));
  for (int i = 0; i < lp.num_rows; ++i) {
    const Constraint& c = model.constraints()[static_cast<std::size_t>(i)];
    for (const Term& t : c.terms) cols[static_cast<std::size_t>(t.var)].emplace_back(i, t.coef);
    lp.row_lower.push_back(c.sense == Sense::kLe ? -kInfinity : c.rhs);
    lp.row_upper.push_back(c.sense == Sense::kGe ? kInfinity : c.rhs);
  }
  lp.col_start.push_back(0);
  for (const auto& col : cols) {
    for (const auto& [row, coef] : col) {
      lp.row_index.push_back(row);
      lp.value.push_back(coef);
    }
    lp.col_start.push_back(static_cast<int>(lp.row_index.size()));
  }
  lp.cost.assign(static_cast<std::size_t>(lp.num_cols), 0.0);
  for (const Term& t : model.objective()) lp.cost[static_cast<std::size_t>(t.var)] += t.coef;
  for (const Variable& v : model.variables()) {
    lp.col_lower.push_back(v.lb);
    lp.col_upper.push_back(v.ub);
  }
  return lp;
}

struct Node {
  long id = 0;
  double bound = -kInfinity;
  std::vector<std::pair<int, double>> fixes;  // (binary position, value)
};

class BranchAndBound {
 public:
  BranchAndBound(const Model& model, const SolverConfig& config)
      : model_(model), config_(config), start_time_(Clock::now()) {
    deadline_ = start_time_ + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(std::max(config.time_limit_seconds, 0.0)));
  }

  Solution run(const std::optional<std::vector<double>>& start) {
    model_.validate();
    const Model lin = model_.linearized();
    pre_ = presolve(lin);
    Solution sol;
    if (pre_.infeasible) {
      sol.status = SolveStatus::kInfeasible;
      return finish(sol);
    }
    const Model& red = pre_.reduced;
    if (red.num_variables() == 0) {
      accept({});
      sol.status = incumbent_ ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
      return finish(sol);
    }
    constant_ = red.objective_constant();
    lp_ = std::make_unique<DualSimplex>(to_lp(red));
    for (int j = 0; j < red.num_variables(); ++j) {
      if (red.variable(j).kind == VarKind::kBinary) binaries_.push_back(j);
    }
    for (int j : binaries_) {
      root_lo_.push_back(red.variable(j).lb);
      root_hi_.push_back(red.variable(j).ub);
    }
    cur_lo_ = root_lo_;
    cur_hi_ = root_hi_;

    if (start) try_start(*start);

    std::map<long, Node> open;
    std::set<std::pair<double, long>> by_bound;
    long next_id = 0;
    auto push = [&](Node node) {
      node.id = next_id++;
      by_bound.emplace(node.bound, node.id);
      open.emplace(node.id, std::move(node));
    };
    push(Node{});

    bool exhausted = true;
    double gap_pruned = kInfinity;
    while (!open.empty()) {
      if (nodes_ >= config_.node_limit || Clock::now() >= deadline_) {
        exhausted = false;
        break;
      }
      long id;
      if (!incumbent_) {
        id = open.rbegin()->first;
      } else {
        id = by_bound.begin()->second;
      }
      Node node = std::move(open.at(id));
      open.erase(id);
      by_bound.erase({node.bound, node.id});
      if (incumbent_ && node.bound >= cutoff()) {
        if (node.bound < incumbent_obj_) gap_pruned = std::min(gap_pruned, node.bound);
        continue;
      }

      apply(node.fixes);
      LpLimits limits;
      limits.deadline = deadline_;
      const LpStatus st = lp_->solve(limits);
      ++nodes_;
      if (st == LpStatus::kLimit) {
        by_bound.emplace(node.bound, node.id);
        open.emplace(node.id, std::move(node));
        exhausted = false;
        break;
      }
      if (st == LpStatus::kNumericalFailure) {
        fail(ErrorCode::kSolverFailure, "numerical failure in the LP relaxation at node " +
                                            std::to_string(nodes_), "milp");
      }
      if (st == LpStatus::kUnbounded) {
        sol.status = SolveStatus::kUnbounded;
        return finish(sol);
      }
      if (st == LpStatus::kInfeasible) continue;

      const double obj = lp_->objective() + constant_;
      if (incumbent_ && obj >= cutoff()) {
        if (obj < incumbent_obj_) gap_pruned = std::min(gap_pruned, obj);
        continue;
      }
      const std::vector<double> vals = lp_->column_values();
      int branch = -1;
      double best_frac = 0.0;
      for (std::size_t k = 0; k < binaries_.size(); ++k) {
        const double v = vals[static_cast<std::size_t>(binaries_[k])];
        const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
        if (frac > config_.int_tol && frac > best_frac + 1e-12) {
          best_frac = frac;
          branch = static_cast<int>(k);
        }
      }
      if (branch < 0) {
        polish(vals);
        continue;
      }
      const double v = vals[static_cast<std::size_t>(binaries_[static_cast<std::size_t>(branch)])];
      const double first = v >= 0.5 ? 1.0 : 0.0;
      Node second_child{0, obj, node.fixes};
      second_child.fixes.emplace_back(branch, 1.0 - first);
      Node first_child{0, obj, std::move(node.fixes)};
      first_child.fixes.emplace_back(branch, first);
      push(std::move(second_child));
      push(std::move(first_child));
    }

    double bound = gap_pruned;
    for (const auto& [b, id] : by_bound) {
      (void)id;
      bound = std::min(bound, b);
      break;
    }
    if (incumbent_) {
      sol.status = exhausted ? SolveStatus::kOptimal : SolveStatus::kFeasible;
      bound = std::min(bound, incumbent_obj_);
    } else {
      sol.status = exhausted ? SolveStatus::kInfeasible : SolveStatus::kNoSolution;
    }
    sol.bound = bound;
    return finish(sol);
  }

 private:
  double cutoff() const {
    return incumbent_obj_ - std::max(config_.abs_gap_tol, config_.rel_gap_tol * std::abs(incumbent_obj_));
  }

  void set_binary(std::size_t k, double lo, double hi) {
    if (cur_lo_[k] == lo && cur_hi_[k] == hi) return;
    cur_lo_[k] = lo;
    cur_hi_[k] = hi;
    lp_->set_column_bounds(binaries_[k], lo, hi);
  }

  void apply(const std::vector<std::pair<int, double>>& fixes) {
    std::vector<double> lo = root_lo_;
    std::vector<double> hi = root_hi_;
    for (const auto& [k, v] : fixes) {
      lo[static_cast<std::size_t>(k)] = v;
      hi[static_cast<std::size_t>(k)] = v;
    }
    for (std::size_t k = 0; k < binaries_.size(); ++k) set_binary(k, lo[k], hi[k]);
  }

  // Fixes every binary at its rounded value and re-solves, so the candidate
  // carries exact integers and a consistent continuous completion.
  void polish(const std::vector<double>& vals) {
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const double v = std::round(vals[static_cast<std::size_t>(binaries_[k])]);
      set_binary(k, v, v);
    }
    LpLimits limits;
    limits.deadline = deadline_;
    if (lp_->solve(limits) != LpStatus::kOptimal) return;
    accept(lp_->column_values());
  }

  void try_start(const std::vector<double>& start) {
    if (start.size() != static_cast<std::size_t>(model_.num_variables())) return;
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const int orig = pre_.original_of[static_cast<std::size_t>(binaries_[k])];
      double v = std::round(start[static_cast<std::size_t>(orig)]);
      v = std::clamp(v, root_lo_[k], root_hi_[k]);
      set_binary(k, v, v);
    }
    LpLimits limits;
    limits.deadline = deadline_;
    if (lp_->solve(limits) == LpStatus::kOptimal) accept(lp_->column_values());
  }

  void accept(const std::vector<double>& reduced_values) {
    std::vector<double> full = postsolve(pre_, reduced_values);
    for (std::size_t j = 0; j < full.size(); ++j) {
      const Variable& v = model_.variables()[j];
      if (v.kind == VarKind::kBinary) full[j] = std::round(full[j]);
      full[j] = std::clamp(full[j], v.lb, v.ub);
    }
    const double violation = model_.max_violation(full, config_.int_tol);
    if (violation > config_.feas_tol) {
      ++rejected_;
      return;
    }
    const double obj = model_.evaluate_objective(full);
    if (!incumbent_ || obj < incumbent_obj_) {
      incumbent_ = std::move(full);
      incumbent_obj_ = obj;
    }
  }

  Solution finish(Solution sol) {
    sol.nodes = nodes_;
    sol.lp_iterations = lp_ ? lp_->iterations() : 0;
    sol.seconds = std::chrono::duration<double>(Clock::now() - start_time_).count();
    if (incumbent_ && (sol.status == SolveStatus::kOptimal || sol.status == SolveStatus::kFeasible)) {
      sol.values = *incumbent_;
      sol.objective = incumbent_obj_;
      if (sol.status == SolveStatus::kOptimal && !std::isfinite(sol.bound)) sol.bound = incumbent_obj_;
      sol.gap = std::max(0.0, sol.objective - sol.bound) / std::max(1.0, std::abs(sol.objective));
    }
    if (!incumbent_ && rejected_ > 0 && sol.status == SolveStatus::kInfeasible) {
      fail(ErrorCode::kSolverFailure,
           "numerical failure: " + std::to_string(rejected_) + " integral LP solutions violated the model",
           "milp");
    }
    return sol;
  }

  const Model& model_;
  SolverConfig config_;
  Clock::time_point start_time_;
  Clock::time_point deadline_;
  Presolved pre_;
  double constant_ = 0.0;
  std::unique_ptr<DualSimplex> lp_;
  std::vector<int> binaries_;
  std::vector<double> root_lo_, root_hi_, cur_lo_, cur_hi_;
  std::optional<std::vector<double>> incumbent_;
  double incumbent_obj_ = kInfinity;
  long nodes_ = 0;
  long rejected_ = 0;
};

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kFeasible:
      return "feasible-incumbent";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kNoSolution:
      return "no-incumbent";
  }
  return "no-incumbent";
}

Solution solve(const Model& model, const SolverConfig& config, const std::optional<std::vector<double>>& start) {
  BranchAndBound bb(model, config);
  return bb.run(start);
}

}  // namespace sketchsynth::milp
