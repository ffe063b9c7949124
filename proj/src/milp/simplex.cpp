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

#include "sketchsynth/milp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "sketchsynth/common.hpp"

namespace sketchsynth::milp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

constexpr double kBig = 1e9;           // stand-in for an infinite column bound
constexpr double kPrimalTol = 1e-8;
constexpr double kDualTol = 1e-8;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr int kRefactorInterval = 64;
constexpr int kStallPivots = 300;
constexpr double kShiftTol = 1e-6;  // reduced-cost slips absorbed by cost shifting
constexpr int kScalingPasses = 6;

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper };

double power_of_two(double v) { return std::exp2(std::round(std::log2(v))); }

// Deterministic value in [0, 1) from an index.
double hash_unit(std::uint64_t j) {
  j += 0x9E3779B97F4A7C15ull;
  j = (j ^ (j >> 30)) * 0xBF58476D1CE4E5B9ull;
  j = (j ^ (j >> 27)) * 0x94D049BB133111EBull;
  j ^= j >> 31;
  return static_cast<double>(j >> 11) * 0x1.0p-53;
}

struct Eta {
  int row = 0;
  double pivot = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

}  // namespace

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kLimit:
      return "limit";
    case LpStatus::kNumericalFailure:
      return "numerical-failure";
  }
  return "numerical-failure";
}

struct DualSimplex::Impl {
  int m = 0;
  int n = 0;
  int total = 0;

  // Scaled structural matrix, both orientations.
  std::vector<int> col_start, col_row;
  std::vector<double> col_val;
  std::vector<int> row_start, row_col;
  std::vector<double> row_val;
  std::vector<double> col_scale, row_scale;

  std::vector<double> lo, up;          // scaled working bounds (columns boxed)
  std::vector<bool> artificial_lo, artificial_up;
  std::vector<double> cost_orig, cost;
  std::vector<double> x, d;
  std::vector<VarStatus> status;
  std::vector<int> basic;              // position -> variable
  std::vector<int> position;           // variable -> position or -1
  std::vector<double> weight;          // dual steepest-edge weights per position

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  std::vector<Eta> etas;
  bool factored = false;
  bool initialized = false;
  long iteration_count = 0;
  int degenerate_streak = 0;
  int shakes = 0;

  // Pivot row workspace.
  std::vector<double> alpha;
  std::vector<int> touched;
  std::vector<char> is_touched;

  explicit Impl(const LpProblem& p) {
    m = p.num_rows;
    n = p.num_cols;
    total = n + m;
    if (static_cast<int>(p.col_start.size()) != n + 1) {
      fail(ErrorCode::kInternal, "LP column pointer has wrong length", "milp");
    }
    col_start = p.col_start;
    col_row = p.row_index;
    col_val = p.value;
    scale();
    build_rows();

    lo.resize(static_cast<std::size_t>(total));
    up.resize(static_cast<std::size_t>(total));
    artificial_lo.assign(static_cast<std::size_t>(n), false);
    artificial_up.assign(static_cast<std::size_t>(n), false);
    cost_orig.assign(static_cast<std::size_t>(total), 0.0);
    for (int j = 0; j < n; ++j) {
      set_structural_bounds(j, p.col_lower[static_cast<std::size_t>(j)], p.col_upper[static_cast<std::size_t>(j)]);
      cost_orig[static_cast<std::size_t>(j)] = p.cost[static_cast<std::size_t>(j)] * col_scale[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m; ++i) {
      const double rs = row_scale[static_cast<std::size_t>(i)];
      lo[static_cast<std::size_t>(n + i)] = p.row_lower[static_cast<std::size_t>(i)] * rs;
      up[static_cast<std::size_t>(n + i)] = p.row_upper[static_cast<std::size_t>(i)] * rs;
    }
    cost = cost_orig;
    x.assign(static_cast<std::size_t>(total), 0.0);
    d.assign(static_cast<std::size_t>(total), 0.0);
    status.assign(static_cast<std::size_t>(total), VarStatus::kAtLower);
    position.assign(static_cast<std::size_t>(total), -1);
    alpha.assign(static_cast<std::size_t>(total), 0.0);
    is_touched.assign(static_cast<std::size_t>(total), 0);
  }

  void set_structural_bounds(int j, double l, double u) {
    const double s = col_scale[static_cast<std::size_t>(j)];
    auto jj = static_cast<std::size_t>(j);
    artificial_lo[jj] = !std::isfinite(l);
    artificial_up[jj] = !std::isfinite(u);
    lo[jj] = artificial_lo[jj] ? -kBig : l / s;
    up[jj] = artificial_up[jj] ? kBig : u / s;
  }

  void scale() {
    col_scale.assign(static_cast<std::size_t>(n), 1.0);
    row_scale.assign(static_cast<std::size_t>(m), 1.0);
    std::vector<double> rmin(static_cast<std::size_t>(m)), rmax(static_cast<std::size_t>(m));
    for (int pass = 0; pass < kScalingPasses; ++pass) {
      std::fill(rmin.begin(), rmin.end(), kInfinity);
      std::fill(rmax.begin(), rmax.end(), 0.0);
      for (int j = 0; j < n; ++j) {
        for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
          const auto i = static_cast<std::size_t>(col_row[static_cast<std::size_t>(k)]);
          const double a = std::abs(col_val[static_cast<std::size_t>(k)]) * col_scale[static_cast<std::size_t>(j)];
          if (a == 0.0) continue;
          rmin[i] = std::min(rmin[i], a);
          rmax[i] = std::max(rmax[i], a);
        }
      }
      for (int i = 0; i < m; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (rmax[ii] > 0.0) row_scale[ii] = 1.0 / std::sqrt(rmin[ii] * rmax[ii]);
      }
      for (int j = 0; j < n; ++j) {
        double cmin = kInfinity, cmax = 0.0;
        for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
          const double a = std::abs(col_val[static_cast<std::size_t>(k)]) *
                           row_scale[static_cast<std::size_t>(col_row[static_cast<std::size_t>(k)])];
          if (a == 0.0) continue;
          cmin = std::min(cmin, a);
          cmax = std::max(cmax, a);
        }
        if (cmax > 0.0) col_scale[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(cmin * cmax);
      }
    }
    for (auto& s : row_scale) s = power_of_two(s);
    for (auto& s : col_scale) s = power_of_two(s);
    for (int j = 0; j < n; ++j) {
      for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
        auto kk = static_cast<std::size_t>(k);
        col_val[kk] *= row_scale[static_cast<std::size_t>(col_row[kk])] * col_scale[static_cast<std::size_t>(j)];
      }
    }
  }

  void build_rows() {
    row_start.assign(static_cast<std::size_t>(m) + 1, 0);
    for (int r : col_row) ++row_start[static_cast<std::size_t>(r) + 1];
    for (int i = 0; i < m; ++i) row_start[static_cast<std::size_t>(i) + 1] += row_start[static_cast<std::size_t>(i)];
    row_col.resize(col_row.size());
    row_val.resize(col_row.size());
    std::vector<int> fill(row_start.begin(), row_start.end() - 1);
    for (int j = 0; j < n; ++j) {
      for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
        const auto i = static_cast<std::size_t>(col_row[static_cast<std::size_t>(k)]);
        const auto slot = static_cast<std::size_t>(fill[i]++);
        row_col[slot] = j;
        row_val[slot] = col_val[static_cast<std::size_t>(k)];
      }
    }
  }

  // ---- column access ----

  double dot_column(int j, const Vec& v) const {
    if (j >= n) return -v[j - n];
    double s = 0.0;
    for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
      s += col_val[static_cast<std::size_t>(k)] * v[col_row[static_cast<std::size_t>(k)]];
    }
    return s;
  }

  void add_column(int j, double scale_by, Vec& v) const {
    if (j >= n) {
      v[j - n] -= scale_by;
      return;
    }
    for (int k = col_start[static_cast<std::size_t>(j)]; k < col_start[static_cast<std::size_t>(j) + 1]; ++k) {
      v[col_row[static_cast<std::size_t>(k)]] += scale_by * col_val[static_cast<std::size_t>(k)];
    }
  }

  bool fixed(int j) const { return lo[static_cast<std::size_t>(j)] == up[static_cast<std::size_t>(j)]; }

  // ---- factorization ----

  bool refactor() {
    etas.clear();
    factored = false;
    if (m == 0) {
      factored = true;
      return true;
    }
    std::vector<Eigen::Triplet<double, int>> trip;
    for (int k = 0; k < m; ++k) {
      const int j = basic[static_cast<std::size_t>(k)];
      if (j >= n) {
        trip.emplace_back(j - n, k, -1.0);
      } else {
        for (int e = col_start[static_cast<std::size_t>(j)]; e < col_start[static_cast<std::size_t>(j) + 1]; ++e) {
          trip.emplace_back(col_row[static_cast<std::size_t>(e)], k, col_val[static_cast<std::size_t>(e)]);
        }
      }
    }
    SpMat b(m, m);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu.analyzePattern(b);
    lu.factorize(b);
    if (lu.info() != Eigen::Success) return false;
    factored = true;
    return true;
  }

  void ftran(Vec& v) const {
    if (m == 0) return;
    v = lu.solve(v).eval();
    for (const Eta& e : etas) {
      const double vr = v[e.row] / e.pivot;
      v[e.row] = vr;
      if (vr == 0.0) continue;
      for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * vr;
    }
  }

  void btran(Vec& v) const {
    if (m == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v[it->row];
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
      v[it->row] = s / it->pivot;
    }
    v = lu.transpose().solve(v).eval();
  }

  void push_eta(int row, const Vec& column) {
    Eta e;
    e.row = row;
    e.pivot = column[row];
    for (int i = 0; i < m; ++i) {
      if (i != row && std::abs(column[i]) > kDropTol) {
        e.index.push_back(i);
        e.value.push_back(column[i]);
      }
    }
    etas.push_back(std::move(e));
  }

  // ---- state ----

  double nonbasic_value(int j) const {
    const auto jj = static_cast<std::size_t>(j);
    if (status[jj] == VarStatus::kAtUpper) return up[jj];
    return lo[jj];
  }

  void place_nonbasic(int j) {
    const auto jj = static_cast<std::size_t>(j);
    const bool lo_ok = std::isfinite(lo[jj]);
    const bool up_ok = std::isfinite(up[jj]);
    if (d[jj] >= 0.0) {
      status[jj] = lo_ok ? VarStatus::kAtLower : VarStatus::kAtUpper;
    } else {
      status[jj] = up_ok ? VarStatus::kAtUpper : VarStatus::kAtLower;
    }
    if (!lo_ok && !up_ok) {
      // Free row slack left nonbasic; pin it at zero.
      lo[jj] = up[jj] = 0.0;
    }
    x[jj] = nonbasic_value(j);
  }

  bool reset_to_slack_basis() {
    basic.assign(static_cast<std::size_t>(m), 0);
    std::fill(position.begin(), position.end(), -1);
    for (int i = 0; i < m; ++i) {
      basic[static_cast<std::size_t>(i)] = n + i;
      position[static_cast<std::size_t>(n + i)] = i;
      status[static_cast<std::size_t>(n + i)] = VarStatus::kBasic;
    }
    for (int j = 0; j < n; ++j) {
      d[static_cast<std::size_t>(j)] = cost[static_cast<std::size_t>(j)];
      place_nonbasic(j);
    }
    weight.assign(static_cast<std::size_t>(m), 1.0);
    if (!refactor()) return false;
    compute_primal();
    compute_duals();
    return true;
  }

  void compute_primal() {
    Vec rhs = Vec::Zero(m);
    for (int j = 0; j < total; ++j) {
      if (status[static_cast<std::size_t>(j)] == VarStatus::kBasic) continue;
      x[static_cast<std::size_t>(j)] = nonbasic_value(j);
      if (x[static_cast<std::size_t>(j)] != 0.0) add_column(j, -x[static_cast<std::size_t>(j)], rhs);
    }
    ftran(rhs);
    for (int k = 0; k < m; ++k) x[static_cast<std::size_t>(basic[static_cast<std::size_t>(k)])] = rhs[k];
  }

  void compute_duals() {
    Vec y(m);
    for (int k = 0; k < m; ++k) y[k] = cost[static_cast<std::size_t>(basic[static_cast<std::size_t>(k)])];
    btran(y);
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      d[jj] = status[jj] == VarStatus::kBasic ? 0.0 : cost[jj] - dot_column(j, y);
    }
  }

  // Restores dual feasibility of nonbasic columns by bound flips where the
  // opposite bound is finite and by cost shifting otherwise. Returns true if
  // any primal value moved.
  // Flips nonbasic columns whose reduced cost has the wrong sign. Violations
  // up to `shift_tol` are absorbed by shifting the cost instead, which keeps
  // the Harris tolerance from flipping columns back and forth.
  bool repair_dual_feasibility(const std::vector<int>& candidates, double tol, double shift_tol = 0.0) {
    Vec delta = Vec::Zero(m);
    bool moved = false;
    for (int j : candidates) {
      const auto jj = static_cast<std::size_t>(j);
      if (status[jj] == VarStatus::kBasic || fixed(j)) continue;
      const bool wrong_lower = status[jj] == VarStatus::kAtLower && d[jj] < -tol;
      const bool wrong_upper = status[jj] == VarStatus::kAtUpper && d[jj] > tol;
      if (!wrong_lower && !wrong_upper) continue;
      const double target = wrong_lower ? up[jj] : lo[jj];
      if (std::abs(d[jj]) <= shift_tol) {
        cost[jj] -= d[jj];
        d[jj] = 0.0;
      } else if (std::isfinite(target)) {
        const double step = target - x[jj];
        status[jj] = wrong_lower ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x[jj] = target;
        add_column(j, step, delta);
        moved = true;
      } else {
        cost[jj] -= d[jj];
        d[jj] = 0.0;
      }
    }
    if (moved) {
      ftran(delta);
      for (int k = 0; k < m; ++k) x[static_cast<std::size_t>(basic[static_cast<std::size_t>(k)])] -= delta[k];
    }
    return moved;
  }

  std::vector<int> all_nonbasic() const {
    std::vector<int> out;
    for (int j = 0; j < total; ++j) {
      if (status[static_cast<std::size_t>(j)] != VarStatus::kBasic) out.push_back(j);
    }
    return out;
  }

  void perturb_costs() {
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      cost[jj] = cost_orig[jj];
      if (status[jj] == VarStatus::kBasic || fixed(j)) continue;
      const double eps = (1e-7 + 1e-7 * std::abs(cost_orig[jj])) * (1.0 + hash_unit(static_cast<std::uint64_t>(j)));
      const double shift = status[jj] == VarStatus::kAtLower ? eps : -eps;
      cost[jj] += shift;
      d[jj] += shift;
    }
  }

  // Adds a larger, salted perturbation in the dual feasible direction.
  void shake_costs() {
    ++shakes;
    const double scale = std::min(1e-3, 1e-6 * std::pow(4.0, std::min(shakes, 10)));
    for (int j = 0; j < total; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if (status[jj] == VarStatus::kBasic || fixed(j)) continue;
      const double u = hash_unit(static_cast<std::uint64_t>(j) * 7919u + static_cast<std::uint64_t>(shakes));
      const double eps = scale * (1.0 + std::abs(cost_orig[jj])) * (0.5 + u);
      const double shift = status[jj] == VarStatus::kAtLower ? eps : -eps;
      cost[jj] += shift;
      d[jj] += shift;
    }
  }

  void restore_costs() {
    cost = cost_orig;
    compute_duals();
  }

  // Computes alpha = row r of B^-1 [A -I] over nonbasic columns.
  void pivot_row(const Vec& rho) {
    for (int j : touched) {
      alpha[static_cast<std::size_t>(j)] = 0.0;
      is_touched[static_cast<std::size_t>(j)] = 0;
    }
    touched.clear();
    for (int i = 0; i < m; ++i) {
      const double ri = rho[i];
      if (std::abs(ri) <= kDropTol) continue;
      for (int k = row_start[static_cast<std::size_t>(i)]; k < row_start[static_cast<std::size_t>(i) + 1]; ++k) {
        const int j = row_col[static_cast<std::size_t>(k)];
        const auto jj = static_cast<std::size_t>(j);
        if (status[jj] == VarStatus::kBasic) continue;
        if (!is_touched[jj]) {
          is_touched[jj] = 1;
          touched.push_back(j);
        }
        alpha[jj] += ri * row_val[static_cast<std::size_t>(k)];
      }
      const int s = n + i;
      const auto ss = static_cast<std::size_t>(s);
      if (status[ss] != VarStatus::kBasic) {
        if (!is_touched[ss]) {
          is_touched[ss] = 1;
          touched.push_back(s);
        }
        alpha[ss] -= ri;
      }
    }
  }

  double infeasibility(int j) const {
    const auto jj = static_cast<std::size_t>(j);
    const double tol = kPrimalTol * std::max(1.0, std::min(std::abs(x[jj]), 1e4));
    if (x[jj] < lo[jj] - tol) return lo[jj] - x[jj];
    if (x[jj] > up[jj] + tol) return x[jj] - up[jj];
    return 0.0;
  }

  bool deadline_passed(const LpLimits& limits) const {
    return limits.deadline != std::chrono::steady_clock::time_point::max() &&
           std::chrono::steady_clock::now() >= limits.deadline;
  }

  LpStatus dual_phase(const LpLimits& limits) {
    bool fresh = false;
    while (true) {
      if (iteration_count >= limits.max_iterations || deadline_passed(limits)) return LpStatus::kLimit;
      if (static_cast<int>(etas.size()) >= kRefactorInterval) {
        if (!refactor() && !reset_to_slack_basis()) return LpStatus::kNumericalFailure;
        compute_primal();
        compute_duals();
        repair_dual_feasibility(all_nonbasic(), kDualTol);
      }

      int r = -1;
      double best = 0.0;
      for (int k = 0; k < m; ++k) {
        const double inf = infeasibility(basic[static_cast<std::size_t>(k)]);
        if (inf <= 0.0) continue;
        const double score = inf * inf / weight[static_cast<std::size_t>(k)];
        if (score > best) {
          best = score;
          r = k;
        }
      }
      if (r < 0) return LpStatus::kOptimal;

      const int p = basic[static_cast<std::size_t>(r)];
      const auto pp = static_cast<std::size_t>(p);
      const bool to_lower = x[pp] < lo[pp];
      const double delta = x[pp] - (to_lower ? lo[pp] : up[pp]);

      Vec rho = Vec::Zero(m);
      rho[r] = 1.0;
      btran(rho);
      pivot_row(rho);

      // Harris two-pass ratio test.
      double theta_max = kInfinity;
      for (int j : touched) {
        const auto jj = static_cast<std::size_t>(j);
        if (fixed(j)) continue;
        const double a = alpha[jj];
        if (std::abs(a) < kPivotTol) continue;
        const bool at_lower = status[jj] == VarStatus::kAtLower;
        const bool candidate = delta < 0 ? (at_lower ? a < 0 : a > 0) : (at_lower ? a > 0 : a < 0);
        if (!candidate) continue;
        const double dj = at_lower ? d[jj] : -d[jj];
        theta_max = std::min(theta_max, (std::max(dj, 0.0) + kDualTol) / std::abs(a));
      }
      int q = -1;
      double best_abs = 0.0;
      for (int j : touched) {
        const auto jj = static_cast<std::size_t>(j);
        if (fixed(j)) continue;
        const double a = alpha[jj];
        if (std::abs(a) < kPivotTol) continue;
        const bool at_lower = status[jj] == VarStatus::kAtLower;
        const bool candidate = delta < 0 ? (at_lower ? a < 0 : a > 0) : (at_lower ? a > 0 : a < 0);
        if (!candidate) continue;
        const double dj = std::max(at_lower ? d[jj] : -d[jj], 0.0);
        if (dj / std::abs(a) <= theta_max && (std::abs(a) > best_abs || (std::abs(a) == best_abs && j < q))) {
          best_abs = std::abs(a);
          q = j;
        }
      }
      if (q < 0) {
        if (!fresh) {
          if (!refactor() && !reset_to_slack_basis()) return LpStatus::kNumericalFailure;
          compute_primal();
          compute_duals();
          repair_dual_feasibility(all_nonbasic(), kDualTol);
          fresh = true;
          continue;
        }
        return LpStatus::kInfeasible;
      }

      Vec col = Vec::Zero(m);
      add_column(q, 1.0, col);
      ftran(col);
      const double pivot = col[r];
      const double row_pivot = alpha[static_cast<std::size_t>(q)];
      if (std::abs(pivot - row_pivot) > 1e-7 * (1.0 + std::abs(pivot)) || std::abs(pivot) < kPivotTol) {
        if (etas.empty()) {
          if (!reset_to_slack_basis()) return LpStatus::kNumericalFailure;
        } else if (!refactor() && !reset_to_slack_basis()) {
          return LpStatus::kNumericalFailure;
        }
        compute_primal();
        compute_duals();
        repair_dual_feasibility(all_nonbasic(), kDualTol);
        continue;
      }
      fresh = false;

      Vec tau = rho;
      ftran(tau);

      const double theta_d = d[static_cast<std::size_t>(q)] / row_pivot;
      for (int j : touched) d[static_cast<std::size_t>(j)] -= theta_d * alpha[static_cast<std::size_t>(j)];
      d[pp] = -theta_d;
      d[static_cast<std::size_t>(q)] = 0.0;
      // Long runs of dual degenerate pivots can cycle; widen the cost
      // perturbation to break the ties.
      if (std::abs(theta_d) <= kDualTol) {
        if (++degenerate_streak >= kStallPivots) {
          degenerate_streak = 0;
          shake_costs();
        }
      } else {
        degenerate_streak = 0;
      }

      const double theta_p = delta / pivot;
      for (int k = 0; k < m; ++k) {
        if (col[k] != 0.0) x[static_cast<std::size_t>(basic[static_cast<std::size_t>(k)])] -= theta_p * col[k];
      }
      x[static_cast<std::size_t>(q)] += theta_p;
      x[pp] = to_lower ? lo[pp] : up[pp];

      const double wr = weight[static_cast<std::size_t>(r)];
      for (int k = 0; k < m; ++k) {
        if (k == r || col[k] == 0.0) continue;
        const double ratio = col[k] / pivot;
        auto& w = weight[static_cast<std::size_t>(k)];
        w = std::max(w - 2.0 * ratio * tau[k] + ratio * ratio * wr, 1e-8);
      }
      weight[static_cast<std::size_t>(r)] = std::max(wr / (pivot * pivot), 1e-8);

      basic[static_cast<std::size_t>(r)] = q;
      position[static_cast<std::size_t>(q)] = r;
      position[pp] = -1;
      status[pp] = to_lower ? VarStatus::kAtLower : VarStatus::kAtUpper;
      status[static_cast<std::size_t>(q)] = VarStatus::kBasic;
      push_eta(r, col);
      ++iteration_count;

      std::vector<int> changed = touched;
      changed.push_back(p);
      repair_dual_feasibility(changed, kDualTol, kShiftTol);
    }
  }

  // Primal simplex from a primal feasible basis; removes dual
  // infeasibilities left after the cost perturbation is dropped.
  LpStatus primal_phase(const LpLimits& limits) {
    while (true) {
      if (iteration_count >= limits.max_iterations || deadline_passed(limits)) return LpStatus::kLimit;
      if (static_cast<int>(etas.size()) >= kRefactorInterval) {
        if (!refactor()) return LpStatus::kNumericalFailure;
        compute_primal();
        compute_duals();
      }
      int q = -1;
      double best = 0.0;
      for (int j = 0; j < total; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        if (status[jj] == VarStatus::kBasic || fixed(j)) continue;
        double viol = 0.0;
        if (status[jj] == VarStatus::kAtLower && d[jj] < -kDualTol) viol = -d[jj];
        if (status[jj] == VarStatus::kAtUpper && d[jj] > kDualTol) viol = d[jj];
        if (viol > best) {
          best = viol;
          q = j;
        }
      }
      if (q < 0) return LpStatus::kOptimal;
      const auto qq = static_cast<std::size_t>(q);
      const double dir = status[qq] == VarStatus::kAtLower ? 1.0 : -1.0;

      Vec col = Vec::Zero(m);
      add_column(q, 1.0, col);
      ftran(col);

      // x_B(t) = x_B - t * dir * col
      double theta = up[qq] - lo[qq];
      int r = -1;
      bool leave_to_lower = false;
      double r_abs = 0.0;
      for (int k = 0; k < m; ++k) {
        const double a = dir * col[k];
        if (std::abs(a) < kPivotTol) continue;
        const auto bj = static_cast<std::size_t>(basic[static_cast<std::size_t>(k)]);
        double limit;
        bool lower_hit;
        if (a > 0) {
          if (!std::isfinite(lo[bj])) continue;
          limit = std::max(x[bj] - lo[bj], 0.0) / a;
          lower_hit = true;
        } else {
          if (!std::isfinite(up[bj])) continue;
          limit = std::max(up[bj] - x[bj], 0.0) / -a;
          lower_hit = false;
        }
        if (limit < theta - 1e-12 || (limit <= theta + 1e-12 && r >= 0 && std::abs(a) > r_abs)) {
          theta = limit;
          r = k;
          leave_to_lower = lower_hit;
          r_abs = std::abs(a);
        }
      }
      if (!std::isfinite(theta)) return LpStatus::kUnbounded;

      const double step = dir * theta;
      for (int k = 0; k < m; ++k) {
        if (col[k] != 0.0) x[static_cast<std::size_t>(basic[static_cast<std::size_t>(k)])] -= step * col[k];
      }
      x[qq] += step;
      ++iteration_count;

      if (r < 0) {
        // Bound flip of the entering column.
        status[qq] = status[qq] == VarStatus::kAtLower ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x[qq] = nonbasic_value(q);
        continue;
      }

      const int p = basic[static_cast<std::size_t>(r)];
      const auto pp = static_cast<std::size_t>(p);
      Vec rho = Vec::Zero(m);
      rho[r] = 1.0;
      btran(rho);
      pivot_row(rho);
      const double theta_d = d[qq] / col[r];
      for (int j : touched) d[static_cast<std::size_t>(j)] -= theta_d * alpha[static_cast<std::size_t>(j)];
      d[pp] = -theta_d;
      d[qq] = 0.0;

      x[pp] = leave_to_lower ? lo[pp] : up[pp];
      basic[static_cast<std::size_t>(r)] = q;
      position[qq] = r;
      position[pp] = -1;
      status[pp] = leave_to_lower ? VarStatus::kAtLower : VarStatus::kAtUpper;
      status[qq] = VarStatus::kBasic;
      weight[static_cast<std::size_t>(r)] = 1.0;
      push_eta(r, col);
    }
  }

  bool primal_feasible() const {
    for (int k = 0; k < m; ++k) {
      if (infeasibility(basic[static_cast<std::size_t>(k)]) > 0.0) return false;
    }
    return true;
  }

  LpStatus solve(const LpLimits& limits) {
    bool cold = false;
    if (!initialized) {
      initialized = true;
      cold = true;
      if (!reset_to_slack_basis()) return LpStatus::kNumericalFailure;
    } else {
      if (!factored && !refactor() && !reset_to_slack_basis()) return LpStatus::kNumericalFailure;
      cost = cost_orig;
      compute_primal();
      compute_duals();
    }
    const LpStatus st = run_phases(limits);
    if (st != LpStatus::kNumericalFailure || cold) return st;
    // A warm basis that drifted; start over from the slack basis once.
    cost = cost_orig;
    if (!reset_to_slack_basis()) return LpStatus::kNumericalFailure;
    return run_phases(limits);
  }

  LpStatus run_phases(const LpLimits& limits) {
    repair_dual_feasibility(all_nonbasic(), kDualTol);
    perturb_costs();

    LpStatus st = LpStatus::kOptimal;
    for (int round = 0; round < 6; ++round) {
      st = dual_phase(limits);
      if (st != LpStatus::kOptimal) {
        cost = cost_orig;
        return st;
      }
      restore_costs();
      st = primal_phase(limits);
      if (st != LpStatus::kOptimal) return st;
      if (!refactor() && !reset_to_slack_basis()) return LpStatus::kNumericalFailure;
      compute_primal();
      compute_duals();
      if (primal_feasible()) break;
      repair_dual_feasibility(all_nonbasic(), kDualTol);
    }
    if (!primal_feasible()) return LpStatus::kNumericalFailure;
    for (int j = 0; j < n; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if ((artificial_up[jj] && x[jj] >= kBig * 0.5) || (artificial_lo[jj] && x[jj] <= -kBig * 0.5)) {
        return LpStatus::kUnbounded;
      }
    }
    return LpStatus::kOptimal;
  }

  double objective() const {
    double v = 0.0;
    for (int j = 0; j < n; ++j) v += cost_orig[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return v;
  }
};

DualSimplex::DualSimplex(const LpProblem& problem) : impl_(std::make_unique<Impl>(problem)) {}
DualSimplex::~DualSimplex() = default;

void DualSimplex::set_column_bounds(int col, double lower, double upper) {
  impl_->set_structural_bounds(col, lower, upper);
  auto& im = *impl_;
  const auto jj = static_cast<std::size_t>(col);
  if (im.status[jj] != VarStatus::kBasic) im.x[jj] = im.nonbasic_value(col);
}

double DualSimplex::column_lower(int col) const {
  const auto jj = static_cast<std::size_t>(col);
  if (impl_->artificial_lo[jj]) return -kInfinity;
  return impl_->lo[jj] * impl_->col_scale[jj];
}

double DualSimplex::column_upper(int col) const {
  const auto jj = static_cast<std::size_t>(col);
  if (impl_->artificial_up[jj]) return kInfinity;
  return impl_->up[jj] * impl_->col_scale[jj];
}

LpStatus DualSimplex::solve(const LpLimits& limits) { return impl_->solve(limits); }

double DualSimplex::objective() const { return impl_->objective(); }

std::vector<double> DualSimplex::column_values() const {
  std::vector<double> out(static_cast<std::size_t>(impl_->n));
  for (int j = 0; j < impl_->n; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    out[jj] = impl_->x[jj] * impl_->col_scale[jj];
  }
  return out;
}

long DualSimplex::iterations() const { return impl_->iteration_count; }

}  // namespace sketchsynth::milp
