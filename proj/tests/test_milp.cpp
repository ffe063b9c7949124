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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "sketchsynth/common.hpp"
#include "sketchsynth/milp/lp_format.hpp"
#include "sketchsynth/milp/model.hpp"
#include "sketchsynth/milp/presolve.hpp"
#include "sketchsynth/milp/simplex.hpp"
#include "sketchsynth/milp/solver.hpp"

namespace sketchsynth::milp {
namespace {

// Exhaustive oracle: every binary assignment, continuous part solved by
// enumerating vertices of the (bounded) polytope.
double brute_force(const Model& model, bool* feasible) {
  const Model lin = model.linearized();
  std::vector<int> bins, conts;
  for (int j = 0; j < lin.num_variables(); ++j) {
    (lin.variable(j).kind == VarKind::kBinary ? bins : conts).push_back(j);
  }
  const int k = static_cast<int>(conts.size());
  double best = kInfinity;
  *feasible = false;
  for (int mask = 0; mask < (1 << bins.size()); ++mask) {
    std::vector<double> x(static_cast<std::size_t>(lin.num_variables()), 0.0);
    bool bounds_ok = true;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const double v = (mask >> b) & 1;
      const Variable& var = lin.variable(bins[b]);
      if (v < var.lb || v > var.ub) bounds_ok = false;
      x[static_cast<std::size_t>(bins[b])] = v;
    }
    if (!bounds_ok) continue;
    // Candidate hyperplanes over the continuous columns: rows and bounds.
    struct Plane {
      std::vector<double> a;
      double rhs;
    };
    std::vector<Plane> planes;
    for (const auto& c : lin.constraints()) {
      Plane p{std::vector<double>(static_cast<std::size_t>(k), 0.0), c.rhs};
      for (const Term& t : c.terms) {
        auto it = std::find(conts.begin(), conts.end(), t.var);
        if (it == conts.end()) {
          p.rhs -= t.coef * x[static_cast<std::size_t>(t.var)];
        } else {
          p.a[static_cast<std::size_t>(it - conts.begin())] += t.coef;
        }
      }
      planes.push_back(std::move(p));
    }
    for (int i = 0; i < k; ++i) {
      const Variable& var = lin.variable(conts[static_cast<std::size_t>(i)]);
      Plane lo{std::vector<double>(static_cast<std::size_t>(k), 0.0), var.lb};
      lo.a[static_cast<std::size_t>(i)] = 1.0;
      Plane hi = lo;
      hi.rhs = var.ub;
      planes.push_back(lo);
      planes.push_back(hi);
    }
    auto check = [&](std::vector<double>& trial) {
      for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(conts[static_cast<std::size_t>(i)])] = trial[static_cast<std::size_t>(i)];
      if (lin.max_violation(x) > 1e-7) return;
      *feasible = true;
      best = std::min(best, lin.evaluate_objective(x));
    };
    const int p = static_cast<int>(planes.size());
    if (k == 0) {
      std::vector<double> none;
      check(none);
      continue;
    }
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::function<void(int, int)> rec = [&](int depth, int from) {
      if (depth == k) {
        Eigen::MatrixXd a(k, k);
        Eigen::VectorXd b(k);
        for (int r = 0; r < k; ++r) {
          const Plane& pl = planes[static_cast<std::size_t>(pick[static_cast<std::size_t>(r)])];
          for (int c = 0; c < k; ++c) a(r, c) = pl.a[static_cast<std::size_t>(c)];
          b[r] = pl.rhs;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < k) return;
        Eigen::VectorXd sol = lu.solve(b);
        std::vector<double> trial(sol.data(), sol.data() + k);
        check(trial);
        return;
      }
      for (int i = from; i < p; ++i) {
        pick[static_cast<std::size_t>(depth)] = i;
        rec(depth + 1, i + 1);
      }
    };
    rec(0, 0);
  }
  return best;
}

TEST(Milp, MaxOfLowerBounds) {
  Model m;
  const int x = m.add_continuous("x", 0, 100);
  m.add_constraint("lb3", {{x, 1.0}}, Sense::kGe, 3);
  m.add_constraint("lb5", {{x, 1.0}}, Sense::kGe, 5);
  m.set_objective({{x, 1.0}});
  const Solution s = solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.values[0], 5.0, 1e-9);
}

TEST(Milp, KnapsackPair) {
  Model m;
  const int a = m.add_binary("a");
  const int b = m.add_binary("b");
  m.add_constraint("cap", {{a, 1.0}, {b, 1.0}}, Sense::kLe, 1);
  m.set_objective({{a, -3.0}, {b, -4.0}});
  const Solution s = solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, -4.0, 1e-9);
  EXPECT_EQ(s.values[static_cast<std::size_t>(b)], 1.0);
  EXPECT_EQ(s.values[static_cast<std::size_t>(a)], 0.0);
}

TEST(Milp, ForcedIndicator) {
  Model m;
  const int b = m.add_binary("b");
  const int x = m.add_continuous("x", 0, 50);
  m.set_bounds(b, 1, 1);
  m.add_indicator("ind", b, true, {{x, 1.0}}, Sense::kEq, 7);
  m.set_objective({{x, 1.0}});
  const Solution s = solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.values[static_cast<std::size_t>(x)], 7.0, 1e-9);
}

TEST(Milp, InactiveIndicatorDoesNotBind) {
  Model m;
  const int b = m.add_binary("b");
  const int x = m.add_continuous("x", 0, 50);
  m.add_indicator("ind", b, true, {{x, 1.0}}, Sense::kGe, 7);
  m.set_objective({{x, 1.0}, {b, -1.0}});  // b=1 costs x>=7, not worth it
  const Solution s = solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 0.0, 1e-9);
}

TEST(Milp, Infeasible) {
  Model m;
  const int a = m.add_binary("a");
  const int b = m.add_binary("b");
  m.add_constraint("need", {{a, 1.0}, {b, 1.0}}, Sense::kGe, 3);
  EXPECT_EQ(solve(m).status, SolveStatus::kInfeasible);

  Model lp;
  const int x = lp.add_continuous("x", 0, 10);
  const int y = lp.add_continuous("y", 0, 10);
  lp.add_constraint("r1", {{x, 1.0}, {y, 1.0}}, Sense::kGe, 15);
  lp.add_constraint("r2", {{x, 1.0}, {y, -1.0}}, Sense::kEq, 0);
  lp.add_constraint("r3", {{x, 1.0}, {y, 2.0}}, Sense::kLe, 20);
  EXPECT_EQ(solve(lp).status, SolveStatus::kInfeasible);
}

TEST(Milp, Unbounded) {
  Model m;
  const int x = m.add_continuous("x", 0, kInfinity);
  const int y = m.add_continuous("y", 0, kInfinity);
  m.add_constraint("r", {{x, 1.0}, {y, -1.0}}, Sense::kLe, 1);
  m.set_objective({{x, -1.0}});
  EXPECT_EQ(solve(m).status, SolveStatus::kUnbounded);
}

TEST(Milp, MalformedModelsRejected) {
  Model m;
  const int x = m.add_continuous("x", 0, 1);
  m.add_constraint("bad", {{x, std::nan("")}}, Sense::kLe, 1);
  EXPECT_THROW(solve(m), Error);

  Model n;
  n.add_continuous("x", 0, 1);
  n.add_constraint("ghost", {{3, 1.0}}, Sense::kLe, 1);
  EXPECT_THROW(solve(n), Error);

  Model e;
  e.add_continuous("e1", 0, 1);  // not an LP-safe name
  EXPECT_THROW(e.validate(), Error);
}

Model random_model(std::mt19937& rng, bool indicators) {
  std::uniform_int_distribution<int> nbin(1, 5), ncont(0, 3), nrow(1, 5), coef(-4, 4), rhs(-3, 8), bound(1, 6);
  Model m;
  const int b = nbin(rng);
  const int c = ncont(rng);
  for (int i = 0; i < b; ++i) m.add_binary("b" + std::to_string(i));
  for (int i = 0; i < c; ++i) m.add_continuous("x" + std::to_string(i), -bound(rng) / 2.0, bound(rng));
  const int n = b + c;
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int rows = nrow(rng);
  for (int r = 0; r < rows; ++r) {
    std::vector<Term> terms;
    for (int t = 0; t < 3; ++t) terms.push_back({pick(rng), static_cast<double>(coef(rng))});
    const Sense s = static_cast<Sense>(std::uniform_int_distribution<int>(0, 5)(rng) % 3 == 1 ? 1 : (r % 2 ? 0 : 2));
    m.add_constraint("r" + std::to_string(r), terms, s, rhs(rng));
  }
  if (indicators && c > 0) {
    std::uniform_int_distribution<int> pb(0, b - 1), pc(b, n - 1);
    for (int i = 0; i < 2; ++i) {
      std::vector<Term> body{{pc(rng), 1.0}, {pc(rng), static_cast<double>(coef(rng))}};
      body = canonical_terms(body);
      if (body.empty()) continue;
      m.add_indicator("ind" + std::to_string(i), pb(rng), i == 0, body, i == 0 ? Sense::kEq : Sense::kGe,
                      rhs(rng) / 2.0);
    }
  }
  std::vector<Term> obj;
  for (int j = 0; j < n; ++j) obj.push_back({j, static_cast<double>(coef(rng))});
  m.set_objective(obj, 0.5);
  return m;
}

TEST(Milp, MatchesExhaustiveEnumeration) {
  std::mt19937 rng(20261015);
  int feasible_count = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Model m = random_model(rng, trial % 2 == 0);
    bool feasible = false;
    const double oracle = brute_force(m, &feasible);
    const Solution s = solve(m);
    if (!feasible) {
      EXPECT_EQ(s.status, SolveStatus::kInfeasible) << "trial " << trial << "\n" << export_lp(m);
      continue;
    }
    ++feasible_count;
    ASSERT_EQ(s.status, SolveStatus::kOptimal) << "trial " << trial << "\n" << export_lp(m);
    EXPECT_NEAR(s.objective, oracle, 1e-6) << "trial " << trial << "\n" << export_lp(m);
    EXPECT_LE(m.max_violation(s.values), 1e-6);
  }
  EXPECT_GT(feasible_count, 60);
}

TEST(Milp, Deterministic) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = random_model(rng, true);
    const Solution a = solve(m);
    const Solution b = solve(m);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.objective, b.objective);
  }
}

TEST(Milp, StartHintBecomesIncumbent) {
  Model m;
  std::vector<int> bins;
  for (int i = 0; i < 6; ++i) bins.push_back(m.add_binary("b" + std::to_string(i)));
  std::vector<Term> sum;
  for (int b : bins) sum.push_back({b, 1.0});
  m.add_constraint("pick3", sum, Sense::kEq, 3);
  std::vector<Term> obj;
  for (int i = 0; i < 6; ++i) obj.push_back({bins[static_cast<std::size_t>(i)], static_cast<double>(i + 1)});
  m.set_objective(obj);
  SolverConfig cfg;
  cfg.node_limit = 0;
  std::vector<double> hint{0, 0, 0, 1, 1, 1};
  const Solution s = solve(m, cfg, hint);
  ASSERT_EQ(s.status, SolveStatus::kFeasible);
  EXPECT_NEAR(s.objective, 15.0, 1e-9);
  const Solution full = solve(m);
  EXPECT_NEAR(full.objective, 6.0, 1e-9);
}

TEST(Presolve, AggregatesEqualitiesAndPostsolves) {
  Model m;
  const int x = m.add_continuous("x", 0, 10);
  const int y = m.add_continuous("y", 2, 20);
  const int z = m.add_continuous("z", 0, 5);
  m.add_constraint("xy", {{x, 1.0}, {y, -1.0}}, Sense::kEq, 0);
  m.add_constraint("yz", {{y, 1.0}, {z, -2.0}}, Sense::kEq, 1);
  m.add_constraint("dup1", {{x, 1.0}, {z, 1.0}}, Sense::kLe, 12);
  m.add_constraint("dup2", {{x, 2.0}, {z, 2.0}}, Sense::kLe, 20);
  m.set_objective({{z, -1.0}});
  const Presolved p = presolve(m);
  ASSERT_FALSE(p.infeasible);
  EXPECT_EQ(p.reduced.num_variables(), 1);
  EXPECT_LE(p.reduced.constraints().size(), 1u);
  const Solution s = solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  // x = y = 2z + 1, x + z <= 10 -> z <= 3
  EXPECT_NEAR(s.values[static_cast<std::size_t>(z)], 3.0, 1e-9);
  EXPECT_NEAR(s.values[static_cast<std::size_t>(x)], 7.0, 1e-9);
}

TEST(Presolve, DetectsCrossingBounds) {
  Model m;
  const int x = m.add_continuous("x", 0, 10);
  m.add_constraint("hi", {{x, 1.0}}, Sense::kLe, 2);
  m.add_constraint("lo", {{x, 1.0}}, Sense::kGe, 3);
  EXPECT_TRUE(presolve(m).infeasible);
}

TEST(Simplex, WarmStartAfterBoundChange) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6
  LpProblem lp;
  lp.num_rows = 2;
  lp.num_cols = 2;
  lp.col_start = {0, 2, 4};
  lp.row_index = {0, 1, 0, 1};
  lp.value = {1, 3, 2, 1};
  lp.cost = {-1, -1};
  lp.col_lower = {0, 0};
  lp.col_upper = {10, 10};
  lp.row_lower = {-kInfinity, -kInfinity};
  lp.row_upper = {4, 6};
  DualSimplex s(lp);
  ASSERT_EQ(s.solve(), LpStatus::kOptimal);
  EXPECT_NEAR(s.objective(), -2.8, 1e-9);
  s.set_column_bounds(0, 0, 1);
  ASSERT_EQ(s.solve(), LpStatus::kOptimal);
  EXPECT_NEAR(s.objective(), -2.5, 1e-9);
  s.set_column_bounds(0, 0, 10);
  ASSERT_EQ(s.solve(), LpStatus::kOptimal);
  EXPECT_NEAR(s.objective(), -2.8, 1e-9);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomLps) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> coef(-5, 5), rhs(-4, 10);
    Model m;
    const int n = 3;
    for (int j = 0; j < n; ++j) m.add_continuous("x" + std::to_string(j), -2, 4 + j);
    for (int r = 0; r < 4; ++r) {
      std::vector<Term> terms;
      for (int j = 0; j < n; ++j) terms.push_back({j, static_cast<double>(coef(rng))});
      m.add_constraint("r" + std::to_string(r), terms, r % 3 == 0 ? Sense::kGe : Sense::kLe, rhs(rng));
    }
    std::vector<Term> obj;
    for (int j = 0; j < n; ++j) obj.push_back({j, static_cast<double>(coef(rng))});
    m.set_objective(obj);
    bool feasible = false;
    const double oracle = brute_force(m, &feasible);
    const Solution s = solve(m);
    if (!feasible) {
      EXPECT_EQ(s.status, SolveStatus::kInfeasible) << trial;
    } else {
      ASSERT_EQ(s.status, SolveStatus::kOptimal) << trial;
      EXPECT_NEAR(s.objective, oracle, 1e-7) << trial;
    }
  }
}

TEST(LpFormat, IndicatorBecomesTwoBigMRows) {
  Model m;
  const int b = m.add_binary("b");
  const int x = m.add_continuous("x", 0, 10);
  m.add_indicator("link", b, true, {{x, 1.0}}, Sense::kEq, 4);
  const std::string text = export_lp(m);
  EXPECT_NE(text.find(" link_le:"), std::string::npos);
  EXPECT_NE(text.find(" link_ge:"), std::string::npos);
  EXPECT_NE(text.find("Minimize\n obj: 0\n"), std::string::npos);
  EXPECT_NE(text.find("Binaries\n b\n"), std::string::npos);

  // Big-M rows: x + 6 b <= 10 and x - 4 b >= 0
  const Model back = parse_lp(text);
  ASSERT_EQ(back.constraints().size(), 2u);
  EXPECT_EQ(back.constraints()[0].terms, (std::vector<Term>{{0, 6.0}, {1, 1.0}}));
  EXPECT_EQ(back.constraints()[0].rhs, 10.0);
  EXPECT_EQ(back.constraints()[1].terms, (std::vector<Term>{{0, -4.0}, {1, 1.0}}));
  EXPECT_EQ(back.constraints()[1].rhs, 0.0);
}

TEST(Presolve, AggregationThatCancelsWholeRows) {
  // y = x and z = x are aggregated away, which leaves c1 and c2 without
  // terms; they must be judged on their right-hand sides alone.
  for (double rhs : {-1.0, 1.0}) {
    Model m;
    const int x = m.add_continuous("x", 0, 4);
    const int y = m.add_continuous("y", 0, 4);
    const int z = m.add_continuous("z", 0, 4);
    const int b = m.add_binary("b");
    m.add_constraint("ty", {{x, 1.0}, {y, -1.0}}, Sense::kEq, 0.0);
    m.add_constraint("tz", {{z, 1.0}, {x, -1.0}}, Sense::kEq, 0.0);
    m.add_constraint("c1", {{x, 1.0}, {y, -1.0}, {z, 1.0}, {x, -1.0}}, Sense::kGe, rhs);
    m.add_constraint("c2", {{y, 2.0}, {x, -2.0}}, Sense::kGe, 2.0 * rhs);
    m.add_constraint("c3", {{x, 1.0}, {b, -4.0}}, Sense::kLe, 0.0);
    m.set_objective({{x, -1.0}, {b, 0.5}});
    const Solution s = solve(m);
    if (rhs < 0) {
      ASSERT_EQ(s.status, SolveStatus::kOptimal);
      EXPECT_NEAR(s.objective, -3.5, 1e-9);
      EXPECT_LE(m.max_violation(s.values), 1e-9);
    } else {
      EXPECT_EQ(s.status, SolveStatus::kInfeasible);
    }
  }
}

TEST(LpFormat, RoundTripEqualsLinearizedModel) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Model m = random_model(rng, true);
    m.add_continuous("free_col", -kInfinity, kInfinity);
    m.add_continuous("fixed_col", 2.5, 2.5);
    m.add_continuous("tiny", 1e-300, 0.1 + 0.2);
    const Model back = parse_lp(export_lp(m));
    EXPECT_EQ(back, m.linearized()) << export_lp(m);
    EXPECT_EQ(export_lp(back), export_lp(m.linearized()));
  }
}

TEST(LpFormat, ReaderRejectsGarbage) {
  EXPECT_THROW(parse_lp("Minimize\n obj: x\nSubject To\n c1: x <= \nEnd\n"), Error);
  EXPECT_THROW(parse_lp("Maximize\n obj: x\nEnd\n"), Error);
  EXPECT_THROW(parse_lp("Minimize\n obj: 2 x ?\nEnd\n"), Error);
}

}  // namespace
}  // namespace sketchsynth::milp
