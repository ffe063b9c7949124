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

#include "sketchsynth/contiguity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace sketchsynth {
namespace {

using milp::Sense;
using milp::Term;

constexpr const char* kStage = "contiguity";

std::string pair_name(int i, int j) { return "_" + std::to_string(i) + "_" + std::to_string(j); }

}  // namespace

bool contiguity_eligible(const Topology& topology, Rank src, Rank dst, ContiguityScope scope) {
  switch (scope) {
    case ContiguityScope::kAll:
      return true;
    case ContiguityScope::kNone:
      return false;
    case ContiguityScope::kInternode:
      return topology.node_of(src) != topology.node_of(dst);
  }
  return false;
}

ContiguityModel encode_contiguity(const std::vector<Transfer>& transfers, const Ordering& ordering,
                                  const LogicalTopology& lt, Megabytes chunk_size, const ContiguityConfig& config) {
  const Topology& topo = lt.base();
  const std::size_t n = transfers.size();
  if (ordering.sequence.size() != n) {
    fail(ErrorCode::kValidation, "ordering does not cover every routed transfer", kStage);
  }
  {
    std::vector<bool> seen(n, false);
    for (int i : ordering.sequence) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[static_cast<std::size_t>(i)]) {
        fail(ErrorCode::kValidation, "ordering position undefined for a routed transfer", kStage);
      }
      seen[static_cast<std::size_t>(i)] = true;
    }
  }
  const int window = std::max(1, config.max_contiguous);

  ContiguityModel cm;
  cm.transfers = transfers;
  cm.sequence = ordering.sequence;
  cm.chunk_size = chunk_size;

  std::vector<int> singles(n);
  for (std::size_t i = 0; i < n; ++i) singles[i] = static_cast<int>(i);
  const auto chains = serialization_chains(transfers, ordering.sequence, topo);
  cm.separate = retime_asap(transfers, singles, chains, lt, chunk_size);
  const Micros horizon = cm.separate.total;

  // Earliest sends from data dependencies alone, at single-chunk latency.
  const auto deps = data_dependencies(transfers);
  std::vector<Micros> lat1(n), alpha(n), beta_s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transfer& t = transfers[i];
    const Link l = lt.cost_link(t.src, t.dst);
    alpha[i] = l.alpha;
    beta_s[i] = l.beta * chunk_size;
    lat1[i] = alpha[i] + beta_s[i];
  }
  std::vector<Micros> lower(n, 0.0);
  {
    const Timing free = retime_asap(transfers, singles, {}, lt, chunk_size);
    lower = free.send;
  }

  milp::Model& m = cm.model;
  Micros time_lb = 0.0;
  for (std::size_t i = 0; i < n; ++i) time_lb = std::max(time_lb, lower[i] + lat1[i]);
  cm.time_var = m.add_continuous("time", std::min(time_lb, horizon), horizon);
  cm.send.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transfer& t = transfers[i];
    cm.send[i] = m.add_continuous("send_" + std::to_string(i) + "_c" + std::to_string(t.chunk) + "_" +
                                      std::to_string(t.src) + "_" + std::to_string(t.dst),
                                  std::min(lower[i], horizon - lat1[i]), horizon - lat1[i]);
  }

  // Per-link chains and pair binaries within the window.
  std::vector<std::vector<int>> link_chain(topo.links().size());
  std::vector<int> position(n, -1);
  for (int i : ordering.sequence) {
    const Transfer& t = transfers[static_cast<std::size_t>(i)];
    auto& chain = link_chain[*topo.find_link(t.src, t.dst)];
    position[static_cast<std::size_t>(i)] = static_cast<int>(chain.size());
    chain.push_back(i);
  }
  std::vector<std::vector<Term>> extra_lat(n);  // beta*s*t terms per transfer
  for (std::size_t li = 0; li < link_chain.size(); ++li) {
    const auto& chain = link_chain[li];
    const Link& l = topo.links()[li];
    if (window < 2 || chain.size() < 2 || !contiguity_eligible(topo, l.src, l.dst, config.scope)) continue;
    const int k = static_cast<int>(chain.size());
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k && b - a < window; ++b) {
        const int i = chain[static_cast<std::size_t>(a)];
        const int j = chain[static_cast<std::size_t>(b)];
        const int x = m.add_binary("tog" + pair_name(i, j));
        cm.together[{i, j}] = x;
        extra_lat[static_cast<std::size_t>(i)].push_back({x, beta_s[static_cast<std::size_t>(i)]});
        extra_lat[static_cast<std::size_t>(j)].push_back({x, beta_s[static_cast<std::size_t>(j)]});
      }
    }
    auto adj = [&](int a) {
      return cm.together.at({chain[static_cast<std::size_t>(a)], chain[static_cast<std::size_t>(a + 1)]});
    };
    // A pair is together exactly when every adjacent pair between them is.
    for (int a = 0; a < k; ++a) {
      for (int b = a + 2; b < k && b - a < window; ++b) {
        const int i = chain[static_cast<std::size_t>(a)];
        const int j = chain[static_cast<std::size_t>(b)];
        const int x = cm.together.at({i, j});
        std::vector<Term> sum{{x, -1.0}};
        for (int q = a; q < b; ++q) {
          m.add_constraint("trans" + pair_name(i, j) + "_" + std::to_string(q), {{x, 1.0}, {adj(q), -1.0}},
                           Sense::kLe, 0.0);
          sum.push_back({adj(q), 1.0});
        }
        m.add_constraint("transall" + pair_name(i, j), sum, Sense::kLe, b - a - 1);
      }
    }
    // Runs longer than the window are cut somewhere.
    for (int a = 0; a + window < k; ++a) {
      std::vector<Term> sum;
      for (int q = a; q < a + window; ++q) sum.push_back({adj(q), 1.0});
      m.add_constraint("window_" + std::to_string(chain[static_cast<std::size_t>(a)]), sum, Sense::kLe, window - 1);
    }
    // From any position the link still carries the rest of its chain, one
    // alpha per group. Implied by the serialization rows, but linear in the
    // binaries, so the relaxation sees it.
    const Micros a_l = alpha[static_cast<std::size_t>(chain[0])];
    const Micros b_l = beta_s[static_cast<std::size_t>(chain[0])];
    for (int a = 0; a < k - 1; ++a) {
      const int i = chain[static_cast<std::size_t>(a)];
      std::vector<Term> row{{cm.time_var, 1.0}, {cm.send[static_cast<std::size_t>(i)], -1.0}};
      for (int q = a; q + 1 < k; ++q) row.push_back({adj(q), a_l});
      m.add_constraint("tail_" + std::to_string(i), row, Sense::kGe, (k - a) * (a_l + b_l));
    }
  }

  // send_i + lat_i as terms plus constant.
  auto finish = [&](std::size_t i, double sign, std::vector<Term>& terms) -> double {
    terms.push_back({cm.send[i], sign});
    for (const Term& t : extra_lat[i]) terms.push_back({t.var, sign * t.coef});
    return sign * lat1[i];
  };

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Term> terms{{cm.time_var, 1.0}};
    const double c = finish(i, -1.0, terms);
    m.add_constraint("fin_" + std::to_string(i), terms, Sense::kGe, -c);
    for (int d : deps[i]) {
      std::vector<Term> row{{cm.send[i], 1.0}};
      const double cd = finish(static_cast<std::size_t>(d), -1.0, row);
      m.add_constraint("dep_" + std::to_string(i) + "_" + std::to_string(d), row, Sense::kGe, -cd);
    }
  }

  for (const auto& chain : link_chain) {
    for (std::size_t q = 1; q < chain.size(); ++q) {
      const int a = chain[q - 1];
      const int b = chain[q];
      std::vector<Term> row{{cm.send[static_cast<std::size_t>(b)], 1.0}};
      const double c = finish(static_cast<std::size_t>(a), -1.0, row);
      const std::string name = pair_name(a, b);
      auto it = cm.together.find({a, b});
      if (it == cm.together.end()) {
        m.add_constraint("link" + name, row, Sense::kGe, -c);
      } else {
        // The pair's own binary is 0 whenever this row is active.
        std::erase_if(row, [&](const Term& t) { return t.var == it->second; });
        m.add_indicator("apart" + name, it->second, false, row, Sense::kGe, -c);
        m.add_indicator("with" + name, it->second, true,
                        {{cm.send[static_cast<std::size_t>(b)], 1.0}, {cm.send[static_cast<std::size_t>(a)], -1.0}},
                        Sense::kEq, 0.0);
      }
    }
  }

  // Switch sides serialize transfers on different links.
  for (const auto& chain : chains) {
    for (std::size_t q = 1; q < chain.size(); ++q) {
      const int a = chain[q - 1];
      const int b = chain[q];
      const Transfer& ta = transfers[static_cast<std::size_t>(a)];
      const Transfer& tb = transfers[static_cast<std::size_t>(b)];
      if (ta.src == tb.src && ta.dst == tb.dst) continue;  // covered by the link chain
      std::vector<Term> row{{cm.send[static_cast<std::size_t>(b)], 1.0}};
      const double c = finish(static_cast<std::size_t>(a), -1.0, row);
      m.add_constraint("side" + pair_name(a, b), row, Sense::kGe, -c);
    }
  }

  m.set_objective({{cm.time_var, 1.0}});

  cm.start_hint.assign(static_cast<std::size_t>(m.num_variables()), 0.0);
  cm.start_hint[static_cast<std::size_t>(cm.time_var)] = horizon;
  for (std::size_t i = 0; i < n; ++i) cm.start_hint[static_cast<std::size_t>(cm.send[i])] = cm.separate.send[i];
  return cm;
}

Schedule solve_contiguity(const ContiguityModel& cm, const LogicalTopology& lt, const milp::SolverConfig& config) {
  const std::size_t n = cm.transfers.size();
  Schedule out;
  out.chunk_size = cm.chunk_size;
  StageStats stats;
  stats.stage = kStage;
  stats.binaries = cm.model.num_binaries();
  stats.rows = static_cast<int>(cm.model.constraints().size() + cm.model.indicators().size());

  std::vector<int> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i);
  if (n > 0) {
    const milp::Solution sol = milp::solve(cm.model, config, cm.start_hint);
    if (sol.status == milp::SolveStatus::kInfeasible) {
      fail(ErrorCode::kInfeasible, "contiguity model is infeasible; the ordering admits no serialization", kStage);
    }
    if (!sol.has_values()) {
      fail(ErrorCode::kSolverTimeout, "contiguity stopped at its limit without a schedule", kStage);
    }
    stats.status = std::string(milp::to_string(sol.status));
    stats.objective = sol.objective;
    stats.bound = sol.bound;
    stats.gap = sol.gap;
    stats.nodes = sol.nodes;
    stats.lp_iterations = sol.lp_iterations;
    // Union adjacent together-pairs into groups.
    std::vector<int> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> root = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
      return x;
    };
    for (const auto& [pair, var] : cm.together) {
      if (sol.values[static_cast<std::size_t>(var)] > 0.5) {
        const int a = root(pair.first);
        const int b = root(pair.second);
        parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
    for (std::size_t i = 0; i < n; ++i) group[i] = root(static_cast<int>(i));
  } else {
    stats.status = "optimal";
  }

  const auto chains = serialization_chains(cm.transfers, cm.sequence, lt.base());
  const Timing t = retime_asap(cm.transfers, group, chains, lt, cm.chunk_size);
  for (int i : cm.sequence) {
    const auto k = static_cast<std::size_t>(i);
    const Transfer& tr = cm.transfers[k];
    out.sends.push_back({tr.chunk, tr.src, tr.dst, t.send[k], t.arrive[k], group[k], tr.reduce, tr.phase});
  }
  out.total_time = t.total;
  normalize_groups(out);
  out.stats.push_back(stats);
  return out;
}

}  // namespace sketchsynth
