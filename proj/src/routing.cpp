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

#include "sketchsynth/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "json.hpp"

namespace sketchsynth {
namespace {

using milp::Sense;
using milp::Term;

constexpr const char* kStage = "routing";

std::string suffix(ChunkId c, Rank u, Rank v) {
  return "_c" + std::to_string(c) + "_" + std::to_string(u) + "_" + std::to_string(v);
}

// Hop distances from `from` (or to it, when `reverse`) over links accepted by `allowed`.
std::vector<int> bfs(const Topology& topo, Rank from, bool reverse, const std::function<bool(std::size_t)>& allowed) {
  std::vector<int> dist(static_cast<std::size_t>(topo.num_ranks()), kUnreachable);
  std::deque<Rank> queue{from};
  dist[static_cast<std::size_t>(from)] = 0;
  while (!queue.empty()) {
    const Rank u = queue.front();
    queue.pop_front();
    const auto& adj = reverse ? topo.in_links(u) : topo.out_links(u);
    for (std::size_t li : adj) {
      if (!allowed(li)) continue;
      const Link& l = topo.links()[li];
      const Rank w = reverse ? l.src : l.dst;
      if (dist[static_cast<std::size_t>(w)] != kUnreachable) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

bool eligible_for_contiguity(const Topology& topo, const Link& l, ContiguityScope scope) {
  switch (scope) {
    case ContiguityScope::kAll:
      return true;
    case ContiguityScope::kNone:
      return false;
    case ContiguityScope::kInternode:
      return topo.is_internode(l);
  }
  return false;
}

}  // namespace

RoutingModel encode_routing(const LogicalTopology& lt, const CollectiveSpec& spec, const CommSketch& sketch,
                            std::optional<Megabytes> chunk_size) {
  const Topology& topo = lt.base();
  const int n = topo.num_ranks();
  if (spec.num_ranks != n) {
    fail(ErrorCode::kValidation,
         "collective has " + std::to_string(spec.num_ranks) + " ranks but topology has " + std::to_string(n), kStage);
  }
  const std::size_t num_links = topo.links().size();
  const int num_chunks = spec.num_chunks;

  RoutingModel rm;
  rm.spec = spec;
  rm.chunk_size = chunk_size ? *chunk_size : sketchsynth::chunk_size(spec, sketch.input_size);
  const Megabytes s = rm.chunk_size;
  for (const Link& l : topo.links()) rm.links.emplace_back(l.src, l.dst);
  rm.switched.assign(num_links, false);
  std::vector<int> util_sign(num_links, 0);
  for (const auto& h : topo.switches()) {
    for (Rank p : h.peers) {
      const auto li = h.kind == SwitchSide::kSend ? topo.find_link(h.anchor, p) : topo.find_link(p, h.anchor);
      if (!li) continue;
      rm.switched[*li] = true;
      if (util_sign[*li] == 0 && h.policy != HyperedgePolicy::kFree) {
        util_sign[*li] = h.policy == HyperedgePolicy::kUcMin ? 1 : -1;
      }
    }
  }

  std::vector<Micros> lat(num_links);
  std::vector<bool> eligible(num_links);
  Micros max_lat = 0.0;
  for (std::size_t li = 0; li < num_links; ++li) {
    const Link& l = topo.links()[li];
    lat[li] = lt.latency(l.src, l.dst, s);
    max_lat = std::max(max_lat, lat[li]);
    eligible[li] = eligible_for_contiguity(topo, l, sketch.contiguity);
  }

  // Corridor of each chunk: links on some near-shortest path to one of its
  // destinations, measured inside the links the relay rule lets it use.
  std::vector<std::vector<bool>> has_var(static_cast<std::size_t>(num_chunks), std::vector<bool>(num_links, false));
  std::vector<Rank> source(static_cast<std::size_t>(num_chunks));
  for (ChunkId c = 0; c < num_chunks; ++c) {
    const auto& pre = spec.precondition[static_cast<std::size_t>(c)];
    if (pre.size() != 1) {
      fail(ErrorCode::kValidation, "routing needs exactly one precondition rank per chunk (chunk " +
                                       std::to_string(c) + ")", kStage);
    }
    const Rank p = pre[0];
    source[static_cast<std::size_t>(c)] = p;
    auto allowed = [&](std::size_t li) {
      const Link& l = topo.links()[li];
      return lt.relay_allowed(p, l.src, l.dst);
    };
    const auto from_p = bfs(topo, p, false, allowed);
    for (Rank d : spec.postcondition[static_cast<std::size_t>(c)]) {
      if (d == p) continue;
      if (from_p[static_cast<std::size_t>(d)] == kUnreachable) {
        fail(ErrorCode::kInfeasible,
             "chunk " + std::to_string(c) + " cannot reach rank " + std::to_string(d) + " in the logical topology",
             kStage);
      }
      const auto to_d = bfs(topo, d, true, allowed);
      const int budget = from_p[static_cast<std::size_t>(d)] + sketch.shortest_path_slack;
      for (std::size_t li = 0; li < num_links; ++li) {
        const Link& l = topo.links()[li];
        if (l.dst == p || !allowed(li)) continue;
        const int a = from_p[static_cast<std::size_t>(l.src)];
        const int b = to_d[static_cast<std::size_t>(l.dst)];
        if (a == kUnreachable || b == kUnreachable) continue;
        if (a + 1 + b <= budget) has_var[static_cast<std::size_t>(c)][li] = true;
      }
    }
  }

  // Earliest possible arrival of each chunk at each rank inside its corridor.
  std::vector<std::vector<Micros>> earliest(static_cast<std::size_t>(num_chunks),
                                            std::vector<Micros>(static_cast<std::size_t>(n), kInfinity));
  for (ChunkId c = 0; c < num_chunks; ++c) {
    auto& dist = earliest[static_cast<std::size_t>(c)];
    std::vector<bool> done(static_cast<std::size_t>(n), false);
    dist[static_cast<std::size_t>(source[static_cast<std::size_t>(c)])] = 0.0;
    for (int it = 0; it < n; ++it) {
      Rank u = -1;
      for (Rank r = 0; r < n; ++r) {
        if (!done[static_cast<std::size_t>(r)] && std::isfinite(dist[static_cast<std::size_t>(r)]) &&
            (u < 0 || dist[static_cast<std::size_t>(r)] < dist[static_cast<std::size_t>(u)])) {
          u = r;
        }
      }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = true;
      for (std::size_t li : topo.out_links(u)) {
        if (!has_var[static_cast<std::size_t>(c)][li]) continue;
        const Rank w = topo.links()[li].dst;
        dist[static_cast<std::size_t>(w)] = std::min(dist[static_cast<std::size_t>(w)], dist[static_cast<std::size_t>(u)] + lat[li]);
      }
    }
  }

  // Any tree needs at most n-1 hops; with ASAP times every start and send of
  // an optimal routing fits under horizon_path.
  const Micros horizon_path = std::max(1, n - 1) * max_lat;
  Micros row_max = horizon_path;
  std::vector<Micros> link_load(num_links, 0.0);
  for (ChunkId c = 0; c < num_chunks; ++c) {
    for (std::size_t li = 0; li < num_links; ++li) {
      if (has_var[static_cast<std::size_t>(c)][li]) link_load[li] += lat[li];
    }
  }
  for (Micros x : link_load) row_max = std::max(row_max, x);
  for (const auto& h : topo.switches()) {
    Micros sum = 0.0;
    for (Rank p : h.peers) {
      const auto li = h.kind == SwitchSide::kSend ? topo.find_link(h.anchor, p) : topo.find_link(p, h.anchor);
      if (li) sum += link_load[*li];
    }
    row_max = std::max(row_max, sum);
  }

  milp::Model& m = rm.model;
  Micros time_lb = 0.0;
  for (ChunkId c = 0; c < num_chunks; ++c) {
    for (Rank d : spec.postcondition[static_cast<std::size_t>(c)]) {
      time_lb = std::max(time_lb, earliest[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)]);
    }
  }
  rm.time_var = m.add_continuous("time", time_lb, row_max);

  rm.is_sent.assign(static_cast<std::size_t>(num_chunks), std::vector<int>(num_links, -1));
  rm.send.assign(static_cast<std::size_t>(num_chunks), std::vector<int>(num_links, -1));
  rm.start.assign(static_cast<std::size_t>(num_chunks), std::vector<int>(static_cast<std::size_t>(n), -1));
  rm.is_util.assign(num_links, -1);

  for (ChunkId c = 0; c < num_chunks; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const Rank p = source[cc];
    auto& start = rm.start[cc];
    start[static_cast<std::size_t>(p)] = m.add_continuous("start_c" + std::to_string(c) + "_" + std::to_string(p), 0, 0);
    for (std::size_t li = 0; li < num_links; ++li) {
      if (!has_var[cc][li]) continue;
      const Rank v = topo.links()[li].dst;
      if (start[static_cast<std::size_t>(v)] < 0) {
        start[static_cast<std::size_t>(v)] = m.add_continuous("start_c" + std::to_string(c) + "_" + std::to_string(v),
                                                              earliest[cc][static_cast<std::size_t>(v)], horizon_path);
      }
    }
    for (std::size_t li = 0; li < num_links; ++li) {
      if (!has_var[cc][li]) continue;
      const Link& l = topo.links()[li];
      const std::string sfx = suffix(c, l.src, l.dst);
      rm.is_sent[cc][li] = m.add_binary("sent" + sfx);
      rm.send[cc][li] = m.add_continuous("send" + sfx, earliest[cc][static_cast<std::size_t>(l.src)], horizon_path);
    }
  }

  for (ChunkId c = 0; c < num_chunks; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const Rank p = source[cc];
    const auto& start = rm.start[cc];

    for (Rank d : spec.postcondition[cc]) {
      if (d == p) continue;
      m.add_constraint("done_c" + std::to_string(c) + "_" + std::to_string(d),
                       {{rm.time_var, 1.0}, {start[static_cast<std::size_t>(d)], -1.0}}, Sense::kGe, 0.0);
    }

    for (std::size_t li = 0; li < num_links; ++li) {
      const int x = rm.is_sent[cc][li];
      if (x < 0) continue;
      const Link& l = topo.links()[li];
      const std::string sfx = suffix(c, l.src, l.dst);
      const int snd = rm.send[cc][li];
      m.add_constraint("ready" + sfx, {{snd, 1.0}, {start[static_cast<std::size_t>(l.src)], -1.0}}, Sense::kGe, 0.0);
      m.add_indicator("arrive" + sfx, x, true, {{start[static_cast<std::size_t>(l.dst)], 1.0}, {snd, -1.0}}, Sense::kEq,
                      lat[li]);
    }

    // Each rank receives a chunk at most once, and exactly once when required.
    std::vector<std::vector<Term>> incoming(static_cast<std::size_t>(n));
    for (std::size_t li = 0; li < num_links; ++li) {
      const int x = rm.is_sent[cc][li];
      if (x >= 0) incoming[static_cast<std::size_t>(topo.links()[li].dst)].push_back({x, 1.0});
    }
    for (Rank v = 0; v < n; ++v) {
      const auto& in = incoming[static_cast<std::size_t>(v)];
      if (in.empty()) continue;
      const bool required = spec.in_postcondition(c, v);
      m.add_constraint("recv_c" + std::to_string(c) + "_" + std::to_string(v), in,
                       required ? Sense::kEq : Sense::kLe, 1.0);
    }

    // Only ranks holding the chunk forward it.
    for (std::size_t li = 0; li < num_links; ++li) {
      const int x = rm.is_sent[cc][li];
      if (x < 0) continue;
      const Rank u = topo.links()[li].src;
      if (u == p) continue;
      std::vector<Term> terms{{x, 1.0}};
      for (const Term& t : incoming[static_cast<std::size_t>(u)]) terms.push_back({t.var, -1.0});
      m.add_constraint("hold" + suffix(c, u, topo.links()[li].dst), terms, Sense::kLe, 0.0);
    }

    // A chunk needed on another node must leave its node and enter each such node.
    std::vector<bool> target_node(topo.nodes().size(), false);
    for (Rank d : spec.postcondition[cc]) {
      if (topo.node_of(d) != topo.node_of(p)) target_node[static_cast<std::size_t>(topo.node_of(d))] = true;
    }
    if (std::find(target_node.begin(), target_node.end(), true) != target_node.end()) {
      std::vector<Term> leave;
      for (std::size_t li = 0; li < num_links; ++li) {
        const int x = rm.is_sent[cc][li];
        const Link& l = topo.links()[li];
        if (x >= 0 && topo.is_internode(l) && topo.node_of(l.src) == topo.node_of(p)) leave.push_back({x, 1.0});
      }
      m.add_constraint("leave_c" + std::to_string(c), leave, Sense::kGe, 1.0);
      for (std::size_t node = 0; node < target_node.size(); ++node) {
        if (!target_node[node]) continue;
        std::vector<Term> enter;
        for (std::size_t li = 0; li < num_links; ++li) {
          const int x = rm.is_sent[cc][li];
          const Link& l = topo.links()[li];
          if (x >= 0 && topo.is_internode(l) && topo.node_of(l.dst) == static_cast<int>(node)) enter.push_back({x, 1.0});
        }
        m.add_constraint("into_c" + std::to_string(c) + "_n" + std::to_string(node), enter, Sense::kGe, 1.0);
      }
    }
  }

  // Relaxed bandwidth: the chunks on one link fit in the collective time. On
  // contiguity-eligible links a group pays alpha once, so only one alpha is
  // charged, keeping the bound below any Stage 3 schedule.
  std::vector<double> load_coef(num_links);
  for (std::size_t li = 0; li < num_links; ++li) {
    const Link& l = topo.links()[li];
    const double beta_s = lt.effective_beta(li) * s;
    load_coef[li] = eligible[li] ? beta_s : lat[li];
    std::vector<Term> terms{{rm.time_var, 1.0}};
    std::vector<int> on_link;
    for (ChunkId c = 0; c < num_chunks; ++c) {
      const int x = rm.is_sent[static_cast<std::size_t>(c)][li];
      if (x < 0) continue;
      terms.push_back({x, -load_coef[li]});
      on_link.push_back(x);
    }
    if (on_link.empty()) continue;
    const std::string name = "load_" + std::to_string(l.src) + "_" + std::to_string(l.dst);
    if (!eligible[li]) {
      m.add_constraint(name, terms, Sense::kGe, 0.0);
      continue;
    }
    for (std::size_t k = 0; k < on_link.size(); ++k) {
      std::vector<Term> row = terms;
      row.push_back({on_link[k], -l.alpha});
      m.add_constraint(name + "_k" + std::to_string(k), row, Sense::kGe, 0.0);
    }
  }
  for (std::size_t h = 0; h < topo.switches().size(); ++h) {
    const auto& hyper = topo.switches()[h];
    std::vector<Term> terms{{rm.time_var, 1.0}};
    for (Rank p : hyper.peers) {
      const auto li = hyper.kind == SwitchSide::kSend ? topo.find_link(hyper.anchor, p) : topo.find_link(p, hyper.anchor);
      if (!li) continue;
      for (ChunkId c = 0; c < num_chunks; ++c) {
        const int x = rm.is_sent[static_cast<std::size_t>(c)][*li];
        if (x >= 0) terms.push_back({x, -load_coef[*li]});
      }
    }
    if (terms.size() == 1) continue;
    m.add_constraint("switch" + std::to_string(h) + "_" + std::string(to_string(hyper.kind)) + "_" +
                         std::to_string(hyper.anchor),
                     terms, Sense::kGe, 0.0);
  }

  // Utilization of switched links, priced by the hyperedge policy.
  Micros min_lat = kInfinity;
  for (std::size_t li = 0; li < num_links; ++li) {
    if (link_load[li] > 0.0) min_lat = std::min(min_lat, lat[li]);
  }
  rm.gamma = std::isfinite(min_lat) ? 1e-3 * min_lat : 0.0;
  std::vector<Term> objective{{rm.time_var, 1.0}};
  for (std::size_t li = 0; li < num_links; ++li) {
    if (util_sign[li] == 0) continue;
    std::vector<Term> sum;
    for (ChunkId c = 0; c < num_chunks; ++c) {
      const int x = rm.is_sent[static_cast<std::size_t>(c)][li];
      if (x >= 0) sum.push_back({x, 1.0});
    }
    if (sum.empty()) continue;
    const Link& l = topo.links()[li];
    const std::string sfx = "_" + std::to_string(l.src) + "_" + std::to_string(l.dst);
    const int u = m.add_binary("util" + sfx);
    rm.is_util[li] = u;
    for (std::size_t k = 0; k < sum.size(); ++k) {
      m.add_constraint("utilge" + sfx + "_k" + std::to_string(k), {{u, 1.0}, {sum[k].var, -1.0}}, Sense::kGe, 0.0);
    }
    std::vector<Term> le{{u, 1.0}};
    for (const Term& t : sum) le.push_back({t.var, -1.0});
    m.add_constraint("utille" + sfx, le, Sense::kLe, 0.0);
    objective.push_back({u, util_sign[li] * rm.gamma});
  }
  m.set_objective(objective);

  // Rotational symmetry.
  for (std::size_t k = 0; k < sketch.symmetry_offsets.size(); ++k) {
    const SymmetryOffset& sym = sketch.symmetry_offsets[k];
    if (sym.group > n) {
      fail(ErrorCode::kValidation, "symmetry group " + std::to_string(sym.group) + " exceeds the rank count", kStage);
    }
    const std::string tag = "sym" + std::to_string(k);
    auto rot = [&](Rank r) { return rotate_rank(sym, n, r); };
    for (ChunkId c = 0; c < num_chunks; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      for (std::size_t li = 0; li < num_links; ++li) {
        const int x = rm.is_sent[cc][li];
        if (x < 0) continue;
        const Link& l = topo.links()[li];
        const ChunkSend img = symmetric_image(sym, spec, {c, l.src, l.dst});
        if (img == ChunkSend{c, l.src, l.dst}) continue;
        const auto lj = topo.find_link(img.src, img.dst);
        const int y = lj ? rm.is_sent[static_cast<std::size_t>(img.chunk)][*lj] : -1;
        if (y < 0) {
          m.set_bounds(x, 0.0, 0.0);
          continue;
        }
        if (std::abs(lat[li] - lat[*lj]) > 1e-9 * std::max(1.0, lat[li])) {
          fail(ErrorCode::kValidation,
               "symmetry offset (" + std::to_string(sym.offset) + "," + std::to_string(sym.group) + ") maps link " +
                   std::to_string(l.src) + "->" + std::to_string(l.dst) + " onto " + std::to_string(img.src) + "->" +
                   std::to_string(img.dst) + " with a different cost",
               kStage);
        }
        const std::string sfx = suffix(c, l.src, l.dst);
        m.add_constraint(tag + "_sent" + sfx, {{x, 1.0}, {y, -1.0}}, Sense::kEq, 0.0);
        m.add_constraint(tag + "_send" + sfx,
                         {{rm.send[cc][li], 1.0}, {rm.send[static_cast<std::size_t>(img.chunk)][*lj], -1.0}},
                         Sense::kEq, 0.0);
      }
      for (Rank r = 0; r < n; ++r) {
        const int a = rm.start[cc][static_cast<std::size_t>(r)];
        if (a < 0) continue;
        const ChunkId ic = spec.map_chunk(c, rot);
        const Rank ir = rot(r);
        if (ic == c && ir == r) continue;
        const int b = rm.start[static_cast<std::size_t>(ic)][static_cast<std::size_t>(ir)];
        if (b < 0) continue;
        m.add_constraint(tag + "_start_c" + std::to_string(c) + "_" + std::to_string(r), {{a, 1.0}, {b, -1.0}},
                         Sense::kEq, 0.0);
      }
    }
  }
  return rm;
}

std::vector<Transfer> RoutingSolution::transfers() const {
  std::vector<Transfer> out;
  for (const auto& tree : paths) {
    for (const auto& s : tree) out.push_back({s.chunk, s.src, s.dst, false, 0});
  }
  return out;
}

RoutingSolution solve_routing(const RoutingModel& rm, const milp::SolverConfig& config) {
  const milp::Solution sol = milp::solve(rm.model, config);
  if (sol.status == milp::SolveStatus::kInfeasible) {
    fail(ErrorCode::kInfeasible, "routing model is infeasible", kStage);
  }
  if (sol.status == milp::SolveStatus::kUnbounded) {
    fail(ErrorCode::kInternal, "routing model is unbounded", kStage);
  }
  if (!sol.has_values()) {
    fail(ErrorCode::kSolverTimeout, "routing stopped at its limit without a feasible routing", kStage);
  }

  RoutingSolution out;
  out.status = std::string(milp::to_string(sol.status));
  out.objective = sol.objective;
  out.lower_bound_time = sol.values[static_cast<std::size_t>(rm.time_var)];
  out.chunk_size = rm.chunk_size;
  out.stats.stage = kStage;
  out.stats.status = out.status;
  out.stats.objective = sol.objective;
  out.stats.bound = sol.bound;
  out.stats.gap = sol.gap;
  out.stats.nodes = sol.nodes;
  out.stats.lp_iterations = sol.lp_iterations;
  out.stats.binaries = rm.model.num_binaries();
  out.stats.rows = static_cast<int>(rm.model.constraints().size() + rm.model.indicators().size());

  const auto& spec = rm.spec;
  const int n = spec.num_ranks;
  std::vector<bool> used(rm.links.size(), false);
  out.paths.resize(static_cast<std::size_t>(spec.num_chunks));
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    std::vector<std::vector<std::size_t>> children(static_cast<std::size_t>(n));
    for (std::size_t li = 0; li < rm.links.size(); ++li) {
      const int x = rm.is_sent[cc][li];
      if (x >= 0 && sol.values[static_cast<std::size_t>(x)] > 0.5) {
        children[static_cast<std::size_t>(rm.links[li].first)].push_back(li);
      }
    }
    for (auto& ch : children) {
      std::sort(ch.begin(), ch.end(), [&](std::size_t a, std::size_t b) { return rm.links[a].second < rm.links[b].second; });
    }
    // Drop branches that deliver to no postcondition rank.
    std::vector<int> keep(static_cast<std::size_t>(n), -1);
    std::function<bool(Rank)> useful = [&](Rank u) {
      int& k = keep[static_cast<std::size_t>(u)];
      if (k >= 0) return k == 1;
      k = 0;
      bool any = spec.in_postcondition(c, u);
      for (std::size_t li : children[static_cast<std::size_t>(u)]) any = useful(rm.links[li].second) || any;
      k = any ? 1 : 0;
      return any;
    };
    const Rank p = spec.precondition[cc][0];
    useful(p);
    std::vector<bool> reached(static_cast<std::size_t>(n), false);
    reached[static_cast<std::size_t>(p)] = true;
    std::function<void(Rank)> walk = [&](Rank u) {
      for (std::size_t li : children[static_cast<std::size_t>(u)]) {
        const Rank v = rm.links[li].second;
        if (keep[static_cast<std::size_t>(v)] != 1 || reached[static_cast<std::size_t>(v)]) continue;
        reached[static_cast<std::size_t>(v)] = true;
        used[li] = true;
        RoutedSend s{c, u, v, sol.values[static_cast<std::size_t>(rm.send[cc][li])],
                     sol.values[static_cast<std::size_t>(rm.start[cc][static_cast<std::size_t>(v)])]};
        out.paths[cc].push_back(s);
        walk(v);
      }
    };
    walk(p);
    for (Rank d : spec.postcondition[cc]) {
      if (!reached[static_cast<std::size_t>(d)]) {
        fail(ErrorCode::kInternal,
             "extracted routing misses chunk " + std::to_string(c) + " at rank " + std::to_string(d), kStage);
      }
    }
  }
  for (std::size_t li = 0; li < rm.links.size(); ++li) {
    if (used[li] && rm.switched[li]) out.utilized.push_back(rm.links[li]);
  }
  return out;
}

std::string serialize_routing(const RoutingSolution& r) {
  nlohmann::ordered_json doc;
  doc["status"] = r.status;
  doc["lower_bound_us"] = r.lower_bound_time;
  doc["objective"] = r.objective;
  doc["chunk_size_mb"] = r.chunk_size;
  nlohmann::ordered_json paths = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.paths.size(); ++c) {
    nlohmann::ordered_json sends = nlohmann::ordered_json::array();
    for (const auto& s : r.paths[c]) {
      sends.push_back({{"src", s.src}, {"dst", s.dst}, {"send_us", s.send_time}, {"arrive_us", s.arrive_time}});
    }
    paths.push_back({{"chunk", c}, {"sends", std::move(sends)}});
  }
  doc["paths"] = std::move(paths);
  nlohmann::ordered_json util = nlohmann::ordered_json::array();
  for (const auto& [u, v] : r.utilized) util.push_back({u, v});
  doc["utilized_switch_links"] = std::move(util);
  return doc.dump(2) + "\n";
}

}  // namespace sketchsynth
