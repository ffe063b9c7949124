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
#include <functional>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sketchsynth/routing.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace sketchsynth {
namespace {

using testing::expect_error;
using testing::fixture;

RoutingSolution route(const Topology& t, const CommSketch& sk, CollectiveKind kind, std::optional<Megabytes> size = {}) {
  const LogicalTopology lt = apply_sketch(t, sk);
  const CollectiveSpec spec = build_collective(kind, t.num_ranks(), sk.input_chunkup);
  return solve_routing(encode_routing(lt, spec, sk, size));
}

TEST(Routing, TwoRanks) {
  const Topology t = load_topology_file(fixture("demo2.json"));
  const CommSketch sk = identity_sketch();
  const LogicalTopology lt = apply_sketch(t, sk);
  const RoutingModel rm = encode_routing(lt, build_collective(CollectiveKind::kAllgather, 2, 1), sk);
  EXPECT_EQ(rm.model.num_binaries(), 2);
  const RoutingSolution r = solve_routing(rm);
  EXPECT_EQ(r.status, "optimal");
  EXPECT_DOUBLE_EQ(r.lower_bound_time, 2.0);
  ASSERT_EQ(r.paths.size(), 2u);
  EXPECT_EQ(r.paths[0], (std::vector<RoutedSend>{{0, 0, 1, 0.0, 2.0}}));
}

TEST(Routing, LineNeedsRelay) {
  const Topology t =
      testing::single_node("line3", 3, {{0, 1, 0.5, 0.5}, {1, 0, 0.5, 0.5}, {1, 2, 0.5, 0.5}, {2, 1, 0.5, 0.5}});
  const RoutingSolution r = route(t, identity_sketch(), CollectiveKind::kAllgather);
  // Chunk 0 crosses two unit links; link 1->2 also carries chunk 1.
  EXPECT_DOUBLE_EQ(r.lower_bound_time, 2.0);
  EXPECT_EQ(r.paths[0], (std::vector<RoutedSend>{{0, 0, 1, 0.0, 1.0}, {0, 1, 2, 1.0, 2.0}}));
}

TEST(Routing, FullyConnectedBoundIsOneLink) {
  const Topology t = load_topology_file(fixture("fc8.json"));
  const RoutingSolution r = route(t, identity_sketch(), CollectiveKind::kAllgather);
  EXPECT_NEAR(r.lower_bound_time, t.link(0, 1).latency(1.0), 1e-9);
  for (const auto& path : r.paths) {
    EXPECT_EQ(path.size(), 7u);
    for (const auto& s : path) EXPECT_EQ(s.src, path.front().src);
  }
}

bool is_cycle(const std::vector<std::pair<Rank, Rank>>& links, int n) {
  if (static_cast<int>(links.size()) != n) return false;
  std::map<Rank, Rank> next;
  for (auto [a, b] : links) {
    if (!next.emplace(a, b).second) return false;
  }
  Rank at = 0;
  std::set<Rank> seen;
  for (int k = 0; k < n; ++k) {
    if (!next.count(at)) return false;
    seen.insert(at);
    at = next[at];
  }
  return at == 0 && static_cast<int>(seen.size()) == n;
}

TEST(Routing, UcMinCollapsesSwitchToRing) {
  const Topology t = load_topology_file(fixture("switch3.json"));
  const RoutingSolution r = route(t, load_sketch_file(fixture("switch3-uc-min.json")), CollectiveKind::kAllgather);
  EXPECT_EQ(r.utilized.size(), 3u);
  EXPECT_TRUE(is_cycle(r.utilized, 3));
}

TEST(Routing, UcMaxUsesEveryLink) {
  const Topology t = load_topology_file(fixture("switch3.json"));
  const RoutingSolution r = route(t, load_sketch_file(fixture("switch3-uc-max.json")), CollectiveKind::kAllgather);
  EXPECT_EQ(r.utilized.size(), 6u);
}

TEST(Routing, InternodeRowsOnlyForCrossNodeChunks) {
  const Topology t = load_topology_file(fixture("ndv2x2.json"));
  const CommSketch sk = load_sketch_file(fixture("ndv2-sk-1.json"));
  const RoutingModel rm =
      encode_routing(apply_sketch(t, sk), build_collective(CollectiveKind::kAlltoall, 16, 1), sk);
  std::set<std::string> names;
  for (const auto& c : rm.model.constraints()) names.insert(c.name);
  // Chunk 1 goes 0 -> 1 inside node 0; chunk 8 goes 0 -> 8 across.
  EXPECT_FALSE(names.count("leave_c1"));
  EXPECT_TRUE(names.count("leave_c8"));
  EXPECT_TRUE(names.count("into_c8_n1"));
  EXPECT_FALSE(names.count("into_c8_n0"));
}

TEST(Routing, UnreachableChunkIsNamed) {
  const Topology t = testing::ring(4, 1, 1, false);
  CommSketch sk = identity_sketch();
  sk.intranode.excluded_links = {{0, 1}};
  const std::string msg = expect_error(ErrorCode::kInfeasible, [&] { route(t, sk, CollectiveKind::kAllgather); });
  EXPECT_NE(msg.find("chunk 0"), std::string::npos) << msg;
}

TEST(Routing, SymmetricRoutingIsClosedUnderRotation) {
  const Topology t = load_topology_file(fixture("dgx2x2.json"));
  const CommSketch sk = load_sketch_file(fixture("dgx2-sk-1.json"));
  const RoutingSolution r = route(t, sk, CollectiveKind::kAllgather);
  const CollectiveSpec spec = build_collective(CollectiveKind::kAllgather, 32, 2);
  std::set<ChunkSend> sends;
  for (const auto& path : r.paths) {
    for (const auto& s : path) sends.insert({s.chunk, s.src, s.dst});
  }
  EXPECT_EQ(sends.size(), 64u * 31u);
  for (const auto& sym : sk.symmetry_offsets) {
    for (const auto& s : sends) EXPECT_TRUE(sends.count(symmetric_image(sym, spec, s)));
  }
  // Every chunk leaves its node through its relay rank.
  for (const auto& s : sends) {
    if (t.node_of(s.src) != t.node_of(s.dst)) {
      EXPECT_EQ(s.src, relay_for_chunk(sk, spec.chunk_source(s.chunk)));
    }
  }
}

TEST(Routing, SlackWidensCorridor) {
  const Topology t = testing::ring(4, 1, 1, true);
  CommSketch sk = identity_sketch();
  const CollectiveSpec spec = build_collective(CollectiveKind::kAllgather, 4, 1);
  const LogicalTopology lt = apply_sketch(t, sk);
  const int tight = encode_routing(lt, spec, sk).model.num_binaries();
  sk.shortest_path_slack = 2;
  const int wide = encode_routing(lt, spec, sk).model.num_binaries();
  EXPECT_LT(tight, wide);
  // Slack 2 lets every chunk use every link except those into its source.
  EXPECT_EQ(wide, 4 * (8 - 2));
}

TEST(Routing, Deterministic) {
  const Topology t = load_topology_file(fixture("ring8.json"));
  const CommSketch sk = identity_sketch(2);
  const std::string a = serialize_routing(route(t, sk, CollectiveKind::kAllgather));
  const std::string b = serialize_routing(route(t, sk, CollectiveKind::kAllgather));
  EXPECT_EQ(a, b);
}

TEST(RoutingOracle, MatchesExhaustiveEnumeration) {
  std::mt19937 rng(20261015);
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + trial % 2;
    Topology t = testing::random_mesh(n, rng);
    if (n == 3 && trial % 4 == 3) {
      // Drop one direction of a pair so some chunks need a relay.
      std::vector<Link> links;
      for (const Link& l : t.links()) {
        if (!(l.src == 0 && l.dst == 2)) links.push_back(l);
      }
      t = testing::single_node("cut", n, links);
    }
    for (CollectiveKind kind : {CollectiveKind::kAllgather, CollectiveKind::kAlltoall}) {
      for (int p = 1; p <= 2; ++p) {
        CommSketch sk = identity_sketch(p);
        sk.contiguity = ContiguityScope::kNone;
        sk.shortest_path_slack = n;
        const CollectiveSpec spec = build_collective(kind, n, p);
        const RoutingSolution r = solve_routing(encode_routing(apply_sketch(t, sk), spec, sk, 1.0));
        const double oracle = testing::brute_force_routing(t, spec, 1.0);
        EXPECT_NEAR(r.lower_bound_time, oracle, 1e-6)
            << "trial " << trial << " " << to_string(kind) << " p=" << p;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 96);
}

}  // namespace
}  // namespace sketchsynth
