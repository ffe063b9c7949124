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

// Topology, collective and sketch plumbing.

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/sketch.hpp"
#include "sketchsynth/topology.hpp"
#include "test_support.hpp"

namespace sketchsynth {
namespace {

using testing::expect_error;
using testing::fixture;

TEST(Common, SizesParseInPowersOf1024) {
  EXPECT_DOUBLE_EQ(parse_size("1M"), 1.0);
  EXPECT_DOUBLE_EQ(parse_size("32KB"), 32.0 / 1024.0);
  EXPECT_DOUBLE_EQ(parse_size("2GB"), 2048.0);
  EXPECT_DOUBLE_EQ(parse_size("0.5"), 0.5);
  EXPECT_EQ(format_size(parse_size("32KB")), "32K");
  EXPECT_EQ(format_size(1.0), "1M");
  expect_error(ErrorCode::kParse, [] { parse_size("lots"); });
}

TEST(Topology, LinkLatencyIsAlphaPlusBetaTimesSize) {
  const Topology t = testing::single_node("ib", 2, {{0, 1, 1.7, 106.0}, {1, 0, 1.7, 106.0}});
  EXPECT_DOUBLE_EQ(link_latency(t, 0, 1, 1.0 / 32.0), 1.7 + 106.0 / 32.0);
  expect_error(ErrorCode::kValidation, [&] { link_latency(t, 0, 1, 0.0); });
  expect_error(ErrorCode::kValidation, [&] { link_latency(t, 0, 0, 1.0); });
}

TEST(Topology, RejectsBrokenInvariants) {
  expect_error(ErrorCode::kValidation, [] { testing::single_node("self", 2, {{0, 0, 1, 1}}); });
  expect_error(ErrorCode::kValidation, [] { testing::single_node("dup", 2, {{0, 1, 1, 1}, {0, 1, 2, 2}}); });
  expect_error(ErrorCode::kValidation, [] { testing::single_node("range", 2, {{0, 2, 1, 1}}); });
  expect_error(ErrorCode::kValidation, [] { testing::single_node("neg", 2, {{0, 1, -1, 1}}); });
  // Ranks split over nodes must be covered exactly once.
  expect_error(ErrorCode::kValidation, [] { Topology("nodes", 3, {{0, 1, 1, 1}}, {}, {{0, 1}, {1, 2}}); });
  // Switch peers need links.
  expect_error(ErrorCode::kValidation, [] {
    Topology("sw", 2, {{0, 1, 1, 1}}, {{SwitchSide::kRecv, 0, {1}, HyperedgePolicy::kFree}}, {{0, 1}});
  });
}

TEST(Topology, ParseErrorsAreReportedAsParse) {
  expect_error(ErrorCode::kParse, [] { load_topology("{not json"); });
  expect_error(ErrorCode::kParse, [] { load_topology(R"({"name": "x", "links": []})"); });
}

TEST(Topology, SerializationRoundTrips) {
  for (const char* name : {"demo2.json", "switch3.json", "ndv2x2.json", "dgx2x2.json"}) {
    const Topology t = load_topology_file(fixture(name));
    const std::string text = serialize_topology(t);
    const Topology back = load_topology(text);
    EXPECT_EQ(back, t) << name;
    EXPECT_EQ(serialize_topology(back), text) << name;
  }
}

TEST(Topology, HopDistancesOnDirectedRing) {
  const Topology t = testing::ring(5, 1, 1, false);
  const HopTable h = shortest_hop_distances(t);
  for (Rank a = 0; a < 5; ++a) {
    for (Rank b = 0; b < 5; ++b) EXPECT_EQ(h[a][b], (b - a + 5) % 5);
  }
  const Topology cut = testing::single_node("line", 3, {{0, 1, 1, 1}, {1, 2, 1, 1}});
  EXPECT_EQ(shortest_hop_distances(cut)[2][0], kUnreachable);
}

TEST(Topology, TwoNodeFixtureShape) {
  const Topology t = load_topology_file(fixture("ndv2x2.json"));
  EXPECT_EQ(t.num_ranks(), 16);
  EXPECT_EQ(t.nodes().size(), 2u);
  EXPECT_EQ(t.node_of(9), 1);
  EXPECT_EQ(t.local_index(9), 1);
  EXPECT_TRUE(t.is_internode(t.link(1, 8)));
  EXPECT_DOUBLE_EQ(t.link(1, 8).alpha, 1.7);
  EXPECT_DOUBLE_EQ(t.link(1, 8).beta, 106.0);
  EXPECT_DOUBLE_EQ(t.link(0, 1).beta, 46.0);
  EXPECT_FALSE(t.has_link(1, 6));
}

TEST(Collective, AllgatherPlacement) {
  const CollectiveSpec s = build_collective(CollectiveKind::kAllgather, 3, 2);
  EXPECT_EQ(s.num_chunks, 6);
  EXPECT_FALSE(s.reducing);
  for (ChunkId c = 0; c < 6; ++c) {
    EXPECT_EQ(s.precondition[c], std::vector<Rank>{c / 2});
    EXPECT_EQ(s.postcondition[c], (std::vector<Rank>{0, 1, 2}));
    EXPECT_EQ(s.chunk_slot(c), c % 2);
  }
  EXPECT_EQ(s.postcondition_size(), 18u);
  EXPECT_DOUBLE_EQ(chunk_size(s, 1.0), 0.5);
}

TEST(Collective, AlltoallPlacement) {
  const CollectiveSpec s = build_collective(CollectiveKind::kAlltoall, 3, 2);
  EXPECT_EQ(s.num_chunks, 18);
  // id = (src * ranks + dst) * partition + slot
  EXPECT_EQ(s.chunk_source(7), 1);
  EXPECT_EQ(s.chunk_destination(7), 0);
  EXPECT_TRUE(s.in_precondition(7, 1));
  EXPECT_TRUE(s.in_postcondition(7, 0));
  EXPECT_FALSE(s.in_postcondition(7, 1));
  EXPECT_DOUBLE_EQ(chunk_size(s, 6.0), 1.0);
}

TEST(Collective, ReducingCollectives) {
  const CollectiveSpec rs = build_collective(CollectiveKind::kReduceScatter, 4, 1);
  EXPECT_TRUE(rs.reducing);
  EXPECT_EQ(rs.precondition[2].size(), 4u);
  EXPECT_EQ(rs.postcondition[2], std::vector<Rank>{2});
  const CollectiveSpec ar = build_collective(CollectiveKind::kAllreduce, 4, 2);
  EXPECT_TRUE(ar.reducing);
  EXPECT_EQ(ar.postcondition[5].size(), 4u);
  EXPECT_DOUBLE_EQ(chunk_size(ar, 1.0), 1.0 / 8.0);
}

TEST(Collective, MapChunkFollowsRanks) {
  const CollectiveSpec s = build_collective(CollectiveKind::kAlltoall, 4, 2);
  auto shift = [](Rank r) { return (r + 1) % 4; };
  for (ChunkId c = 0; c < s.num_chunks; ++c) {
    const ChunkId m = s.map_chunk(c, shift);
    EXPECT_EQ(s.chunk_source(m), shift(s.chunk_source(c)));
    EXPECT_EQ(s.chunk_destination(m), shift(s.chunk_destination(c)));
    EXPECT_EQ(s.chunk_slot(m), s.chunk_slot(c));
  }
}

TEST(Collective, Degenerate) {
  expect_error(ErrorCode::kValidation, [] { build_collective(CollectiveKind::kAllgather, 1, 1); });
  expect_error(ErrorCode::kValidation, [] { build_collective(CollectiveKind::kAllgather, 2, 0); });
  expect_error(ErrorCode::kValidation, [] { parse_collective_kind("broadcast"); });
  expect_error(ErrorCode::kValidation,
               [] { chunk_size(build_collective(CollectiveKind::kAllgather, 2, 1), 0.0); });
}

TEST(Sketch, ParsesCommentedListing) {
  const CommSketch sk = load_sketch_file(fixture("dgx2-sk-1.json"));
  EXPECT_EQ(sk.intranode.strategy, "switch");
  ASSERT_EQ(sk.intranode.switches.size(), 1u);
  EXPECT_EQ(sk.intranode.switches[0].size(), 16u);
  EXPECT_EQ(sk.intranode.hyperedge_policies, std::vector<HyperedgePolicy>{HyperedgePolicy::kUcMin});
  EXPECT_EQ(sk.internode.strategy, "relay");
  EXPECT_EQ(sk.internode.conn.at(13), std::vector<Rank>{12});
  EXPECT_DOUBLE_EQ(sk.internode.beta_split.at(7), 1.0);
  EXPECT_EQ(sk.internode.chunk_to_relay, std::make_pair(2, 1));
  EXPECT_EQ(sk.symmetry_offsets, (std::vector<SymmetryOffset>{{2, 16}, {16, 32}}));
  EXPECT_EQ(sk.input_chunkup, 2);
  EXPECT_DOUBLE_EQ(sk.input_size, 1.0);
  EXPECT_EQ(parse_sketch(serialize_sketch(sk)), sk);
}

TEST(Sketch, RejectsBadSketches) {
  expect_error(ErrorCode::kParse, [] { parse_sketch(R"({"intranode_sketch": {"strategy": "mesh"}})"); });
  expect_error(ErrorCode::kValidation,
               [] { parse_sketch(R"({"hyperparameters": {"input_chunkup": 0, "input_size": "1M"}})"); });
  expect_error(ErrorCode::kValidation, [] {
    parse_sketch(R"({"internode_sketch": {"strategy": "relay", "internode_conn": {"1": [0]}, "beta_split": {"1": 0}}})");
  });
}

TEST(Sketch, RelayKeepsOnlyListedInternodeLinks) {
  const Topology t = load_topology_file(fixture("ndv2x2.json"));
  const LogicalTopology lt = apply_sketch(t, load_sketch_file(fixture("ndv2-sk-1.json")));
  std::set<std::pair<Rank, Rank>> inter;
  for (const Link& l : lt.base().links()) {
    if (lt.base().is_internode(l)) inter.insert({l.src, l.dst});
  }
  EXPECT_EQ(inter, (std::set<std::pair<Rank, Rank>>{{1, 8}, {9, 0}}));
  // Intra-node links survive untouched.
  EXPECT_TRUE(lt.base().has_link(0, 4));
  EXPECT_DOUBLE_EQ(lt.latency(0, 1, 1.0), 0.7 + 46.0);
}

TEST(Sketch, BetaSplitScalesInternodeBandwidth) {
  const Topology t = load_topology_file(fixture("ndv2x2.json"));
  CommSketch sk = load_sketch_file(fixture("ndv2-sk-1.json"));
  sk.internode.beta_split[1] = 2.0;
  const LogicalTopology lt = apply_sketch(t, sk);
  EXPECT_DOUBLE_EQ(lt.cost_link(1, 8).beta, 212.0);
  EXPECT_DOUBLE_EQ(lt.base().link(1, 8).beta, 106.0);
}

TEST(Sketch, SwitchStrategyBuildsBothSidesPerRank) {
  const Topology t = load_topology_file(fixture("switch3.json"));
  const LogicalTopology lt = apply_sketch(t, load_sketch_file(fixture("switch3-uc-max.json")));
  ASSERT_EQ(lt.base().switches().size(), 6u);
  int sends = 0;
  for (const auto& h : lt.base().switches()) {
    EXPECT_EQ(h.peers.size(), 2u);
    EXPECT_EQ(h.policy, HyperedgePolicy::kUcMax);
    sends += h.kind == SwitchSide::kSend;
  }
  EXPECT_EQ(sends, 3);
}

TEST(Sketch, ChunkToRelayRestrictsExits) {
  const Topology t = load_topology_file(fixture("dgx2x2.json"));
  const CommSketch sk = load_sketch_file(fixture("dgx2-sk-1.json"));
  const LogicalTopology lt = apply_sketch(t, sk);
  EXPECT_EQ(relay_for_chunk(sk, 4), 5);
  EXPECT_EQ(relay_for_chunk(sk, 5), 5);
  EXPECT_TRUE(lt.relay_allowed(4, 5, 20));
  EXPECT_FALSE(lt.relay_allowed(4, 3, 18));
  // Intra-node links are never restricted.
  EXPECT_TRUE(lt.relay_allowed(4, 0, 1));
  expect_error(ErrorCode::kValidation, [] { relay_for_chunk(identity_sketch(), 0); });
}

TEST(Sketch, SymmetryRotatesWithinGroups) {
  const SymmetryOffset sym{2, 16};
  EXPECT_EQ(rotate_rank(sym, 32, 0), 2);
  EXPECT_EQ(rotate_rank(sym, 32, 15), 1);
  EXPECT_EQ(rotate_rank(sym, 32, 17), 19);
  // Trailing partial group stays put.
  EXPECT_EQ(rotate_rank({2, 4}, 6, 5), 5);
  const CollectiveSpec spec = build_collective(CollectiveKind::kAllgather, 32, 2);
  const ChunkSend img = symmetric_image(sym, spec, {1, 0, 1});
  EXPECT_EQ(img, (ChunkSend{5, 2, 3}));
}

TEST(Sketch, IdentityKeepsTopology) {
  const Topology t = load_topology_file(fixture("ring4.json"));
  const LogicalTopology lt = apply_sketch(t, identity_sketch());
  EXPECT_EQ(lt.base(), t);
  const LogicalTopology half = lt.scaled(0.5);
  EXPECT_DOUBLE_EQ(half.latency(0, 1, 1.0), 0.5 * lt.latency(0, 1, 1.0));
}

}  // namespace
}  // namespace sketchsynth
