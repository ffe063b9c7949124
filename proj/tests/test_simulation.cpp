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

// Schedules, the replay simulator, baselines and combining collectives.

#include <algorithm>

#include <gtest/gtest.h>

#include "json.hpp"
#include "sketchsynth/combining.hpp"
#include "sketchsynth/pipeline.hpp"
#include "sketchsynth/simulator.hpp"
#include "test_support.hpp"

namespace sketchsynth {
namespace {

using testing::expect_error;
using testing::fixture;

SynthesisResult synth(const std::string& topo, CollectiveKind kind, int chunks = 1,
                      const std::string& sketch = "") {
  const Topology t = load_topology_file(fixture(topo));
  const CommSketch sk = sketch.empty() ? identity_sketch() : load_sketch_file(fixture(sketch));
  SynthesisOptions o;
  o.kind = kind;
  o.chunks = chunks;
  return synthesize(t, sk, o);
}

bool mentions(const std::vector<std::string>& msgs, const std::string& word) {
  return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) { return m.find(word) != std::string::npos; });
}

TEST(Schedule, JsonRoundTrip) {
  const SynthesisResult r = synth("switch3.json", CollectiveKind::kAllreduce, 2);
  const std::string text = serialize_schedule(r.schedule);
  const Schedule back = parse_schedule(text);
  EXPECT_EQ(back, r.schedule);
  EXPECT_EQ(serialize_schedule(back), text);
  expect_error(ErrorCode::kParse, [] { parse_schedule("{\"format\": \"something-else\"}"); });
}

TEST(Schedule, DataDependenciesFollowPhases) {
  const std::vector<Transfer> ts{{0, 0, 1, true, 0}, {0, 2, 1, true, 0}, {0, 1, 2, false, 1}, {0, 1, 0, false, 1}};
  const auto deps = data_dependencies(ts);
  EXPECT_TRUE(deps[0].empty());
  EXPECT_EQ(deps[2], (std::vector<int>{0, 1}));
  EXPECT_EQ(deps[3], (std::vector<int>{0, 1}));
}

TEST(Schedule, GroupLatencyPaysAlphaOnce) {
  const LogicalTopology lt = identity_logical(testing::single_node("x", 2, {{0, 1, 1.7, 106.0}}));
  EXPECT_DOUBLE_EQ(group_latency(lt, 0, 1, 0.5, 3), 1.7 + 106.0 * 1.5);
}

TEST(Simulator, ReplayMatchesSynthesis) {
  for (CollectiveKind kind : {CollectiveKind::kAllgather, CollectiveKind::kAlltoall, CollectiveKind::kReduceScatter,
                              CollectiveKind::kAllreduce}) {
    const SynthesisResult r = synth("ring4.json", kind, 2);
    const SimReport rep = simulate(r.schedule, r.logical, r.spec);
    EXPECT_TRUE(rep.ok()) << rep.violations.front();
    EXPECT_NEAR(rep.total_time, r.schedule.total_time, 1e-6) << to_string(kind);
    EXPECT_TRUE(check_postcondition(rep, r.spec).pass) << to_string(kind);
    // Under a reducing spec every rank holds its own copy from the start.
    if (r.spec.reducing) continue;
    for (const auto& s : r.schedule.sends) {
      EXPECT_NEAR(rep.arrival.at({s.chunk, s.dst}), s.arrive_time, 1e-6);
    }
  }
}

TEST(Simulator, IgnoresRecordedArrivals) {
  SynthesisResult r = synth("ring4.json", CollectiveKind::kAllgather);
  const double before = simulate(r.schedule, r.logical, r.spec).total_time;
  for (auto& s : r.schedule.sends) s.arrive_time = 0.0;
  r.schedule.total_time = 0.0;
  EXPECT_DOUBLE_EQ(simulate(r.schedule, r.logical, r.spec).total_time, before);
}

TEST(Simulator, DetectsEarlySend) {
  SynthesisResult r = synth("ring4.json", CollectiveKind::kAllgather);
  // Some send relays a chunk; launching it at 0 precedes its arrival.
  auto it = std::find_if(r.schedule.sends.begin(), r.schedule.sends.end(),
                         [&](const ScheduledSend& s) { return s.src != r.spec.chunk_source(s.chunk); });
  ASSERT_NE(it, r.schedule.sends.end());
  it->send_time = 0.0;
  const SimReport rep = simulate(r.schedule, r.logical, r.spec);
  EXPECT_TRUE(mentions(rep.violations, "availability")) << ::testing::PrintToString(rep.violations);
}

TEST(Simulator, DetectsLinkOverlap) {
  SynthesisResult r = synth("demo2.json", CollectiveKind::kAllgather, 2);
  // Two chunks on 0->1 in separate groups at the same instant.
  std::vector<ScheduledSend> on;
  for (const auto& s : r.schedule.sends) {
    if (s.src == 0) on.push_back(s);
  }
  ASSERT_EQ(on.size(), 2u);
  Schedule bad = r.schedule;
  bad.sends.clear();
  int g = 0;
  for (auto s : on) {
    s.group = g++;
    s.send_time = 0.0;
    bad.sends.push_back(s);
  }
  const SimReport rep = simulate(bad, r.logical, r.spec);
  EXPECT_TRUE(mentions(rep.violations, "link 0->1")) << ::testing::PrintToString(rep.violations);
  EXPECT_FALSE(check_postcondition(rep, r.spec).pass);
}

TEST(Simulator, DetectsSwitchSideOverlap) {
  const SynthesisResult r = synth("switch3.json", CollectiveKind::kAllgather, 1, "switch3-uc-max.json");
  Schedule bad = r.schedule;
  // Rank 0 sends to both peers at once through its send side.
  for (auto& s : bad.sends) {
    if (s.src == 0 && s.chunk == 0) s.send_time = 0.0;
  }
  const SimReport rep = simulate(bad, r.logical, r.spec);
  EXPECT_TRUE(mentions(rep.violations, "switch send side of rank 0")) << ::testing::PrintToString(rep.violations);
}

TEST(Simulator, DetectsBrokenGroupsAndLinks) {
  SynthesisResult r = synth("ring4.json", CollectiveKind::kAllgather, 2);
  Schedule split = r.schedule;
  split.sends[1].group = split.sends[0].group;
  if (split.sends[1].src == split.sends[0].src && split.sends[1].dst == split.sends[0].dst) {
    split.sends[1].send_time += 1.0;
    EXPECT_TRUE(mentions(simulate(split, r.logical, r.spec).violations, "group"));
  } else {
    EXPECT_TRUE(mentions(simulate(split, r.logical, r.spec).violations, "spans two links"));
  }
  Schedule ghost = r.schedule;
  ghost.sends[0].src = 0;
  ghost.sends[0].dst = 2;
  EXPECT_TRUE(mentions(simulate(ghost, r.logical, r.spec).violations, "absent"));
}

TEST(Simulator, MissingSendFailsPostcondition) {
  SynthesisResult r = synth("ring4.json", CollectiveKind::kAllgather);
  const ScheduledSend last = r.schedule.sends.back();
  r.schedule.sends.pop_back();
  const PostconditionResult pc = check_postcondition(simulate(r.schedule, r.logical, r.spec), r.spec);
  EXPECT_FALSE(pc.pass);
  EXPECT_TRUE(mentions(pc.failures, "chunk " + std::to_string(last.chunk) + " never reaches rank " +
                                        std::to_string(last.dst)));
}

TEST(Simulator, ReportSerializes) {
  const SynthesisResult r = synth("demo2.json", CollectiveKind::kAllgather);
  const auto doc = nlohmann::json::parse(serialize_report(simulate(r.schedule, r.logical, r.spec)));
  EXPECT_DOUBLE_EQ(doc.at("total_time_us").get<double>(), 2.0);
}

// (n-1) steps of one link each, for several sizes.
TEST(Baseline, RingAllgatherIdentity) {
  for (int n : {4, 8}) {
    const Topology t = testing::ring(n, 0.7, 46.0, false);
    const LogicalTopology lt = identity_logical(t);
    const CollectiveSpec spec = build_collective(CollectiveKind::kAllgather, n, 1);
    for (Megabytes size : {parse_size("1KB"), 1.0, 64.0}) {
      const Schedule s = baseline_schedule(Baseline::kRingAllgather, lt, spec, size);
      const SimReport rep = simulate(s, lt, spec);
      ASSERT_TRUE(rep.ok());
      EXPECT_TRUE(check_postcondition(rep, spec).pass);
      const Micros expect = (n - 1) * (0.7 + 46.0 * size);
      EXPECT_NEAR(rep.total_time, expect, 1e-9 * expect) << n << " " << size;
    }
  }
}

TEST(Baseline, RingAllreduceReducesEverything) {
  const Topology t = testing::ring(4, 1.0, 2.0, false);
  const LogicalTopology lt = identity_logical(t);
  const CollectiveSpec spec = build_collective(CollectiveKind::kAllreduce, 4, 1);
  const Schedule s = baseline_schedule(Baseline::kRingAllreduce, lt, spec, 4.0);
  const SimReport rep = simulate(s, lt, spec);
  ASSERT_TRUE(rep.ok()) << rep.violations.front();
  EXPECT_TRUE(check_postcondition(rep, spec).pass);
  for (const auto& [key, prov] : rep.provenance) EXPECT_EQ(prov, Provenance(4, 1));
  EXPECT_NEAR(rep.total_time, 2 * 3 * (1.0 + 2.0), 1e-9);
}

TEST(Baseline, AllpairsAlltoall) {
  const Topology t = load_topology_file(fixture("fc8.json"));
  const LogicalTopology lt = identity_logical(t);
  const CollectiveSpec spec = build_collective(CollectiveKind::kAlltoall, 8, 1);
  const Schedule s = baseline_schedule(Baseline::kAllpairsAlltoall, lt, spec, 8.0);
  const SimReport rep = simulate(s, lt, spec);
  ASSERT_TRUE(rep.ok());
  EXPECT_TRUE(check_postcondition(rep, spec).pass);
  // Every pair has its own link, so all sends overlap.
  EXPECT_NEAR(rep.total_time, t.link(0, 1).latency(1.0), 1e-9);
}

TEST(Baseline, RingSearch) {
  EXPECT_EQ(find_ring(testing::ring(4, 1, 1, false)), (std::vector<Rank>{0, 1, 2, 3}));
  const Topology star = testing::single_node("star", 3, {{0, 1, 1, 1}, {1, 0, 1, 1}, {0, 2, 1, 1}, {2, 0, 1, 1}});
  EXPECT_TRUE(find_ring(star).empty());
  expect_error(ErrorCode::kValidation, [&] {
    baseline_schedule(Baseline::kRingAllgather, identity_logical(star), build_collective(CollectiveKind::kAllgather, 3, 1),
                      1.0);
  });
  // Ring through a non-natural order.
  const Topology twisted = testing::single_node("twisted", 4, {{0, 2, 1, 1}, {2, 1, 1, 1}, {1, 3, 1, 1}, {3, 0, 1, 1}});
  const auto ring = find_ring(twisted);
  ASSERT_EQ(ring.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(twisted.has_link(ring[i], ring[(i + 1) % 4]));
  expect_error(ErrorCode::kValidation, [] { parse_baseline("tree"); });
}

TEST(Combining, TwoRankReduceScatter) {
  const SynthesisResult r = synth("demo2.json", CollectiveKind::kReduceScatter);
  ASSERT_EQ(r.schedule.sends.size(), 2u);
  for (const auto& s : r.schedule.sends) EXPECT_TRUE(s.reduce);
  const SimReport rep = simulate(r.schedule, r.logical, r.spec);
  ASSERT_TRUE(rep.ok());
  EXPECT_TRUE(check_postcondition(rep, r.spec).pass);
  EXPECT_EQ(rep.provenance.at({0, 0}), (Provenance{1, 1}));
  EXPECT_EQ(rep.provenance.at({1, 1}), (Provenance{1, 1}));
}

TEST(Combining, ThreeRankProvenance) {
  for (CollectiveKind kind : {CollectiveKind::kReduceScatter, CollectiveKind::kAllreduce}) {
    for (const char* sketch : {"", "switch3-uc-min.json"}) {
      const SynthesisResult r = synth("switch3.json", kind, 2, sketch);
      const SimReport rep = simulate(r.schedule, r.logical, r.spec);
      ASSERT_TRUE(rep.ok()) << rep.violations.front();
      ASSERT_TRUE(check_postcondition(rep, r.spec).pass);
      for (ChunkId c = 0; c < r.spec.num_chunks; ++c) {
        for (Rank d : r.spec.postcondition[c]) EXPECT_EQ(rep.provenance.at({c, d}), Provenance(3, 1));
      }
    }
  }
}

TEST(Combining, DoubleCountingIsCaught) {
  SynthesisResult r = synth("switch3.json", CollectiveKind::kReduceScatter);
  // Replaying a reducing send folds the same partial in twice.
  ScheduledSend dup = r.schedule.sends.back();
  dup.group = 1000;
  dup.send_time = r.schedule.total_time + 10.0;
  r.schedule.sends.push_back(dup);
  normalize_groups(r.schedule);
  const PostconditionResult pc = check_postcondition(simulate(r.schedule, r.logical, r.spec), r.spec);
  EXPECT_FALSE(pc.pass);
}

TEST(Combining, AllreduceComposesWithoutBarrier) {
  const Topology t = load_topology_file(fixture("ring4.json"));
  const LogicalTopology lt = identity_logical(t);
  SynthesisOptions o;
  o.chunks = 1;
  o.kind = CollectiveKind::kAllgather;
  // Allreduce chunks are input / ranks, so compare against pieces of that size.
  o.size = 0.25;
  const Schedule ag = synthesize(t, identity_sketch(), o).schedule;
  const Schedule rs = invert_allgather(ag, lt);
  const Schedule ar = compose_allreduce(rs, ag, lt);
  EXPECT_LE(ar.total_time, rs.total_time + ag.total_time + 1e-9);
  EXPECT_GE(ar.total_time, std::max(rs.total_time, ag.total_time) - 1e-9);
  const CollectiveSpec spec = build_collective(CollectiveKind::kAllreduce, 4, 1);
  const SimReport rep = simulate(ar, lt, spec);
  ASSERT_TRUE(rep.ok());
  EXPECT_TRUE(check_postcondition(rep, spec).pass);
}

TEST(Combining, RejectsBadInputs) {
  const SynthesisResult rs = synth("ring4.json", CollectiveKind::kReduceScatter);
  const SynthesisResult ag = synth("ring4.json", CollectiveKind::kAllgather, 2);
  expect_error(ErrorCode::kValidation, [&] { invert_allgather(rs.schedule, rs.logical); });
  expect_error(ErrorCode::kValidation, [&] { compose_allreduce(rs.schedule, ag.schedule, ag.logical); });
  // A one-way ring has no reverse links to reduce over.
  const Topology oneway = testing::ring(4, 1, 1, false);
  SynthesisOptions o;
  o.kind = CollectiveKind::kReduceScatter;
  expect_error(ErrorCode::kValidation, [&] { synthesize(oneway, identity_sketch(), o); });
}

}  // namespace
}  // namespace sketchsynth
