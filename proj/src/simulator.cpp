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

#include "sketchsynth/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include "json.hpp"
#include <tuple>

namespace sketchsynth {
namespace {

constexpr double kEps = 1e-9;

std::string send_name(const ScheduledSend& s) {
  return "chunk " + std::to_string(s.chunk) + " " + std::to_string(s.src) + "->" + std::to_string(s.dst);
}

struct Batch {
  Rank src = 0;
  Rank dst = 0;
  std::size_t link = 0;
  Micros start = 0.0;
  Micros end = 0.0;
  int group = 0;
  std::vector<std::size_t> members;
};

void check_overlaps(std::vector<const Batch*> batches, const std::string& what, std::vector<std::string>& out) {
  std::sort(batches.begin(), batches.end(), [](const Batch* a, const Batch* b) {
    return std::tie(a->start, a->end, a->group) < std::tie(b->start, b->end, b->group);
  });
  for (std::size_t i = 1; i < batches.size(); ++i) {
    const Batch& a = *batches[i - 1];
    const Batch& b = *batches[i];
    if (b.start < a.end - kEps) {
      out.push_back("bandwidth: " + what + " carries groups " + std::to_string(a.group) + " and " +
                    std::to_string(b.group) + " at overlapping times [" + format_double(a.start) + ", " +
                    format_double(a.end) + ") and [" + format_double(b.start) + ", " + format_double(b.end) + ")");
    }
  }
}

}  // namespace

SimReport simulate(const Schedule& schedule, const LogicalTopology& lt, const CollectiveSpec& spec) {
  const Topology& topo = lt.base();
  const int n = spec.num_ranks;
  SimReport rep;
  rep.input_size = schedule.input_size;
  if (schedule.num_ranks != n || topo.num_ranks() != n) {
    rep.violations.push_back("shape: schedule, topology and collective disagree on the rank count");
    return rep;
  }

  // Groups: one link, one send time, one latency for the whole batch.
  std::map<int, Batch> batches;
  for (std::size_t i = 0; i < schedule.sends.size(); ++i) {
    const ScheduledSend& s = schedule.sends[i];
    if (s.chunk < 0 || s.chunk >= spec.num_chunks || s.src < 0 || s.src >= n || s.dst < 0 || s.dst >= n) {
      rep.violations.push_back("shape: " + send_name(s) + " is out of range");
      continue;
    }
    const auto li = topo.find_link(s.src, s.dst);
    if (!li) {
      rep.violations.push_back("link: " + send_name(s) + " uses a link absent from the logical topology");
      continue;
    }
    auto [it, inserted] = batches.try_emplace(s.group);
    Batch& b = it->second;
    if (inserted) {
      b.src = s.src;
      b.dst = s.dst;
      b.link = *li;
      b.start = s.send_time;
      b.group = s.group;
    } else if (b.link != *li) {
      rep.violations.push_back("group: group " + std::to_string(s.group) + " spans two links");
      continue;
    } else if (std::abs(b.start - s.send_time) > kEps) {
      rep.violations.push_back("group: " + send_name(s) + " leaves at a different time than its group");
    }
    b.members.push_back(i);
  }
  for (auto& [g, b] : batches) {
    b.end = b.start + lt.latency(b.src, b.dst, schedule.chunk_size * static_cast<double>(b.members.size()));
    BusyInterval bi{b.src, b.dst, b.start, b.end, g, {}};
    for (std::size_t i : b.members) bi.chunks.push_back(schedule.sends[i].chunk);
    rep.timeline.push_back(std::move(bi));
    rep.total_time = std::max(rep.total_time, b.end);
  }
  std::sort(rep.timeline.begin(), rep.timeline.end(), [](const BusyInterval& a, const BusyInterval& b) {
    return std::tie(a.start, a.src, a.dst, a.group) < std::tie(b.start, b.src, b.dst, b.group);
  });

  // Exclusivity per link and per switch side.
  std::vector<std::vector<const Batch*>> per_link(topo.links().size());
  for (const auto& [g, b] : batches) per_link[b.link].push_back(&b);
  for (std::size_t li = 0; li < per_link.size(); ++li) {
    const Link& l = topo.links()[li];
    check_overlaps(per_link[li], "link " + std::to_string(l.src) + "->" + std::to_string(l.dst), rep.violations);
  }
  for (std::size_t h = 0; h < topo.switches().size(); ++h) {
    const auto& hyper = topo.switches()[h];
    std::vector<const Batch*> side;
    for (const auto& [g, b] : batches) {
      const auto sw = topo.switches_containing(b.src, b.dst);
      if (std::find(sw.begin(), sw.end(), h) != sw.end()) side.push_back(&b);
    }
    check_overlaps(side,
                   std::string("switch ") + std::string(to_string(hyper.kind)) + " side of rank " +
                       std::to_string(hyper.anchor),
                   rep.violations);
  }

  // Data replay: arrivals are applied before sends at the same instant.
  struct Event {
    Micros time;
    int kind;  // 0 arrival, 1 send
    std::size_t link;
    ChunkId chunk;
    std::size_t send;
  };
  std::vector<Event> events;
  std::vector<Micros> arrive(schedule.sends.size(), 0.0);
  for (const auto& [g, b] : batches) {
    for (std::size_t i : b.members) {
      arrive[i] = b.end;
      events.push_back({b.start, 1, b.link, schedule.sends[i].chunk, i});
      events.push_back({b.end - kEps, 0, b.link, schedule.sends[i].chunk, i});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.time, a.kind, a.link, a.chunk, a.send) < std::tie(b.time, b.kind, b.link, b.chunk, b.send);
  });

  std::map<std::pair<ChunkId, Rank>, Provenance> held;
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    for (Rank r : spec.precondition[static_cast<std::size_t>(c)]) {
      Provenance p(static_cast<std::size_t>(n), 0);
      // Copies carry their source's data; reducing inputs start as one's own.
      p[static_cast<std::size_t>(spec.reducing ? r : spec.chunk_source(c))] = 1;
      held[{c, r}] = p;
      rep.arrival[{c, r}] = 0.0;
    }
  }
  std::vector<Provenance> payload(schedule.sends.size());
  std::vector<bool> launched(schedule.sends.size(), false);
  for (const Event& e : events) {
    const ScheduledSend& s = schedule.sends[e.send];
    if (e.kind == 1) {
      auto it = held.find({s.chunk, s.src});
      if (it == held.end()) {
        rep.violations.push_back("availability: " + send_name(s) + " leaves at " + format_double(s.send_time) +
                                 " before the chunk reaches rank " + std::to_string(s.src));
        continue;
      }
      payload[e.send] = it->second;
      launched[e.send] = true;
      continue;
    }
    if (!launched[e.send]) continue;
    auto it = held.find({s.chunk, s.dst});
    if (s.reduce) {
      if (it == held.end()) {
        rep.violations.push_back("reduce: " + send_name(s) + " reduces into a rank without its own copy");
        continue;
      }
      for (int r = 0; r < n; ++r) it->second[static_cast<std::size_t>(r)] += payload[e.send][static_cast<std::size_t>(r)];
    } else {
      held[{s.chunk, s.dst}] = payload[e.send];
      rep.arrival.emplace(std::make_pair(s.chunk, s.dst), arrive[e.send]);
    }
  }
  rep.provenance = std::move(held);
  return rep;
}

PostconditionResult check_postcondition(const SimReport& report, const CollectiveSpec& spec) {
  PostconditionResult out;
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    for (Rank r : spec.postcondition[static_cast<std::size_t>(c)]) {
      auto it = report.provenance.find({c, r});
      if (it == report.provenance.end()) {
        out.failures.push_back("chunk " + std::to_string(c) + " never reaches rank " + std::to_string(r));
        continue;
      }
      const Provenance& p = it->second;
      for (Rank q = 0; q < spec.num_ranks; ++q) {
        const int want = spec.reducing ? 1 : (q == spec.chunk_source(c) ? 1 : 0);
        const int got = p[static_cast<std::size_t>(q)];
        if (got == want) continue;
        std::string what = got < want ? "misses the contribution of rank " : "counts the contribution of rank ";
        out.failures.push_back("chunk " + std::to_string(c) + " at rank " + std::to_string(r) + " " + what +
                               std::to_string(q) + (got > want ? " " + std::to_string(got) + " times" : ""));
      }
    }
  }
  out.pass = out.failures.empty();
  return out;
}

std::string serialize_report(const SimReport& report) {
  nlohmann::ordered_json doc;
  doc["total_time_us"] = report.total_time;
  doc["input_size_mb"] = report.input_size;
  doc["algorithm_bandwidth_mb_per_us"] = report.algorithm_bandwidth();
  doc["violations"] = report.violations;
  nlohmann::ordered_json tl = nlohmann::ordered_json::array();
  for (const auto& b : report.timeline) {
    tl.push_back({{"src", b.src}, {"dst", b.dst}, {"start_us", b.start}, {"end_us", b.end}, {"group", b.group},
                  {"chunks", b.chunks}});
  }
  doc["timeline"] = std::move(tl);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [key, t] : report.arrival) {
    arr.push_back({{"chunk", key.first}, {"rank", key.second}, {"time_us", t}});
  }
  doc["arrivals"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string_view to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::kRingAllgather:
      return "ring-allgather";
    case Baseline::kAllpairsAlltoall:
      return "allpairs-alltoall";
    case Baseline::kRingAllreduce:
      return "ring-allreduce";
  }
  return "ring-allgather";
}

Baseline parse_baseline(std::string_view text) {
  if (text == "ring-allgather") return Baseline::kRingAllgather;
  if (text == "allpairs-alltoall") return Baseline::kAllpairsAlltoall;
  if (text == "ring-allreduce") return Baseline::kRingAllreduce;
  fail(ErrorCode::kValidation, "unknown baseline '" + std::string(text) + "'", "baseline");
}

std::vector<Rank> find_ring(const Topology& topology) {
  const int n = topology.num_ranks();
  if (n < 2) return {};
  bool natural = true;
  for (Rank r = 0; r < n && natural; ++r) natural = topology.has_link(r, (r + 1) % n);
  std::vector<Rank> ring;
  if (natural) {
    for (Rank r = 0; r < n; ++r) ring.push_back(r);
    return ring;
  }
  // Depth-first search for a Hamiltonian cycle through rank 0, with a step
  // budget so large topologies fail fast instead of hanging.
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  ring.push_back(0);
  used[0] = true;
  long budget = 2'000'000;
  std::function<bool()> extend = [&]() -> bool {
    if (--budget < 0) return false;
    const Rank u = ring.back();
    if (static_cast<int>(ring.size()) == n) return topology.has_link(u, 0);
    for (std::size_t li : topology.out_links(u)) {
      const Rank v = topology.links()[li].dst;
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      ring.push_back(v);
      if (extend()) return true;
      ring.pop_back();
      used[static_cast<std::size_t>(v)] = false;
    }
    return false;
  };
  if (extend()) return ring;
  return {};
}

Schedule baseline_schedule(Baseline baseline, const LogicalTopology& lt, const CollectiveSpec& spec,
                           Megabytes input_size) {
  const Topology& topo = lt.base();
  const int n = spec.num_ranks;
  const int p = spec.partition_factor;
  Schedule s;
  s.name = std::string(to_string(baseline));
  s.topology = topo.name();
  s.kind = spec.kind;
  s.num_ranks = n;
  s.partition_factor = p;
  s.num_chunks = spec.num_chunks;
  s.input_size = input_size;
  s.chunk_size = chunk_size(spec, input_size);

  auto need = [&](CollectiveKind kind) {
    if (spec.kind != kind) {
      fail(ErrorCode::kValidation,
           std::string(to_string(baseline)) + " does not implement " + std::string(to_string(spec.kind)), "baseline");
    }
  };
  auto add = [&](ChunkId c, Rank src, Rank dst, bool reduce, int phase) {
    s.sends.push_back({c, src, dst, 0.0, 0.0, static_cast<int>(s.sends.size()), reduce, phase});
  };

  switch (baseline) {
    case Baseline::kRingAllgather:
    case Baseline::kRingAllreduce: {
      need(baseline == Baseline::kRingAllgather ? CollectiveKind::kAllgather : CollectiveKind::kAllreduce);
      const auto ring = find_ring(topo);
      if (ring.empty()) fail(ErrorCode::kValidation, "no ring embeds in " + topo.name(), "baseline");
      auto at = [&](int i) { return ring[static_cast<std::size_t>(((i % n) + n) % n)]; };
      if (baseline == Baseline::kRingAllreduce) {
        // Chunk of the rank at position j is reduced from j+1 around to j,
        // then circulated from j.
        for (int k = 0; k < n - 1; ++k) {
          for (int i = 0; i < n; ++i) {
            const Rank owner = at(i - k - 1);
            for (int slot = 0; slot < p; ++slot) add(owner * p + slot, at(i), at(i + 1), true, 0);
          }
        }
        for (int k = 0; k < n - 1; ++k) {
          for (int i = 0; i < n; ++i) {
            const Rank owner = at(i - k);
            for (int slot = 0; slot < p; ++slot) add(owner * p + slot, at(i), at(i + 1), false, 1);
          }
        }
      } else {
        for (int k = 0; k < n - 1; ++k) {
          for (int i = 0; i < n; ++i) {
            const Rank owner = at(i - k);
            for (int slot = 0; slot < p; ++slot) add(owner * p + slot, at(i), at(i + 1), false, 0);
          }
        }
      }
      break;
    }
    case Baseline::kAllpairsAlltoall: {
      need(CollectiveKind::kAlltoall);
      for (int k = 1; k < n; ++k) {
        for (Rank r = 0; r < n; ++r) {
          const Rank d = (r + k) % n;
          if (!topo.has_link(r, d)) {
            fail(ErrorCode::kValidation, "all-pairs needs link " + std::to_string(r) + "->" + std::to_string(d),
                 "baseline");
          }
          for (int slot = 0; slot < p; ++slot) add((r * n + d) * p + slot, r, d, false, 0);
        }
      }
      break;
    }
  }
  retime(s, lt);
  return s;
}

}  // namespace sketchsynth
