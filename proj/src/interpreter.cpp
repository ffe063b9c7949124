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
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "sketchsynth/lowering.hpp"

namespace sketchsynth {
namespace {

constexpr const char* kStage = "interpreter";

struct StepRef {
  int gpu = 0;
  int tb = 0;
  int step = 0;
  auto operator<=>(const StepRef&) const = default;
};

std::string describe(const StepRef& r) {
  return "gpu" + std::to_string(r.gpu) + "/tb" + std::to_string(r.tb) + "/step" + std::to_string(r.step);
}

// All instance copies of one transfer; they occupy the link together.
struct Batch {
  Rank src = 0;
  Rank dst = 0;
  int seq = 0;
  int count = 0;
  std::vector<StepRef> sends;
  std::vector<StepRef> recvs;
  std::set<StepRef> registered;
  Micros ready = 0.0;
  std::optional<Micros> start, end;
  std::vector<int> before;  // batches that must end first: link and switch-side predecessors
};

struct Cell {
  ChunkId chunk = -1;
  int sub = -1;
  Provenance prov;
  bool empty() const { return chunk < 0; }
};

}  // namespace

SimReport interpret_ef(const EFProgram& prog, const LogicalTopology& lt) {
  SimReport rep;
  for (const auto& p : check_structure(prog)) rep.violations.push_back("structure: " + p);
  if (!rep.violations.empty()) return rep;
  if (prog.num_ranks != lt.num_ranks()) fail(ErrorCode::kValidation, "program and topology disagree on rank count", kStage);
  const CollectiveSpec spec = build_collective(prog.kind, prog.num_ranks, prog.partition_factor);
  const int copies = prog.instances;
  const Topology& topo = lt.base();
  const Megabytes chunk = prog.subchunk_size * copies;
  rep.input_size = chunk * (spec.kind == CollectiveKind::kAllgather || spec.kind == CollectiveKind::kReduceScatter
                                ? spec.partition_factor
                                : spec.num_ranks * spec.partition_factor);

  auto step_at = [&](const StepRef& r) -> const EFStep& {
    return prog.gpus[static_cast<std::size_t>(r.gpu)].threadblocks[static_cast<std::size_t>(r.tb)].steps[static_cast<std::size_t>(r.step)];
  };
  auto tb_at = [&](const StepRef& r) -> const EFThreadblock& {
    return prog.gpus[static_cast<std::size_t>(r.gpu)].threadblocks[static_cast<std::size_t>(r.tb)];
  };

  // Batches.
  std::vector<Batch> batches;
  std::map<std::tuple<Rank, Rank, int>, int> batch_of;
  auto batch_for = [&](Rank src, Rank dst, int seq) {
    auto [it, inserted] = batch_of.try_emplace({src, dst, seq}, static_cast<int>(batches.size()));
    if (inserted) {
      Batch b;
      b.src = src;
      b.dst = dst;
      b.seq = seq;
      batches.push_back(std::move(b));
    }
    return it->second;
  };
  std::map<StepRef, int> step_batch;
  for (std::size_t g = 0; g < prog.gpus.size(); ++g) {
    const EFGpu& gpu = prog.gpus[g];
    for (std::size_t t = 0; t < gpu.threadblocks.size(); ++t) {
      const EFThreadblock& tb = gpu.threadblocks[t];
      for (std::size_t s = 0; s < tb.steps.size(); ++s) {
        const EFStep& st = tb.steps[s];
        const StepRef ref{static_cast<int>(g), static_cast<int>(t), static_cast<int>(s)};
        if (st.op == EFOp::kCopy) continue;
        const bool send = st.op == EFOp::kSend;
        const Rank src = send ? static_cast<Rank>(g) : tb.recv_peer;
        const Rank dst = send ? tb.send_peer : static_cast<Rank>(g);
        if (!topo.find_link(src, dst)) {
          rep.violations.push_back(describe(ref) + " uses link " + std::to_string(src) + "->" + std::to_string(dst) +
                                   " which is absent");
          continue;
        }
        const int b = batch_for(src, dst, st.seq);
        step_batch[ref] = b;
        (send ? batches[static_cast<std::size_t>(b)].sends : batches[static_cast<std::size_t>(b)].recvs).push_back(ref);
      }
    }
  }
  if (!rep.violations.empty()) return rep;
  for (Batch& b : batches) {
    b.count = step_at(b.sends.front()).count();
    for (const StepRef& r : b.sends) {
      if (step_at(r).count() != b.count) rep.violations.push_back(describe(r) + " disagrees on operand count with its other instances");
    }
  }
  if (!rep.violations.empty()) return rep;

  // Link and switch-side order by seq.
  {
    std::map<std::pair<Rank, Rank>, std::vector<int>> per_link;
    std::map<std::size_t, std::vector<int>> per_side;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      per_link[{batches[i].src, batches[i].dst}].push_back(static_cast<int>(i));
      for (std::size_t h : topo.switches_containing(batches[i].src, batches[i].dst)) per_side[h].push_back(static_cast<int>(i));
    }
    auto chain = [&](std::vector<int>& list) {
      std::sort(list.begin(), list.end(), [&](int a, int b) {
        return batches[static_cast<std::size_t>(a)].seq < batches[static_cast<std::size_t>(b)].seq;
      });
      for (std::size_t k = 1; k < list.size(); ++k) batches[static_cast<std::size_t>(list[k])].before.push_back(list[k - 1]);
    };
    for (auto& [k, list] : per_link) chain(list);
    for (auto& [k, list] : per_side) chain(list);
  }

  // Timing.
  std::map<StepRef, Micros> done;
  std::vector<std::vector<std::size_t>> pointer(prog.gpus.size());
  std::vector<std::vector<Micros>> clock(prog.gpus.size());
  for (std::size_t g = 0; g < prog.gpus.size(); ++g) {
    pointer[g].assign(prog.gpus[g].threadblocks.size(), 0);
    clock[g].assign(prog.gpus[g].threadblocks.size(), 0.0);
  }
  auto try_start = [&](Batch& b) {
    if (b.start || static_cast<int>(b.registered.size()) != copies) return false;
    Micros at = b.ready;
    for (int p : b.before) {
      const Batch& q = batches[static_cast<std::size_t>(p)];
      if (!q.end) return false;
      at = std::max(at, *q.end);
    }
    b.start = at;
    b.end = at + lt.latency(b.src, b.dst, prog.subchunk_size * b.count * copies);
    return true;
  };
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t g = 0; g < prog.gpus.size(); ++g) {
      const EFGpu& gpu = prog.gpus[g];
      for (std::size_t t = 0; t < gpu.threadblocks.size(); ++t) {
        const EFThreadblock& tb = gpu.threadblocks[t];
        while (pointer[g][t] < tb.steps.size()) {
          const StepRef ref{static_cast<int>(g), static_cast<int>(t), static_cast<int>(pointer[g][t])};
          const EFStep& st = step_at(ref);
          Micros ready = clock[g][t];
          bool blocked = false;
          for (const EFDep& d : st.deps) {
            auto it = done.find({static_cast<int>(g), d.tb, d.step});
            if (it == done.end()) {
              blocked = true;
              break;
            }
            ready = std::max(ready, it->second);
          }
          if (blocked) break;
          Micros finish = ready;
          if (st.op == EFOp::kSend) {
            Batch& b = batches[static_cast<std::size_t>(step_batch.at(ref))];
            if (b.registered.insert(ref).second) b.ready = std::max(b.ready, ready);
            if (try_start(b)) progress = true;
            if (!b.start) break;
            finish = *b.start;
          } else if (st.op != EFOp::kCopy) {
            const Batch& b = batches[static_cast<std::size_t>(step_batch.at(ref))];
            if (!b.end) break;
            finish = std::max(ready, *b.end);
          }
          done[ref] = finish;
          clock[g][t] = finish;
          ++pointer[g][t];
          progress = true;
        }
      }
    }
    for (Batch& b : batches) {
      if (try_start(b)) progress = true;
    }
  }

  // Deadlock: follow wait-for edges between blocked steps to name a cycle.
  std::vector<StepRef> blocked;
  for (std::size_t g = 0; g < prog.gpus.size(); ++g) {
    for (std::size_t t = 0; t < prog.gpus[g].threadblocks.size(); ++t) {
      if (pointer[g][t] < prog.gpus[g].threadblocks[t].steps.size()) {
        blocked.push_back({static_cast<int>(g), static_cast<int>(t), static_cast<int>(pointer[g][t])});
      }
    }
  }
  if (!blocked.empty()) {
    auto current = [&](int g, int t) -> std::optional<StepRef> {
      const auto p = pointer[static_cast<std::size_t>(g)][static_cast<std::size_t>(t)];
      if (p >= prog.gpus[static_cast<std::size_t>(g)].threadblocks[static_cast<std::size_t>(t)].steps.size()) return std::nullopt;
      return StepRef{g, t, static_cast<int>(p)};
    };
    // First blocked step that `ref` waits on, with a reason.
    std::function<std::optional<StepRef>(const Batch&, int)> batch_blocker = [&](const Batch& b, int depth) -> std::optional<StepRef> {
      for (const StepRef& s : b.sends) {
        if (!b.registered.count(s)) return current(s.gpu, s.tb);
      }
      if (depth > static_cast<int>(batches.size())) return std::nullopt;
      for (int p : b.before) {
        const Batch& q = batches[static_cast<std::size_t>(p)];
        if (!q.end) return batch_blocker(q, depth + 1);
      }
      return std::nullopt;
    };
    auto waits_on = [&](const StepRef& ref) -> std::optional<StepRef> {
      const EFStep& st = step_at(ref);
      for (const EFDep& d : st.deps) {
        if (!done.count({ref.gpu, d.tb, d.step})) return current(ref.gpu, d.tb);
      }
      if (st.op == EFOp::kCopy) return std::nullopt;
      return batch_blocker(batches[static_cast<std::size_t>(step_batch.at(ref))], 0);
    };
    auto label = [&](const StepRef& r) {
      const EFStep& st = step_at(r);
      return describe(r) + " (" + std::string(to_string(st.op)) + " seq " + std::to_string(st.seq) + ")";
    };
    for (const StepRef& b : blocked) {
      const auto w = waits_on(b);
      rep.violations.push_back("deadlock: " + label(b) + " waits on " + (w ? label(*w) : std::string("nothing runnable")));
    }
    std::vector<StepRef> path{blocked.front()};
    std::set<StepRef> seen{blocked.front()};
    while (true) {
      const auto w = waits_on(path.back());
      if (!w) break;
      if (seen.count(*w)) {
        auto from = std::find(path.begin(), path.end(), *w);
        std::string cycle = "deadlock cycle:";
        for (auto it = from; it != path.end(); ++it) cycle += " " + describe(*it) + " ->";
        cycle += " " + describe(*w);
        rep.violations.push_back(cycle);
        break;
      }
      seen.insert(*w);
      path.push_back(*w);
    }
    return rep;
  }

  // Data replay in time order: receives land before copies and sends read.
  struct Event {
    Micros time;
    int kind;
    StepRef ref;
  };
  std::vector<Event> events;
  for (const auto& [ref, t] : done) {
    const EFOp op = step_at(ref).op;
    if (op == EFOp::kSend) {
      events.push_back({*batches[static_cast<std::size_t>(step_batch.at(ref))].start, 2, ref});
    } else {
      events.push_back({t, op == EFOp::kCopy ? 1 : 0, ref});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return std::tie(a.time, a.kind, a.ref) < std::tie(b.time, b.kind, b.ref); });

  const int n = spec.num_ranks;
  std::vector<std::array<std::vector<Cell>, 3>> mem(static_cast<std::size_t>(n));
  std::vector<std::array<std::vector<Micros>, 3>> written(static_cast<std::size_t>(n));
  for (Rank r = 0; r < n; ++r) {
    const EFGpu& gpu = prog.gpus[static_cast<std::size_t>(r)];
    const int sizes[3] = {gpu.input_chunks, gpu.output_chunks, gpu.scratch_chunks};
    for (int k = 0; k < 3; ++k) {
      mem[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(sizes[k]), {});
      written[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(sizes[k]), 0.0);
    }
  }
  auto cell = [&](Rank r, const BufferSlot& b) -> Cell& {
    return mem[static_cast<std::size_t>(r)][static_cast<std::size_t>(b.buffer)][static_cast<std::size_t>(b.index)];
  };
  auto stamp = [&](Rank r, const BufferSlot& b) -> Micros& {
    return written[static_cast<std::size_t>(r)][static_cast<std::size_t>(b.buffer)][static_cast<std::size_t>(b.index)];
  };
  const int in_chunks = input_chunks(spec);
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    for (Rank r : spec.precondition[static_cast<std::size_t>(c)]) {
      const BufferSlot slot = input_slot(spec, c, r);
      if (slot.index >= in_chunks) continue;
      for (int i = 0; i < copies; ++i) {
        Cell& x = cell(r, {slot.buffer, slot.index * copies + i});
        x.chunk = c;
        x.sub = i;
        x.prov.assign(static_cast<std::size_t>(n), 0);
        x.prov[static_cast<std::size_t>(spec.reducing ? r : spec.chunk_source(c))] = 1;
      }
    }
  }
  std::map<std::pair<int, int>, std::vector<Cell>> in_flight;  // (batch, first dst index) -> payload
  for (const Event& e : events) {
    const EFStep& st = step_at(e.ref);
    const EFThreadblock& tb = tb_at(e.ref);
    const Rank here = e.ref.gpu;
    switch (st.op) {
      case EFOp::kSend: {
        std::vector<Cell> payload;
        for (const BufferSlot& b : st.src) {
          if (cell(here, b).empty()) rep.violations.push_back(describe(e.ref) + " sends an empty slot");
          payload.push_back(cell(here, b));
        }
        in_flight[{step_batch.at(e.ref), st.dst.front().index}] = std::move(payload);
        break;
      }
      case EFOp::kRecv:
      case EFOp::kRecvReduce: {
        auto it = in_flight.find({step_batch.at(e.ref), st.dst.front().index});
        if (it == in_flight.end()) {
          rep.violations.push_back(describe(e.ref) + " receives from gpu" + std::to_string(tb.recv_peer) +
                                   " but no matching send names its slots");
          break;
        }
        for (std::size_t k = 0; k < st.dst.size(); ++k) {
          Cell& to = cell(here, st.dst[k]);
          const Cell& from = it->second[k];
          if (st.op == EFOp::kRecv) {
            to = from;
          } else if (to.empty() || from.empty() || to.chunk != from.chunk || to.sub != from.sub) {
            rep.violations.push_back(describe(e.ref) + " reduces mismatched data");
          } else {
            for (std::size_t q = 0; q < to.prov.size(); ++q) to.prov[q] += from.prov[q];
          }
          stamp(here, st.dst[k]) = e.time;
        }
        break;
      }
      case EFOp::kCopy:
        for (std::size_t k = 0; k < st.dst.size(); ++k) {
          if (cell(here, st.src[k]).empty()) rep.violations.push_back(describe(e.ref) + " copies an empty slot");
          cell(here, st.dst[k]) = cell(here, st.src[k]);
          stamp(here, st.dst[k]) = e.time;
        }
        break;
    }
  }

  for (const Batch& b : batches) {
    rep.timeline.push_back({b.src, b.dst, *b.start, *b.end, b.seq, {}});
    rep.total_time = std::max(rep.total_time, *b.end);
  }
  for (const auto& [ref, t] : done) rep.total_time = std::max(rep.total_time, t);
  std::sort(rep.timeline.begin(), rep.timeline.end(), [](const BusyInterval& a, const BusyInterval& b) {
    return std::tie(a.start, a.src, a.dst) < std::tie(b.start, b.src, b.dst);
  });

  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    for (Rank r : spec.postcondition[static_cast<std::size_t>(c)]) {
      const BufferSlot slot = output_slot(spec, c, r);
      std::optional<Provenance> agreed;
      Micros when = 0.0;
      bool whole = true;
      for (int i = 0; i < copies && whole; ++i) {
        const BufferSlot sub{slot.buffer, slot.index * copies + i};
        const Cell& x = cell(r, sub);
        if (x.chunk != c || x.sub != i || (agreed && *agreed != x.prov)) {
          whole = false;
          break;
        }
        agreed = x.prov;
        when = std::max(when, stamp(r, sub));
      }
      if (whole && agreed) {
        rep.provenance[{c, r}] = *agreed;
        rep.arrival[{c, r}] = when;
      }
    }
  }
  return rep;
}

}  // namespace sketchsynth
