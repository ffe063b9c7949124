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

#include "sketchsynth/lowering.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace sketchsynth {
namespace {

constexpr const char* kStage = "lowering";

// A step before instances are expanded, in chunk units.
struct Proto {
  Rank rank = 0;
  EFOp op = EFOp::kSend;
  Rank peer = -1;
  std::vector<BufferSlot> src, dst;
  int seq = -1;
  double key = 0.0;  // schedule time used to order steps inside a threadblock
  int order = 0;     // tie-break: copies, receives, sends, final copies
  std::vector<int> deps;
};

}  // namespace

std::string_view to_string(EFOp op) {
  switch (op) {
    case EFOp::kSend:
      return "s";
    case EFOp::kRecv:
      return "r";
    case EFOp::kRecvReduce:
      return "rrc";
    case EFOp::kCopy:
      return "cpy";
  }
  return "?";
}

BufferSlot input_slot(const CollectiveSpec& spec, ChunkId chunk, Rank /*rank*/) {
  const int p = spec.partition_factor;
  switch (spec.kind) {
    case CollectiveKind::kAllgather:
      return {BufferKind::kInput, spec.chunk_slot(chunk)};
    case CollectiveKind::kAlltoall:
      return {BufferKind::kInput, spec.chunk_destination(chunk) * p + spec.chunk_slot(chunk)};
    case CollectiveKind::kReduceScatter:
    case CollectiveKind::kAllreduce:
      return {BufferKind::kInput, chunk};
  }
  return {};
}

BufferSlot output_slot(const CollectiveSpec& spec, ChunkId chunk, Rank /*rank*/) {
  const int p = spec.partition_factor;
  switch (spec.kind) {
    case CollectiveKind::kAllgather:
    case CollectiveKind::kAllreduce:
      return {BufferKind::kOutput, chunk};
    case CollectiveKind::kAlltoall:
      return {BufferKind::kOutput, spec.chunk_source(chunk) * p + spec.chunk_slot(chunk)};
    case CollectiveKind::kReduceScatter:
      return {BufferKind::kOutput, spec.chunk_slot(chunk)};
  }
  return {};
}

int input_chunks(const CollectiveSpec& spec) {
  return spec.kind == CollectiveKind::kAllgather ? spec.partition_factor : spec.num_ranks * spec.partition_factor;
}

int output_chunks(const CollectiveSpec& spec) {
  return spec.kind == CollectiveKind::kReduceScatter ? spec.partition_factor : spec.num_ranks * spec.partition_factor;
}

EFProgram lower(const Schedule& schedule, const LogicalTopology& lt, int instances) {
  if (instances < 1) fail(ErrorCode::kValidation, "instances must be at least 1", kStage);
  const CollectiveSpec spec = build_collective(schedule.kind, schedule.num_ranks, schedule.partition_factor);
  if (schedule.num_chunks != spec.num_chunks) {
    fail(ErrorCode::kValidation, "schedule chunk count does not match its collective", kStage);
  }
  {
    const SimReport rep = simulate(schedule, lt, spec);
    if (!rep.ok()) fail(ErrorCode::kValidation, "schedule fails simulation: " + rep.violations.front(), kStage);
    const PostconditionResult pc = check_postcondition(rep, spec);
    if (!pc.pass) fail(ErrorCode::kValidation, "schedule misses its postcondition: " + pc.failures.front(), kStage);
  }
  const int n = spec.num_ranks;
  const int copies = instances;

  std::vector<Proto> protos;
  std::map<std::pair<ChunkId, Rank>, BufferSlot> where;
  std::map<std::pair<ChunkId, Rank>, int> initial_copy;
  std::vector<int> scratch(static_cast<std::size_t>(n), 0);
  std::set<std::pair<ChunkId, Rank>> reduced_into;
  for (const auto& s : schedule.sends) {
    if (s.reduce) reduced_into.insert({s.chunk, s.dst});
  }

  auto add_copy = [&](Rank r, BufferSlot from, BufferSlot to, bool final) {
    Proto p;
    p.rank = r;
    p.op = EFOp::kCopy;
    p.src = {from};
    p.dst = {to};
    p.key = final ? kInfinity : -1.0;
    p.order = final ? 3 : 0;
    protos.push_back(std::move(p));
    return static_cast<int>(protos.size()) - 1;
  };

  // Working slot of chunk c at rank r; a copy fills it first when the chunk's
  // precondition copy lives elsewhere.
  auto locate = [&](ChunkId c, Rank r) -> BufferSlot {
    auto it = where.find({c, r});
    if (it != where.end()) return it->second;
    BufferSlot slot;
    bool fill = false;
    switch (spec.kind) {
      case CollectiveKind::kAllgather:
        slot = r == spec.chunk_source(c) ? input_slot(spec, c, r) : output_slot(spec, c, r);
        break;
      case CollectiveKind::kAlltoall:
        if (r == spec.chunk_source(c)) {
          slot = input_slot(spec, c, r);
        } else if (r == spec.chunk_destination(c)) {
          slot = output_slot(spec, c, r);
        } else {
          slot = {BufferKind::kScratch, scratch[static_cast<std::size_t>(r)]++};
        }
        break;
      case CollectiveKind::kReduceScatter:
        if (r == spec.chunk_source(c)) {
          slot = output_slot(spec, c, r);
          fill = true;
        } else if (reduced_into.count({c, r})) {
          slot = {BufferKind::kScratch, scratch[static_cast<std::size_t>(r)]++};
          fill = true;
        } else {
          slot = input_slot(spec, c, r);
        }
        break;
      case CollectiveKind::kAllreduce:
        slot = output_slot(spec, c, r);
        fill = true;
        break;
    }
    where[{c, r}] = slot;
    if (fill) initial_copy[{c, r}] = add_copy(r, input_slot(spec, c, r), slot, false);
    return slot;
  };

  // Reducing collectives start from a private copy at every rank that
  // accumulates; allreduce works entirely in the output buffer.
  if (spec.kind == CollectiveKind::kAllreduce) {
    for (Rank r = 0; r < n; ++r) {
      for (ChunkId c = 0; c < spec.num_chunks; ++c) locate(c, r);
    }
  }

  std::map<int, std::vector<std::size_t>> members;
  std::vector<int> group_order;
  for (std::size_t i = 0; i < schedule.sends.size(); ++i) {
    auto [it, inserted] = members.try_emplace(schedule.sends[i].group);
    if (inserted) group_order.push_back(schedule.sends[i].group);
    it->second.push_back(i);
  }
  // seq follows start time, which orders every link and switch side.
  std::stable_sort(group_order.begin(), group_order.end(), [&](int a, int b) {
    return schedule.sends[members[a].front()].send_time < schedule.sends[members[b].front()].send_time;
  });
  std::vector<int> send_proto(schedule.sends.size()), recv_proto(schedule.sends.size());
  int seq = 0;
  for (int g : group_order) {
    const auto& idx = members[g];
    const ScheduledSend& head = schedule.sends[idx.front()];
    Proto snd, rcv;
    snd.rank = head.src;
    snd.peer = head.dst;
    snd.op = EFOp::kSend;
    snd.key = head.send_time;
    snd.order = 2;
    rcv.rank = head.dst;
    rcv.peer = head.src;
    rcv.op = head.reduce ? EFOp::kRecvReduce : EFOp::kRecv;
    rcv.key = head.arrive_time;
    rcv.order = 1;
    for (std::size_t i : idx) {
      const ScheduledSend& s = schedule.sends[i];
      if (s.reduce != head.reduce) fail(ErrorCode::kValidation, "group mixes reducing and copying sends", kStage);
      const BufferSlot from = locate(s.chunk, s.src);
      const BufferSlot to = locate(s.chunk, s.dst);
      snd.src.push_back(from);
      snd.dst.push_back(to);
      rcv.src.push_back(from);
      rcv.dst.push_back(to);
    }
    snd.seq = rcv.seq = seq++;
    protos.push_back(std::move(snd));
    const int sp = static_cast<int>(protos.size()) - 1;
    protos.push_back(std::move(rcv));
    const int rp = sp + 1;
    for (std::size_t i : idx) {
      send_proto[i] = sp;
      recv_proto[i] = rp;
    }
  }

  // Final placement copies.
  for (ChunkId c = 0; c < spec.num_chunks; ++c) {
    const Rank src = spec.chunk_source(c);
    if (spec.kind == CollectiveKind::kAllgather) {
      add_copy(src, input_slot(spec, c, src), output_slot(spec, c, src), true);
    } else if (spec.kind == CollectiveKind::kAlltoall && spec.chunk_destination(c) == src) {
      add_copy(src, input_slot(spec, c, src), output_slot(spec, c, src), false);
    }
  }

  // Dependencies.
  const auto transfers = schedule.transfers();
  const auto data_deps = data_dependencies(transfers);
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    const Transfer& t = transfers[i];
    auto& sd = protos[static_cast<std::size_t>(send_proto[i])].deps;
    for (int d : data_deps[i]) sd.push_back(recv_proto[static_cast<std::size_t>(d)]);
    if (auto it = initial_copy.find({t.chunk, t.src}); it != initial_copy.end()) sd.push_back(it->second);
    auto& rd = protos[static_cast<std::size_t>(recv_proto[i])].deps;
    if (auto it = initial_copy.find({t.chunk, t.dst}); it != initial_copy.end()) rd.push_back(it->second);
    // An overwrite waits until the rank's own earlier-phase sends have read the slot.
    if (!t.reduce) {
      for (std::size_t j = 0; j < transfers.size(); ++j) {
        const Transfer& u = transfers[j];
        if (u.chunk == t.chunk && u.src == t.dst && u.phase < t.phase) rd.push_back(send_proto[j]);
      }
    }
  }
  for (std::size_t k = 0; k < protos.size(); ++k) {
    auto& d = protos[k].deps;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    std::erase(d, static_cast<int>(k));
  }

  // Threadblocks: send peers first, then receive peers, each ascending.
  struct Placement {
    int tb = -1;
    int step = -1;
  };
  std::vector<Placement> placed(protos.size());
  EFProgram prog;
  prog.name = schedule.name;
  prog.kind = spec.kind;
  prog.num_ranks = n;
  prog.partition_factor = spec.partition_factor;
  prog.instances = copies;
  prog.subchunk_size = schedule.chunk_size / copies;
  std::vector<std::vector<std::vector<int>>> tb_steps(static_cast<std::size_t>(n));
  std::vector<std::vector<std::pair<Rank, Rank>>> tb_peers(static_cast<std::size_t>(n));
  for (Rank r = 0; r < n; ++r) {
    std::set<Rank> send_peers, recv_peers;
    for (const Proto& p : protos) {
      if (p.rank != r) continue;
      if (p.op == EFOp::kSend) send_peers.insert(p.peer);
      if (p.op == EFOp::kRecv || p.op == EFOp::kRecvReduce) recv_peers.insert(p.peer);
    }
    auto& peers = tb_peers[static_cast<std::size_t>(r)];
    for (Rank q : send_peers) peers.emplace_back(q, -1);
    for (Rank q : recv_peers) peers.emplace_back(-1, q);
    if (peers.empty()) peers.emplace_back(-1, -1);
    auto& steps = tb_steps[static_cast<std::size_t>(r)];
    steps.assign(peers.size(), {});
    for (std::size_t k = 0; k < protos.size(); ++k) {
      const Proto& p = protos[k];
      if (p.rank != r) continue;
      std::size_t tb = 0;
      if (p.op != EFOp::kCopy) {
        const std::pair<Rank, Rank> want = p.op == EFOp::kSend ? std::make_pair(p.peer, -1) : std::make_pair(-1, p.peer);
        tb = static_cast<std::size_t>(std::find(peers.begin(), peers.end(), want) - peers.begin());
      }
      steps[tb].push_back(static_cast<int>(k));
    }
    for (std::size_t tb = 0; tb < steps.size(); ++tb) {
      auto& list = steps[tb];
      std::stable_sort(list.begin(), list.end(), [&](int a, int b) {
        const Proto& x = protos[static_cast<std::size_t>(a)];
        const Proto& y = protos[static_cast<std::size_t>(b)];
        return std::tie(x.key, x.order, x.seq) < std::tie(y.key, y.order, y.seq);
      });
      for (std::size_t s = 0; s < list.size(); ++s) {
        placed[static_cast<std::size_t>(list[s])] = {static_cast<int>(tb), static_cast<int>(s)};
      }
    }
  }

  for (Rank r = 0; r < n; ++r) {
    const auto& peers = tb_peers[static_cast<std::size_t>(r)];
    const auto& steps = tb_steps[static_cast<std::size_t>(r)];
    const int tbs = static_cast<int>(peers.size());
    EFGpu gpu;
    gpu.id = r;
    gpu.input_chunks = input_chunks(spec) * copies;
    gpu.output_chunks = output_chunks(spec) * copies;
    gpu.scratch_chunks = scratch[static_cast<std::size_t>(r)] * copies;
    for (int inst = 0; inst < copies; ++inst) {
      for (int tb = 0; tb < tbs; ++tb) {
        EFThreadblock block;
        block.id = inst * tbs + tb;
        block.send_peer = peers[static_cast<std::size_t>(tb)].first;
        block.recv_peer = peers[static_cast<std::size_t>(tb)].second;
        for (int k : steps[static_cast<std::size_t>(tb)]) {
          const Proto& p = protos[static_cast<std::size_t>(k)];
          EFStep step;
          step.op = p.op;
          step.seq = p.seq;
          auto expand = [&](const std::vector<BufferSlot>& in) {
            std::vector<BufferSlot> out;
            for (const BufferSlot& b : in) out.push_back({b.buffer, b.index * copies + inst});
            return out;
          };
          step.src = expand(p.src);
          step.dst = expand(p.dst);
          const Placement self = placed[static_cast<std::size_t>(k)];
          for (int d : p.deps) {
            const Placement at = placed[static_cast<std::size_t>(d)];
            if (at.tb == self.tb) {
              if (at.step >= self.step) fail(ErrorCode::kInternal, "step order contradicts a dependency", kStage);
              continue;
            }
            step.deps.push_back({inst * tbs + at.tb, at.step});
          }
          std::sort(step.deps.begin(), step.deps.end(),
                    [](const EFDep& a, const EFDep& b) { return std::tie(a.tb, a.step) < std::tie(b.tb, b.step); });
          block.steps.push_back(std::move(step));
        }
        gpu.threadblocks.push_back(std::move(block));
      }
    }
    prog.gpus.push_back(std::move(gpu));
  }
  return prog;
}

std::vector<std::string> check_structure(const EFProgram& prog) {
  std::vector<std::string> problems;
  auto where = [](int g, int tb, int s) {
    return "gpu " + std::to_string(g) + " tb " + std::to_string(tb) + " step " + std::to_string(s);
  };
  if (prog.instances < 1) problems.push_back("instances must be at least 1");
  if (!prog.gpus.empty() && static_cast<int>(prog.gpus.size()) != prog.num_ranks) {
    problems.push_back("program has " + std::to_string(prog.gpus.size()) + " gpus for " +
                       std::to_string(prog.num_ranks) + " ranks");
  }
  auto size_of = [&](int g, BufferKind b) {
    const EFGpu& gpu = prog.gpus[static_cast<std::size_t>(g)];
    return b == BufferKind::kInput ? gpu.input_chunks : b == BufferKind::kOutput ? gpu.output_chunks : gpu.scratch_chunks;
  };
  auto in_range = [&](int g, const std::vector<BufferSlot>& slots) {
    if (g < 0 || g >= static_cast<int>(prog.gpus.size())) return false;
    return std::all_of(slots.begin(), slots.end(),
                       [&](const BufferSlot& b) { return b.index >= 0 && b.index < size_of(g, b.buffer); });
  };
  std::map<std::tuple<Rank, Rank, int>, std::pair<int, int>> matched;  // (src, dst, seq) -> (sends, recvs)
  for (std::size_t gi = 0; gi < prog.gpus.size(); ++gi) {
    const EFGpu& gpu = prog.gpus[gi];
    const int g = static_cast<int>(gi);
    if (gpu.id != g) problems.push_back("gpu at position " + std::to_string(g) + " has id " + std::to_string(gpu.id));
    for (std::size_t ti = 0; ti < gpu.threadblocks.size(); ++ti) {
      const EFThreadblock& tb = gpu.threadblocks[ti];
      const int t = static_cast<int>(ti);
      if (tb.id != t) problems.push_back("gpu " + std::to_string(g) + " tb at position " + std::to_string(t) + " has id " + std::to_string(tb.id));
      for (Rank peer : {tb.send_peer, tb.recv_peer}) {
        if (peer == g || peer < -1 || peer >= prog.num_ranks) {
          problems.push_back("gpu " + std::to_string(g) + " tb " + std::to_string(t) + " has invalid peer " + std::to_string(peer));
        }
      }
      for (std::size_t si = 0; si < tb.steps.size(); ++si) {
        const EFStep& st = tb.steps[si];
        const int s = static_cast<int>(si);
        if (st.src.empty() || st.src.size() != st.dst.size()) problems.push_back(where(g, t, s) + " has mismatched operands");
        switch (st.op) {
          case EFOp::kSend:
            if (tb.send_peer < 0) {
              problems.push_back(where(g, t, s) + " sends from a threadblock without a send peer");
            } else {
              if (!in_range(g, st.src) || !in_range(tb.send_peer, st.dst)) problems.push_back(where(g, t, s) + " is out of buffer bounds");
              ++matched[{g, tb.send_peer, st.seq}].first;
            }
            break;
          case EFOp::kRecv:
          case EFOp::kRecvReduce:
            if (tb.recv_peer < 0) {
              problems.push_back(where(g, t, s) + " receives in a threadblock without a receive peer");
            } else {
              if (!in_range(g, st.dst) || !in_range(tb.recv_peer, st.src)) problems.push_back(where(g, t, s) + " is out of buffer bounds");
              ++matched[{tb.recv_peer, g, st.seq}].second;
            }
            break;
          case EFOp::kCopy:
            if (!in_range(g, st.src) || !in_range(g, st.dst)) problems.push_back(where(g, t, s) + " is out of buffer bounds");
            break;
        }
        for (const EFDep& d : st.deps) {
          if (d.tb == t) {
            problems.push_back(where(g, t, s) + " depends on its own threadblock");
          } else if (d.tb < 0 || d.tb >= static_cast<int>(gpu.threadblocks.size()) || d.step < 0 ||
                     d.step >= static_cast<int>(gpu.threadblocks[static_cast<std::size_t>(d.tb)].steps.size())) {
            problems.push_back(where(g, t, s) + " depends on missing step " + std::to_string(d.tb) + ":" + std::to_string(d.step));
          }
        }
      }
    }
  }
  for (const auto& [key, count] : matched) {
    const auto [src, dst, seq] = key;
    if (count.first != prog.instances || count.second != prog.instances) {
      problems.push_back("transfer " + std::to_string(seq) + " from " + std::to_string(src) + " to " + std::to_string(dst) +
                         " has " + std::to_string(count.first) + " sends and " + std::to_string(count.second) +
                         " receives for " + std::to_string(prog.instances) + " instances");
    }
  }
  return problems;
}

}  // namespace sketchsynth
