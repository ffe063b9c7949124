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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/schedule.hpp"
#include "sketchsynth/simulator.hpp"
#include "sketchsynth/sketch.hpp"

namespace sketchsynth {

enum class BufferKind { kInput, kOutput, kScratch };

// Buffer position in chunk units (lowering) or subchunk units (EF steps).
struct BufferSlot {
  BufferKind buffer = BufferKind::kInput;
  int index = 0;
  friend bool operator==(const BufferSlot&, const BufferSlot&) = default;
  friend auto operator<=>(const BufferSlot&, const BufferSlot&) = default;
};

// Fixed part of the buffer layout, in chunk units.
//   Allgather      input[slot] at the owner; output[chunk] everywhere
//   Alltoall       input[dst * P + slot] at src; output[src * P + slot] at dst
//   ReduceScatter  input[chunk] everywhere; output[slot] at the owner
//   Allreduce      input[chunk] and output[chunk] everywhere
// P is the partition factor. Relayed data lives in scratch, allocated by the
// lowering in order of first use.
BufferSlot input_slot(const CollectiveSpec& spec, ChunkId chunk, Rank rank);
BufferSlot output_slot(const CollectiveSpec& spec, ChunkId chunk, Rank rank);
int input_chunks(const CollectiveSpec& spec);
int output_chunks(const CollectiveSpec& spec);

enum class EFOp { kSend, kRecv, kRecvReduce, kCopy };

std::string_view to_string(EFOp op);  // "s", "r", "rrc", "cpy"

struct EFDep {
  int tb = 0;
  int step = 0;
  friend bool operator==(const EFDep&, const EFDep&) = default;
};

// One instruction. Operand lists run in parallel: position k moves src[k]
// to dst[k], one subchunk each. A send names the receiver's slots in dst, a
// receive names the sender's slots in src.
struct EFStep {
  EFOp op = EFOp::kSend;
  std::vector<BufferSlot> src;
  std::vector<BufferSlot> dst;
  // Global transfer index: a send and its receive share it, and transfers
  // on one link (or switch side) go in increasing order.
  int seq = -1;
  // Steps of other threadblocks on the same rank that must finish first.
  std::vector<EFDep> deps;

  int count() const { return static_cast<int>(src.size()); }
  friend bool operator==(const EFStep&, const EFStep&) = default;
};

struct EFThreadblock {
  int id = 0;
  Rank send_peer = -1;
  Rank recv_peer = -1;
  std::vector<EFStep> steps;
  friend bool operator==(const EFThreadblock&, const EFThreadblock&) = default;
};

struct EFGpu {
  Rank id = 0;
  int input_chunks = 0;  // subchunk units
  int output_chunks = 0;
  int scratch_chunks = 0;
  std::vector<EFThreadblock> threadblocks;
  friend bool operator==(const EFGpu&, const EFGpu&) = default;
};

struct EFProgram {
  std::string name;
  CollectiveKind kind = CollectiveKind::kAllgather;
  int num_ranks = 0;
  int partition_factor = 1;
  int instances = 1;
  Megabytes subchunk_size = 0.0;
  std::vector<EFGpu> gpus;
  friend bool operator==(const EFProgram&, const EFProgram&) = default;
};

// Splits every send into a sender and a receiver step, places chunks by the
// layout above, and packs steps into threadblocks: one per (rank, send peer)
// and one per (rank, receive peer), steps in schedule time order. Local
// copies go to the rank's first threadblock. With `instances` n every chunk
// becomes n subchunks and every threadblock is repeated n times; instance i
// owns subchunk index * n + i.
// Throws kValidation when the schedule fails simulation or its postcondition.
EFProgram lower(const Schedule& schedule, const LogicalTopology& lt, int instances = 1);

// Structural problems: peer rule, operand shapes, buffer bounds, dangling or
// same-threadblock dependencies, unmatched sends and receives.
std::vector<std::string> check_structure(const EFProgram& program);

std::string serialize_ef(const EFProgram& program);
EFProgram parse_ef(std::string_view text);

// Executes the program: threadblocks run their steps in order, a send waits
// for its dependencies and for its link and switch sides to be free (in seq
// order), a receive completes when its data lands. The n instance copies of
// one transfer share the link as a single transfer. A deadlock is reported as
// violations naming every blocked step. The report's provenance is read from
// the output buffers.
SimReport interpret_ef(const EFProgram& program, const LogicalTopology& lt);

}  // namespace sketchsynth
