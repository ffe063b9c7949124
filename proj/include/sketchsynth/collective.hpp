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

#include <functional>
#include <string_view>
#include <vector>

#include "sketchsynth/common.hpp"

namespace sketchsynth {

enum class CollectiveKind { kAllgather, kAlltoall, kReduceScatter, kAllreduce };

std::string_view to_string(CollectiveKind kind);
CollectiveKind parse_collective_kind(std::string_view text);

// Chunk universe with pre/postcondition placement.
//
// Chunk id layout:
//   Allgather, ReduceScatter, Allreduce:  id = owner * partition + slot
//   Alltoall:                             id = (src * ranks + dst) * partition + slot
//
// Allreduce is synthesized by composing ReduceScatter and Allgather; its spec
// exists so that combined schedules can be checked against it.
struct CollectiveSpec {
  CollectiveKind kind = CollectiveKind::kAllgather;
  int num_ranks = 0;
  int partition_factor = 1;
  int num_chunks = 0;
  bool reducing = false;
  // precondition[c] / postcondition[c]: sorted ranks holding chunk c.
  std::vector<std::vector<Rank>> precondition;
  std::vector<std::vector<Rank>> postcondition;

  bool in_precondition(ChunkId c, Rank r) const;
  bool in_postcondition(ChunkId c, Rank r) const;
  std::size_t postcondition_size() const;

  // Owner rank for Allgather-layout chunks, source rank for Alltoall chunks.
  Rank chunk_source(ChunkId c) const;
  // Alltoall destination; owner for the Allgather layout.
  Rank chunk_destination(ChunkId c) const;
  int chunk_slot(ChunkId c) const { return c % partition_factor; }

  // Image of chunk c when every rank r is replaced by rank_map(r).
  ChunkId map_chunk(ChunkId c, const std::function<Rank(Rank)>& rank_map) const;
};

CollectiveSpec build_collective(CollectiveKind kind, int num_ranks, int partition_factor);

// Per-chunk size for a given input buffer size.
Megabytes chunk_size(const CollectiveSpec& spec, Megabytes input_buffer_size);

}  // namespace sketchsynth
