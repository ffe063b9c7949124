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

#include "sketchsynth/collective.hpp"

#include <algorithm>
#include <string>

namespace sketchsynth {

std::string_view to_string(CollectiveKind kind) {
  switch (kind) {
    case CollectiveKind::kAllgather:
      return "allgather";
    case CollectiveKind::kAlltoall:
      return "alltoall";
    case CollectiveKind::kReduceScatter:
      return "reducescatter";
    case CollectiveKind::kAllreduce:
      return "allreduce";
  }
  return "allgather";
}

CollectiveKind parse_collective_kind(std::string_view text) {
  if (text == "allgather") return CollectiveKind::kAllgather;
  if (text == "alltoall") return CollectiveKind::kAlltoall;
  if (text == "reducescatter") return CollectiveKind::kReduceScatter;
  if (text == "allreduce") return CollectiveKind::kAllreduce;
  fail(ErrorCode::kValidation, "unsupported collective '" + std::string(text) + "'", "collective");
}

bool CollectiveSpec::in_precondition(ChunkId c, Rank r) const {
  const auto& v = precondition.at(static_cast<std::size_t>(c));
  return std::binary_search(v.begin(), v.end(), r);
}

bool CollectiveSpec::in_postcondition(ChunkId c, Rank r) const {
  const auto& v = postcondition.at(static_cast<std::size_t>(c));
  return std::binary_search(v.begin(), v.end(), r);
}

std::size_t CollectiveSpec::postcondition_size() const {
  std::size_t n = 0;
  for (const auto& v : postcondition) n += v.size();
  return n;
}

Rank CollectiveSpec::chunk_source(ChunkId c) const {
  if (kind == CollectiveKind::kAlltoall) return c / partition_factor / num_ranks;
  return c / partition_factor;
}

Rank CollectiveSpec::chunk_destination(ChunkId c) const {
  if (kind == CollectiveKind::kAlltoall) return (c / partition_factor) % num_ranks;
  return c / partition_factor;
}

ChunkId CollectiveSpec::map_chunk(ChunkId c, const std::function<Rank(Rank)>& rank_map) const {
  const int slot = chunk_slot(c);
  if (kind == CollectiveKind::kAlltoall) {
    const Rank src = rank_map(chunk_source(c));
    const Rank dst = rank_map(chunk_destination(c));
    return (src * num_ranks + dst) * partition_factor + slot;
  }
  return rank_map(chunk_source(c)) * partition_factor + slot;
}

CollectiveSpec build_collective(CollectiveKind kind, int num_ranks, int partition_factor) {
  if (num_ranks < 2) fail(ErrorCode::kValidation, "collective needs at least 2 ranks", "collective");
  if (partition_factor < 1) {
    fail(ErrorCode::kValidation, "partition factor must be at least 1", "collective");
  }
  CollectiveSpec spec;
  spec.kind = kind;
  spec.num_ranks = num_ranks;
  spec.partition_factor = partition_factor;

  std::vector<Rank> all(static_cast<std::size_t>(num_ranks));
  for (Rank r = 0; r < num_ranks; ++r) all[static_cast<std::size_t>(r)] = r;

  switch (kind) {
    case CollectiveKind::kAllgather:
      spec.num_chunks = num_ranks * partition_factor;
      for (ChunkId c = 0; c < spec.num_chunks; ++c) {
        spec.precondition.push_back({c / partition_factor});
        spec.postcondition.push_back(all);
      }
      break;
    case CollectiveKind::kAlltoall:
      spec.num_chunks = num_ranks * num_ranks * partition_factor;
      for (ChunkId c = 0; c < spec.num_chunks; ++c) {
        spec.precondition.push_back({spec.chunk_source(c)});
        spec.postcondition.push_back({spec.chunk_destination(c)});
      }
      break;
    case CollectiveKind::kReduceScatter:
      spec.reducing = true;
      spec.num_chunks = num_ranks * partition_factor;
      for (ChunkId c = 0; c < spec.num_chunks; ++c) {
        spec.precondition.push_back(all);
        spec.postcondition.push_back({c / partition_factor});
      }
      break;
    case CollectiveKind::kAllreduce:
      spec.reducing = true;
      spec.num_chunks = num_ranks * partition_factor;
      for (ChunkId c = 0; c < spec.num_chunks; ++c) {
        spec.precondition.push_back(all);
        spec.postcondition.push_back(all);
      }
      break;
  }
  return spec;
}

Megabytes chunk_size(const CollectiveSpec& spec, Megabytes input_buffer_size) {
  if (!(input_buffer_size > 0.0)) {
    fail(ErrorCode::kValidation, "input buffer size must be positive", "collective");
  }
  switch (spec.kind) {
    case CollectiveKind::kAllgather:
    case CollectiveKind::kReduceScatter:
      return input_buffer_size / spec.partition_factor;
    case CollectiveKind::kAlltoall:
    case CollectiveKind::kAllreduce:
      return input_buffer_size / (spec.num_ranks * spec.partition_factor);
  }
  return input_buffer_size;
}

}  // namespace sketchsynth
