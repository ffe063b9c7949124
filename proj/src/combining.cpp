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

#include "sketchsynth/combining.hpp"

#include <cmath>

namespace sketchsynth {
namespace {

constexpr const char* kStage = "combining";

}  // namespace

Schedule invert_allgather(const Schedule& ag, const LogicalTopology& lt, const CombineOptions& options) {
  if (ag.kind != CollectiveKind::kAllgather) {
    fail(ErrorCode::kValidation, "only an allgather schedule can be inverted, got " + std::string(to_string(ag.kind)),
         kStage);
  }
  std::vector<Transfer> transfers;
  transfers.reserve(ag.sends.size());
  for (const auto& s : ag.sends) {
    if (!lt.base().has_link(s.dst, s.src)) {
      fail(ErrorCode::kValidation,
           "reverse link " + std::to_string(s.dst) + "->" + std::to_string(s.src) + " is missing", kStage);
    }
    transfers.push_back({s.chunk, s.dst, s.src, true, 0});
  }
  const OrderingDirection dir = options.direction.value_or(default_direction(lt.base()));
  const Ordering ordering = order_transfers(transfers, lt, ag.chunk_size, dir);
  const ContiguityModel cm = encode_contiguity(transfers, ordering, lt, ag.chunk_size, options.contiguity);
  Schedule rs = solve_contiguity(cm, lt, options.solver);
  rs.name = ag.name;
  rs.topology = ag.topology;
  rs.kind = CollectiveKind::kReduceScatter;
  rs.num_ranks = ag.num_ranks;
  rs.partition_factor = ag.partition_factor;
  rs.num_chunks = ag.num_chunks;
  rs.input_size = ag.input_size;
  rs.chunk_size = ag.chunk_size;
  return rs;
}

Schedule compose_allreduce(const Schedule& rs, const Schedule& ag, const LogicalTopology& lt) {
  if (rs.kind != CollectiveKind::kReduceScatter || ag.kind != CollectiveKind::kAllgather) {
    fail(ErrorCode::kValidation, "allreduce needs a reducescatter and an allgather", kStage);
  }
  if (rs.num_ranks != ag.num_ranks || rs.partition_factor != ag.partition_factor || rs.num_chunks != ag.num_chunks ||
      std::abs(rs.chunk_size - ag.chunk_size) > 1e-12) {
    fail(ErrorCode::kValidation, "reducescatter output placement does not match allgather input placement", kStage);
  }
  Schedule ar;
  ar.name = ag.name;
  ar.topology = ag.topology;
  ar.kind = CollectiveKind::kAllreduce;
  ar.num_ranks = ag.num_ranks;
  ar.partition_factor = ag.partition_factor;
  ar.num_chunks = ag.num_chunks;
  ar.input_size = ag.chunk_size * ag.num_chunks;
  ar.chunk_size = ag.chunk_size;
  int offset = 0;
  for (const auto& s : rs.sends) {
    ar.sends.push_back(s);
    ar.sends.back().phase = 0;
    ar.sends.back().reduce = true;
    offset = std::max(offset, s.group + 1);
  }
  for (const auto& s : ag.sends) {
    ar.sends.push_back(s);
    ar.sends.back().phase = 1;
    ar.sends.back().reduce = false;
    ar.sends.back().group += offset;
  }
  ar.stats = rs.stats;
  ar.stats.insert(ar.stats.end(), ag.stats.begin(), ag.stats.end());
  normalize_groups(ar);
  retime(ar, lt);
  return ar;
}

}  // namespace sketchsynth
