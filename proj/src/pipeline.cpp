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

#include "sketchsynth/pipeline.hpp"

#include "sketchsynth/combining.hpp"
#include "sketchsynth/contiguity.hpp"
#include "sketchsynth/ordering.hpp"

namespace sketchsynth {

CommSketch effective_sketch(const CommSketch& sketch, const SynthesisOptions& options) {
  CommSketch sk = sketch;
  if (options.chunks) {
    if (*options.chunks < 1) fail(ErrorCode::kValidation, "--chunks must be at least 1", "config");
    sk.input_chunkup = *options.chunks;
  }
  if (options.size) {
    if (!(*options.size > 0.0)) fail(ErrorCode::kValidation, "--size must be positive", "config");
    sk.input_size = *options.size;
  }
  if (options.policy) {
    if (sk.intranode.strategy != "switch") {
      fail(ErrorCode::kValidation, "a hyperedge policy needs a switch intranode sketch", "config");
    }
    sk.intranode.hyperedge_policies = {*options.policy};
  }
  if (options.direction) sk.ordering = options.direction;
  return sk;
}

SynthesisResult synthesize(const Topology& topology, const CommSketch& base_sketch, const SynthesisOptions& options) {
  const CommSketch sketch = effective_sketch(base_sketch, options);
  SynthesisResult out;
  out.logical = apply_sketch(topology, sketch);
  const LogicalTopology& lt = out.logical;
  const int n = topology.num_ranks();
  out.spec = build_collective(options.kind, n, sketch.input_chunkup);

  const bool combining = options.kind == CollectiveKind::kReduceScatter || options.kind == CollectiveKind::kAllreduce;
  const CollectiveSpec routed =
      combining ? build_collective(CollectiveKind::kAllgather, n, sketch.input_chunkup) : out.spec;
  const Megabytes chunk = chunk_size(out.spec, sketch.input_size);

  const RoutingModel rm = encode_routing(lt, routed, sketch, chunk);
  out.routing = solve_routing(rm, options.solver);
  if (options.on_stage) options.on_stage("routing", serialize_routing(out.routing));

  const OrderingDirection dir = sketch.ordering.value_or(default_direction(lt.base()));
  const Ordering ordering = order_chunks(out.routing, lt, dir);
  const ContiguityConfig cc{sketch.contiguity, sketch.max_contiguous};
  const ContiguityModel cm = encode_contiguity(out.routing.transfers(), ordering, lt, chunk, cc);
  Schedule ag = solve_contiguity(cm, lt, options.solver);
  ag.name = sketch.name.empty() ? topology.name() : sketch.name;
  ag.topology = topology.name();
  ag.kind = routed.kind;
  ag.num_ranks = n;
  ag.partition_factor = routed.partition_factor;
  ag.num_chunks = routed.num_chunks;
  ag.chunk_size = chunk;
  ag.input_size = chunk * routed.partition_factor;
  ag.stats.insert(ag.stats.begin(), out.routing.stats);
  if (options.on_stage) options.on_stage("contiguity", serialize_schedule(ag));

  if (!combining) {
    ag.input_size = sketch.input_size;
    ag.lower_bound = out.routing.lower_bound_time;
    out.schedule = std::move(ag);
    return out;
  }
  const CombineOptions co{cc, options.solver, sketch.ordering};
  Schedule rs = invert_allgather(ag, lt, co);
  rs.stats.insert(rs.stats.begin(), ag.stats.front());
  if (options.on_stage) options.on_stage("combining", serialize_schedule(rs));
  if (options.kind == CollectiveKind::kReduceScatter) {
    rs.input_size = sketch.input_size;
    out.schedule = std::move(rs);
    return out;
  }
  Schedule ar = compose_allreduce(rs, ag, lt);
  ar.stats = rs.stats;
  ar.stats.insert(ar.stats.end(), ag.stats.begin() + 1, ag.stats.end());
  ar.input_size = sketch.input_size;
  out.schedule = std::move(ar);
  return out;
}

}  // namespace sketchsynth
