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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sketchsynth/collective.hpp"
#include "sketchsynth/common.hpp"
#include "sketchsynth/topology.hpp"

namespace sketchsynth {

// Rotational symmetry: rank r maps to base + (r - base + offset) mod group,
// where base = floor(r / group) * group. Ranks in a trailing partial group
// are fixed points.
struct SymmetryOffset {
  int offset = 0;
  int group = 0;
  friend bool operator==(const SymmetryOffset&, const SymmetryOffset&) = default;
};

enum class OrderingDirection { kForward, kReverse };

// Which links may carry several chunks as one contiguous transfer.
enum class ContiguityScope { kInternode, kAll, kNone };

std::string_view to_string(OrderingDirection direction);
std::string_view to_string(ContiguityScope scope);

struct IntranodeSketch {
  // "switch" turns each listed group of local ranks into switch-hyperedges;
  // "none" keeps whatever switches the physical topology declares.
  std::string strategy = "none";
  std::vector<std::vector<Rank>> switches;           // local indices
  std::vector<HyperedgePolicy> hyperedge_policies;   // one per switch, or one for all
  std::vector<std::pair<Rank, Rank>> excluded_links; // local (src, dst) pairs to prune

  friend bool operator==(const IntranodeSketch&, const IntranodeSketch&) = default;
};

struct InternodeSketch {
  // "relay" keeps only the inter-node links listed in `conn`; "none" keeps all.
  std::string strategy = "none";
  // local sender -> local receivers on every other node.
  std::map<Rank, std::vector<Rank>> conn;
  // local sender -> divisor applied to inter-node bandwidth (beta multiplied).
  std::map<Rank, double> beta_split;
  // (r1, r2): chunk with precondition rank rp leaves its node through
  // rank (rp / r1) * r1 + r2.
  std::optional<std::pair<int, int>> chunk_to_relay;

  friend bool operator==(const InternodeSketch&, const InternodeSketch&) = default;
};

struct CommSketch {
  std::string name;
  IntranodeSketch intranode;
  InternodeSketch internode;
  std::vector<SymmetryOffset> symmetry_offsets;

  // hyperparameters
  int input_chunkup = 1;
  Megabytes input_size = 1.0;
  int shortest_path_slack = 0;
  std::optional<OrderingDirection> ordering;
  ContiguityScope contiguity = ContiguityScope::kInternode;
  int max_contiguous = 4;

  friend bool operator==(const CommSketch&, const CommSketch&) = default;
};

CommSketch parse_sketch(std::string_view text);
CommSketch load_sketch_file(const std::string& path);
std::string serialize_sketch(const CommSketch& sketch);

// Sketch that keeps the physical topology unchanged.
CommSketch identity_sketch(int input_chunkup = 1, Megabytes input_size = 1.0);

// The routable subgraph plus the annotations synthesis needs.
class LogicalTopology {
 public:
  LogicalTopology() = default;
  LogicalTopology(Topology base, std::vector<double> effective_beta,
                  std::optional<std::pair<int, int>> chunk_to_relay);

  // Pruned links with their physical costs and the active switch-hyperedges.
  const Topology& base() const { return base_; }
  int num_ranks() const { return base_.num_ranks(); }

  double effective_beta(std::size_t link_index) const { return effective_beta_.at(link_index); }
  // Link with beta replaced by its effective value.
  Link cost_link(Rank src, Rank dst) const;
  Micros latency(Rank src, Rank dst, Megabytes size) const { return cost_link(src, dst).latency(size); }

  // Whether chunk whose precondition rank is `source` may use the link.
  // Intra-node links are always allowed.
  bool relay_allowed(Rank source, Rank link_src, Rank link_dst) const;
  const std::optional<std::pair<int, int>>& chunk_to_relay() const { return chunk_to_relay_; }

  // Same logical topology with every alpha and beta scaled by `factor`.
  LogicalTopology scaled(double factor) const;

 private:
  Topology base_;
  std::vector<double> effective_beta_;
  std::optional<std::pair<int, int>> chunk_to_relay_;
};

LogicalTopology apply_sketch(const Topology& topology, const CommSketch& sketch);

// Logical topology equal to the physical one.
LogicalTopology identity_logical(const Topology& topology);

struct ChunkSend {
  ChunkId chunk = 0;
  Rank src = 0;
  Rank dst = 0;
  friend bool operator==(const ChunkSend&, const ChunkSend&) = default;
  friend auto operator<=>(const ChunkSend&, const ChunkSend&) = default;
};

Rank rotate_rank(const SymmetryOffset& sym, int num_ranks, Rank r);

// Image of a send under one rotational symmetry; chunk ids follow the
// documented layout under the same rank rotation.
ChunkSend symmetric_image(const SymmetryOffset& sym, const CollectiveSpec& spec,
                          const ChunkSend& send);

// (rp / r1) * r1 + r2. Throws when the sketch carries no relay map.
Rank relay_for_chunk(const CommSketch& sketch, Rank precondition_rank);

}  // namespace sketchsynth
