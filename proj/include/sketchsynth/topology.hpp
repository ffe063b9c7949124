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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchsynth/common.hpp"

namespace sketchsynth {

// A directed link with alpha-beta costs.
struct Link {
  Rank src = 0;
  Rank dst = 0;
  Micros alpha = 0.0;   // latency, us
  double beta = 0.0;    // inverse bandwidth, us per MB

  // alpha + beta * size.
  Micros latency(Megabytes size) const { return alpha + beta * size; }

  friend bool operator==(const Link&, const Link&) = default;
};

enum class SwitchSide { kSend, kRecv };

enum class HyperedgePolicy { kUcMax, kUcMin, kFree };

std::string_view to_string(SwitchSide side);
std::string_view to_string(HyperedgePolicy policy);
SwitchSide parse_switch_side(std::string_view text);
HyperedgePolicy parse_hyperedge_policy(std::string_view text);

// One side of a switch seen from `anchor`: the send side covers links
// anchor -> peer, the recv side covers links peer -> anchor.
struct SwitchHyperedge {
  SwitchSide kind = SwitchSide::kSend;
  Rank anchor = 0;
  std::vector<Rank> peers;
  HyperedgePolicy policy = HyperedgePolicy::kFree;

  friend bool operator==(const SwitchHyperedge&, const SwitchHyperedge&) = default;
};

class Topology {
 public:
  Topology() = default;

  // Validates every invariant; throws Error(kValidation) on violation.
  Topology(std::string name, int num_ranks, std::vector<Link> links,
           std::vector<SwitchHyperedge> switches,
           std::vector<std::vector<Rank>> nodes);

  const std::string& name() const { return name_; }
  int num_ranks() const { return num_ranks_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<SwitchHyperedge>& switches() const { return switches_; }
  const std::vector<std::vector<Rank>>& nodes() const { return nodes_; }

  int node_of(Rank r) const { return node_of_.at(static_cast<std::size_t>(r)); }
  // Position of `r` inside its node's rank list.
  int local_index(Rank r) const { return local_index_.at(static_cast<std::size_t>(r)); }
  bool is_internode(const Link& link) const { return node_of(link.src) != node_of(link.dst); }

  // Index into links(), or nullopt when (src, dst) is not a link.
  std::optional<std::size_t> find_link(Rank src, Rank dst) const;
  const Link& link(Rank src, Rank dst) const;
  bool has_link(Rank src, Rank dst) const { return find_link(src, dst).has_value(); }

  // Outgoing / incoming link indices per rank, in link order.
  const std::vector<std::size_t>& out_links(Rank r) const { return out_.at(static_cast<std::size_t>(r)); }
  const std::vector<std::size_t>& in_links(Rank r) const { return in_.at(static_cast<std::size_t>(r)); }

  // Switch hyperedges that contain link (src, dst), by index into switches().
  std::vector<std::size_t> switches_containing(Rank src, Rank dst) const;

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.name_ == b.name_ && a.num_ranks_ == b.num_ranks_ && a.links_ == b.links_ &&
           a.switches_ == b.switches_ && a.nodes_ == b.nodes_;
  }

 private:
  std::string name_;
  int num_ranks_ = 0;
  std::vector<Link> links_;
  std::vector<SwitchHyperedge> switches_;
  std::vector<std::vector<Rank>> nodes_;

  std::vector<int> node_of_;
  std::vector<int> local_index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> link_index_;  // dense [src][dst], npos if absent
};

// Parses and validates a topology JSON document.
Topology load_topology(std::string_view text);
Topology load_topology_file(const std::string& path);

// Canonical JSON form; load_topology(serialize_topology(t)) == t.
std::string serialize_topology(const Topology& topology);

// alpha + beta * size for the link (src, dst). Throws on a missing link or a
// non-positive size.
Micros link_latency(const Topology& topology, Rank src, Rank dst, Megabytes size);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// All-pairs minimum hop counts over directed links; kUnreachable when no path.
using HopTable = std::vector<std::vector<int>>;
HopTable shortest_hop_distances(const Topology& topology);

}  // namespace sketchsynth
