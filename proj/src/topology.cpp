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

#include "sketchsynth/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sketchsynth {
namespace {

constexpr std::size_t kNoLink = static_cast<std::size_t>(-1);

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::kValidation, message, "topology");
}

template <typename T>
T get_field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail(ErrorCode::kParse, std::string("missing field '") + key + "'", "topology");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("bad field '") + key + "': " + e.what(), "topology");
  }
}

}  // namespace

std::string_view to_string(SwitchSide side) {
  return side == SwitchSide::kSend ? "send" : "recv";
}

std::string_view to_string(HyperedgePolicy policy) {
  switch (policy) {
    case HyperedgePolicy::kUcMax:
      return "uc-max";
    case HyperedgePolicy::kUcMin:
      return "uc-min";
    case HyperedgePolicy::kFree:
      return "free";
  }
  return "free";
}

SwitchSide parse_switch_side(std::string_view text) {
  if (text == "send") return SwitchSide::kSend;
  if (text == "recv") return SwitchSide::kRecv;
  fail(ErrorCode::kParse, "unknown switch kind '" + std::string(text) + "'", "topology");
}

HyperedgePolicy parse_hyperedge_policy(std::string_view text) {
  if (text == "uc-max") return HyperedgePolicy::kUcMax;
  if (text == "uc-min") return HyperedgePolicy::kUcMin;
  if (text == "free" || text == "none") return HyperedgePolicy::kFree;
  fail(ErrorCode::kParse, "unknown hyperedge policy '" + std::string(text) + "'", "topology");
}

Topology::Topology(std::string name, int num_ranks, std::vector<Link> links,
                   std::vector<SwitchHyperedge> switches,
                   std::vector<std::vector<Rank>> nodes)
    : name_(std::move(name)),
      num_ranks_(num_ranks),
      links_(std::move(links)),
      switches_(std::move(switches)),
      nodes_(std::move(nodes)) {
  require(num_ranks_ >= 1, "num_ranks must be positive");
  const auto n = static_cast<std::size_t>(num_ranks_);
  auto valid = [&](Rank r) { return r >= 0 && r < num_ranks_; };

  if (nodes_.empty()) {
    nodes_.emplace_back();
    for (Rank r = 0; r < num_ranks_; ++r) nodes_.back().push_back(r);
  }
  node_of_.assign(n, -1);
  local_index_.assign(n, -1);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    for (std::size_t i = 0; i < nodes_[k].size(); ++i) {
      const Rank r = nodes_[k][i];
      require(valid(r), "node " + std::to_string(k) + " references rank " + std::to_string(r) +
                            " outside [0, " + std::to_string(num_ranks_) + ")");
      require(node_of_[static_cast<std::size_t>(r)] == -1,
              "rank " + std::to_string(r) + " appears in more than one node");
      node_of_[static_cast<std::size_t>(r)] = static_cast<int>(k);
      local_index_[static_cast<std::size_t>(r)] = static_cast<int>(i);
    }
  }
  for (Rank r = 0; r < num_ranks_; ++r) {
    require(node_of_[static_cast<std::size_t>(r)] != -1,
            "rank " + std::to_string(r) + " is not covered by the node partition");
  }

  link_index_.assign(n, std::vector<std::size_t>(n, kNoLink));
  out_.assign(n, {});
  in_.assign(n, {});
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    require(valid(l.src) && valid(l.dst),
            "link (" + std::to_string(l.src) + "," + std::to_string(l.dst) +
                ") references a rank outside [0, " + std::to_string(num_ranks_) + ")");
    require(l.src != l.dst, "self-loop link on rank " + std::to_string(l.src));
    require(std::isfinite(l.alpha) && l.alpha >= 0.0 && std::isfinite(l.beta) && l.beta >= 0.0,
            "link (" + std::to_string(l.src) + "," + std::to_string(l.dst) +
                ") needs finite alpha >= 0 and beta >= 0");
    auto& slot = link_index_[static_cast<std::size_t>(l.src)][static_cast<std::size_t>(l.dst)];
    require(slot == kNoLink, "duplicate directed link (" + std::to_string(l.src) + "," +
                                 std::to_string(l.dst) + ")");
    slot = i;
    out_[static_cast<std::size_t>(l.src)].push_back(i);
    in_[static_cast<std::size_t>(l.dst)].push_back(i);
  }

  for (const auto& sw : switches_) {
    require(valid(sw.anchor), "switch anchor " + std::to_string(sw.anchor) + " out of range");
    for (Rank p : sw.peers) {
      const Rank src = sw.kind == SwitchSide::kSend ? sw.anchor : p;
      const Rank dst = sw.kind == SwitchSide::kSend ? p : sw.anchor;
      require(valid(p) && has_link(src, dst),
              "switch member link (" + std::to_string(src) + "," + std::to_string(dst) +
                  ") is not a topology link");
    }
  }
}

std::optional<std::size_t> Topology::find_link(Rank src, Rank dst) const {
  if (src < 0 || dst < 0 || src >= num_ranks_ || dst >= num_ranks_) return std::nullopt;
  const std::size_t idx = link_index_[static_cast<std::size_t>(src)][static_cast<std::size_t>(dst)];
  if (idx == kNoLink) return std::nullopt;
  return idx;
}

const Link& Topology::link(Rank src, Rank dst) const {
  auto idx = find_link(src, dst);
  if (!idx) {
    fail(ErrorCode::kValidation,
         "no link (" + std::to_string(src) + "," + std::to_string(dst) + ")", "topology");
  }
  return links_[*idx];
}

std::vector<std::size_t> Topology::switches_containing(Rank src, Rank dst) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < switches_.size(); ++i) {
    const auto& sw = switches_[i];
    const Rank anchor = sw.kind == SwitchSide::kSend ? src : dst;
    const Rank peer = sw.kind == SwitchSide::kSend ? dst : src;
    if (sw.anchor == anchor &&
        std::find(sw.peers.begin(), sw.peers.end(), peer) != sw.peers.end()) {
      out.push_back(i);
    }
  }
  return out;
}

Topology load_topology(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, e.what(), "topology");
  }
  if (!doc.is_object()) fail(ErrorCode::kParse, "document must be a JSON object", "topology");

  const auto name = doc.contains("name") ? get_field<std::string>(doc, "name") : std::string();
  const int num_ranks = get_field<int>(doc, "num_ranks");

  std::vector<std::vector<Rank>> nodes;
  if (doc.contains("nodes")) nodes = get_field<std::vector<std::vector<Rank>>>(doc, "nodes");

  std::vector<Link> links;
  if (doc.contains("links")) {
    if (!doc["links"].is_array()) fail(ErrorCode::kParse, "'links' must be an array", "topology");
    for (const auto& item : doc["links"]) {
      Link l;
      l.src = get_field<int>(item, "src");
      l.dst = get_field<int>(item, "dst");
      l.alpha = get_field<double>(item, "alpha_us");
      l.beta = get_field<double>(item, "beta_us_per_mb");
      links.push_back(l);
    }
  }

  std::vector<SwitchHyperedge> switches;
  if (doc.contains("switches")) {
    if (!doc["switches"].is_array()) {
      fail(ErrorCode::kParse, "'switches' must be an array", "topology");
    }
    for (const auto& item : doc["switches"]) {
      SwitchHyperedge sw;
      sw.kind = parse_switch_side(get_field<std::string>(item, "kind"));
      sw.anchor = get_field<int>(item, "anchor");
      sw.peers = get_field<std::vector<Rank>>(item, "peers");
      sw.policy = item.contains("policy")
                      ? parse_hyperedge_policy(get_field<std::string>(item, "policy"))
                      : HyperedgePolicy::kFree;
      switches.push_back(std::move(sw));
    }
  }
  return Topology(name, num_ranks, std::move(links), std::move(switches), std::move(nodes));
}

Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kValidation, "cannot open topology file '" + path + "'", "topology");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology(ss.str());
}

std::string serialize_topology(const Topology& topology) {
  ordered_json doc;
  doc["name"] = topology.name();
  doc["num_ranks"] = topology.num_ranks();
  doc["nodes"] = topology.nodes();
  ordered_json links = ordered_json::array();
  for (const auto& l : topology.links()) {
    ordered_json item;
    item["src"] = l.src;
    item["dst"] = l.dst;
    item["alpha_us"] = l.alpha;
    item["beta_us_per_mb"] = l.beta;
    links.push_back(std::move(item));
  }
  doc["links"] = std::move(links);
  ordered_json switches = ordered_json::array();
  for (const auto& sw : topology.switches()) {
    ordered_json item;
    item["kind"] = std::string(to_string(sw.kind));
    item["anchor"] = sw.anchor;
    item["peers"] = sw.peers;
    item["policy"] = std::string(to_string(sw.policy));
    switches.push_back(std::move(item));
  }
  doc["switches"] = std::move(switches);
  return doc.dump(2) + "\n";
}

Micros link_latency(const Topology& topology, Rank src, Rank dst, Megabytes size) {
  if (!(size > 0.0)) fail(ErrorCode::kValidation, "transfer size must be positive", "topology");
  return topology.link(src, dst).latency(size);
}

HopTable shortest_hop_distances(const Topology& topology) {
  const int n = topology.num_ranks();
  HopTable dist(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), kUnreachable));
  for (Rank s = 0; s < n; ++s) {
    auto& row = dist[static_cast<std::size_t>(s)];
    row[static_cast<std::size_t>(s)] = 0;
    std::deque<Rank> queue{s};
    while (!queue.empty()) {
      const Rank u = queue.front();
      queue.pop_front();
      for (std::size_t li : topology.out_links(u)) {
        const Rank v = topology.links()[li].dst;
        if (row[static_cast<std::size_t>(v)] == kUnreachable) {
          row[static_cast<std::size_t>(v)] = row[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return dist;
}

}  // namespace sketchsynth
