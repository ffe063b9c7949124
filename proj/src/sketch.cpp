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

#include "sketchsynth/sketch.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sketchsynth {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kStage = "sketch";

[[noreturn]] void parse_error(const std::string& message) {
  fail(ErrorCode::kParse, message, kStage);
}

[[noreturn]] void invalid(const std::string& message) {
  fail(ErrorCode::kValidation, message, kStage);
}

template <typename T>
T as(const json& value, const std::string& what) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    parse_error("bad value for '" + what + "': " + e.what());
  }
}

Rank parse_rank_key(const std::string& key, const std::string& what) {
  std::size_t used = 0;
  int r = 0;
  try {
    r = std::stoi(key, &used);
  } catch (const std::exception&) {
    parse_error("non-numeric rank key '" + key + "' in " + what);
  }
  if (used != key.size()) parse_error("non-numeric rank key '" + key + "' in " + what);
  if (r < 0) invalid("invalid rank " + key + " in " + what);
  return r;
}

void check_rank(Rank r, const std::string& what) {
  if (r < 0) invalid("invalid rank " + std::to_string(r) + " in " + what);
}

OrderingDirection parse_direction(const std::string& text) {
  if (text == "forward") return OrderingDirection::kForward;
  if (text == "reverse") return OrderingDirection::kReverse;
  parse_error("unknown ordering direction '" + text + "'");
}

ContiguityScope parse_scope(const std::string& text) {
  if (text == "internode") return ContiguityScope::kInternode;
  if (text == "all") return ContiguityScope::kAll;
  if (text == "none") return ContiguityScope::kNone;
  parse_error("unknown contiguity scope '" + text + "'");
}

}  // namespace

std::string_view to_string(OrderingDirection direction) {
  return direction == OrderingDirection::kForward ? "forward" : "reverse";
}

std::string_view to_string(ContiguityScope scope) {
  switch (scope) {
    case ContiguityScope::kInternode:
      return "internode";
    case ContiguityScope::kAll:
      return "all";
    case ContiguityScope::kNone:
      return "none";
  }
  return "internode";
}

CommSketch parse_sketch(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    parse_error(e.what());
  }
  if (!doc.is_object()) parse_error("sketch must be a JSON object");

  CommSketch sk;
  if (doc.contains("name")) sk.name = as<std::string>(doc["name"], "name");

  if (doc.contains("intranode_sketch")) {
    const json& intra = doc["intranode_sketch"];
    if (!intra.is_object()) parse_error("'intranode_sketch' must be an object");
    if (intra.contains("strategy")) sk.intranode.strategy = as<std::string>(intra["strategy"], "strategy");
    if (sk.intranode.strategy != "switch" && sk.intranode.strategy != "none") {
      parse_error("unknown intranode strategy '" + sk.intranode.strategy + "'");
    }
    if (intra.contains("switches")) {
      sk.intranode.switches = as<std::vector<std::vector<Rank>>>(intra["switches"], "switches");
      for (const auto& group : sk.intranode.switches) {
        for (Rank r : group) check_rank(r, "intranode switches");
      }
    }
    if (intra.contains("switch_hyperedge_strategy")) {
      for (const auto& s : as<std::vector<std::string>>(intra["switch_hyperedge_strategy"],
                                                        "switch_hyperedge_strategy")) {
        try {
          sk.intranode.hyperedge_policies.push_back(parse_hyperedge_policy(s));
        } catch (const Error& e) {
          parse_error(e.what());
        }
      }
    }
    if (intra.contains("excluded_links")) {
      for (const auto& pair : as<std::vector<std::vector<Rank>>>(intra["excluded_links"], "excluded_links")) {
        if (pair.size() != 2) parse_error("excluded_links entries must be [src, dst]");
        check_rank(pair[0], "excluded_links");
        check_rank(pair[1], "excluded_links");
        sk.intranode.excluded_links.emplace_back(pair[0], pair[1]);
      }
    }
    if (sk.intranode.strategy == "switch" && !sk.intranode.switches.empty() &&
        sk.intranode.hyperedge_policies.size() != 1 &&
        sk.intranode.hyperedge_policies.size() != sk.intranode.switches.size()) {
      invalid("switch_hyperedge_strategy needs one entry or one per switch");
    }
  }

  if (doc.contains("internode_sketch")) {
    const json& inter = doc["internode_sketch"];
    if (!inter.is_object()) parse_error("'internode_sketch' must be an object");
    if (inter.contains("strategy")) sk.internode.strategy = as<std::string>(inter["strategy"], "strategy");
    if (sk.internode.strategy != "relay" && sk.internode.strategy != "none") {
      parse_error("unknown internode strategy '" + sk.internode.strategy + "'");
    }
    if (inter.contains("internode_conn")) {
      const json& conn = inter["internode_conn"];
      if (!conn.is_object()) parse_error("'internode_conn' must be an object");
      for (auto it = conn.begin(); it != conn.end(); ++it) {
        const Rank sender = parse_rank_key(it.key(), "internode_conn");
        auto receivers = as<std::vector<Rank>>(it.value(), "internode_conn");
        for (Rank r : receivers) check_rank(r, "internode_conn");
        std::sort(receivers.begin(), receivers.end());
        sk.internode.conn[sender] = std::move(receivers);
      }
    }
    if (inter.contains("beta_split")) {
      const json& split = inter["beta_split"];
      if (!split.is_object()) parse_error("'beta_split' must be an object");
      for (auto it = split.begin(); it != split.end(); ++it) {
        const Rank sender = parse_rank_key(it.key(), "beta_split");
        const double divisor = as<double>(it.value(), "beta_split");
        if (!(divisor > 0.0)) invalid("beta_split divisor must be positive");
        sk.internode.beta_split[sender] = divisor;
      }
    }
    if (inter.contains("chunk_to_relay_map")) {
      auto map = as<std::vector<int>>(inter["chunk_to_relay_map"], "chunk_to_relay_map");
      if (map.size() != 2) parse_error("chunk_to_relay_map must be [r1, r2]");
      if (map[0] < 1 || map[1] < 0 || map[1] >= map[0]) {
        invalid("chunk_to_relay_map needs r1 >= 1 and 0 <= r2 < r1");
      }
      sk.internode.chunk_to_relay = std::make_pair(map[0], map[1]);
    }
  }

  if (doc.contains("symmetry_offsets")) {
    for (const auto& pair : as<std::vector<std::vector<int>>>(doc["symmetry_offsets"], "symmetry_offsets")) {
      if (pair.size() != 2) parse_error("symmetry_offsets entries must be [offset, group]");
      const SymmetryOffset sym{pair[0], pair[1]};
      if (!(sym.offset > 0 && sym.offset < sym.group)) {
        invalid("symmetry offset [" + std::to_string(sym.offset) + ", " + std::to_string(sym.group) +
                "] needs 0 < offset < group");
      }
      sk.symmetry_offsets.push_back(sym);
    }
  }

  if (doc.contains("hyperparameters")) {
    const json& hp = doc["hyperparameters"];
    if (!hp.is_object()) parse_error("'hyperparameters' must be an object");
    if (hp.contains("input_chunkup")) sk.input_chunkup = as<int>(hp["input_chunkup"], "input_chunkup");
    if (hp.contains("input_size")) {
      const json& size = hp["input_size"];
      if (size.is_string()) {
        try {
          sk.input_size = parse_size(size.get<std::string>());
        } catch (const Error& e) {
          fail(e.code(), e.what(), kStage);
        }
      } else {
        sk.input_size = as<double>(size, "input_size");
      }
    }
    if (hp.contains("shortest_path_slack")) {
      sk.shortest_path_slack = as<int>(hp["shortest_path_slack"], "shortest_path_slack");
    }
    if (hp.contains("ordering")) sk.ordering = parse_direction(as<std::string>(hp["ordering"], "ordering"));
    if (hp.contains("contiguity")) sk.contiguity = parse_scope(as<std::string>(hp["contiguity"], "contiguity"));
    if (hp.contains("max_contiguous")) sk.max_contiguous = as<int>(hp["max_contiguous"], "max_contiguous");
  }
  if (sk.input_chunkup < 1) invalid("input_chunkup must be at least 1");
  if (!(sk.input_size > 0.0)) invalid("input_size must be positive");
  if (sk.shortest_path_slack < 0) invalid("shortest_path_slack must be non-negative");
  if (sk.max_contiguous < 1) invalid("max_contiguous must be at least 1");
  return sk;
}

CommSketch load_sketch_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kValidation, "cannot open sketch file '" + path + "'", kStage);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sketch(ss.str());
}

std::string serialize_sketch(const CommSketch& sk) {
  ordered_json doc;
  if (!sk.name.empty()) doc["name"] = sk.name;

  ordered_json intra;
  intra["strategy"] = sk.intranode.strategy;
  intra["switches"] = sk.intranode.switches;
  ordered_json policies = ordered_json::array();
  for (auto p : sk.intranode.hyperedge_policies) policies.push_back(std::string(to_string(p)));
  intra["switch_hyperedge_strategy"] = policies;
  if (!sk.intranode.excluded_links.empty()) {
    ordered_json excluded = ordered_json::array();
    for (auto [a, b] : sk.intranode.excluded_links) excluded.push_back({a, b});
    intra["excluded_links"] = excluded;
  }
  doc["intranode_sketch"] = intra;

  ordered_json inter;
  inter["strategy"] = sk.internode.strategy;
  ordered_json conn = ordered_json::object();
  for (const auto& [sender, receivers] : sk.internode.conn) conn[std::to_string(sender)] = receivers;
  inter["internode_conn"] = conn;
  ordered_json split = ordered_json::object();
  for (const auto& [sender, divisor] : sk.internode.beta_split) split[std::to_string(sender)] = divisor;
  inter["beta_split"] = split;
  if (sk.internode.chunk_to_relay) {
    inter["chunk_to_relay_map"] = {sk.internode.chunk_to_relay->first, sk.internode.chunk_to_relay->second};
  }
  doc["internode_sketch"] = inter;

  ordered_json sym = ordered_json::array();
  for (const auto& s : sk.symmetry_offsets) sym.push_back({s.offset, s.group});
  doc["symmetry_offsets"] = sym;

  ordered_json hp;
  hp["input_chunkup"] = sk.input_chunkup;
  hp["input_size"] = sk.input_size;
  hp["shortest_path_slack"] = sk.shortest_path_slack;
  if (sk.ordering) hp["ordering"] = std::string(to_string(*sk.ordering));
  hp["contiguity"] = std::string(to_string(sk.contiguity));
  hp["max_contiguous"] = sk.max_contiguous;
  doc["hyperparameters"] = hp;
  return doc.dump(2) + "\n";
}

CommSketch identity_sketch(int input_chunkup, Megabytes input_size) {
  CommSketch sk;
  sk.name = "identity";
  sk.input_chunkup = input_chunkup;
  sk.input_size = input_size;
  return sk;
}

LogicalTopology::LogicalTopology(Topology base, std::vector<double> effective_beta,
                                 std::optional<std::pair<int, int>> chunk_to_relay)
    : base_(std::move(base)),
      effective_beta_(std::move(effective_beta)),
      chunk_to_relay_(chunk_to_relay) {
  if (effective_beta_.size() != base_.links().size()) {
    fail(ErrorCode::kInternal, "effective beta table does not match links", kStage);
  }
}

Link LogicalTopology::cost_link(Rank src, Rank dst) const {
  auto idx = base_.find_link(src, dst);
  if (!idx) {
    fail(ErrorCode::kValidation,
         "no logical link (" + std::to_string(src) + "," + std::to_string(dst) + ")", kStage);
  }
  Link l = base_.links()[*idx];
  l.beta = effective_beta_[*idx];
  return l;
}

bool LogicalTopology::relay_allowed(Rank source, Rank link_src, Rank link_dst) const {
  if (!chunk_to_relay_) return true;
  if (base_.node_of(link_src) == base_.node_of(link_dst)) return true;
  const auto [r1, r2] = *chunk_to_relay_;
  const Rank relay = (source / r1) * r1 + r2;
  if (relay >= base_.num_ranks()) return false;
  return base_.local_index(link_src) == base_.local_index(relay);
}

LogicalTopology LogicalTopology::scaled(double factor) const {
  std::vector<Link> links = base_.links();
  for (auto& l : links) {
    l.alpha *= factor;
    l.beta *= factor;
  }
  std::vector<double> beta = effective_beta_;
  for (auto& b : beta) b *= factor;
  return LogicalTopology(Topology(base_.name(), base_.num_ranks(), std::move(links),
                                  base_.switches(), base_.nodes()),
                         std::move(beta), chunk_to_relay_);
}

LogicalTopology apply_sketch(const Topology& topology, const CommSketch& sketch) {
  std::size_t max_node = 0;
  for (const auto& node : topology.nodes()) max_node = std::max(max_node, node.size());
  auto check_local = [&](Rank r, const std::string& what) {
    if (r < 0 || static_cast<std::size_t>(r) >= max_node) {
      invalid("sketch " + what + " references local rank " + std::to_string(r) +
              " but nodes have at most " + std::to_string(max_node) + " ranks");
    }
  };
  auto rank_at = [&](int node, Rank local) -> std::optional<Rank> {
    const auto& members = topology.nodes()[static_cast<std::size_t>(node)];
    if (local < 0 || static_cast<std::size_t>(local) >= members.size()) return std::nullopt;
    return members[static_cast<std::size_t>(local)];
  };

  const bool relay = sketch.internode.strategy == "relay";
  for (const auto& [sender, receivers] : sketch.internode.conn) {
    check_local(sender, "internode_conn");
    for (Rank r : receivers) check_local(r, "internode_conn");
  }
  for (const auto& [sender, divisor] : sketch.internode.beta_split) check_local(sender, "beta_split");
  for (const auto& group : sketch.intranode.switches) {
    for (Rank r : group) check_local(r, "intranode switches");
  }

  // Every connection the sketch asks for must exist physically.
  if (relay) {
    const int num_nodes = static_cast<int>(topology.nodes().size());
    for (int a = 0; a < num_nodes; ++a) {
      for (int b = 0; b < num_nodes; ++b) {
        if (a == b) continue;
        for (const auto& [sender, receivers] : sketch.internode.conn) {
          for (Rank receiver : receivers) {
            auto src = rank_at(a, sender);
            auto dst = rank_at(b, receiver);
            if (src && dst && !topology.has_link(*src, *dst)) {
              invalid("sketch connection " + std::to_string(*src) + " -> " + std::to_string(*dst) +
                      " is not a physical link");
            }
          }
        }
      }
    }
  }

  std::set<std::pair<Rank, Rank>> excluded(sketch.intranode.excluded_links.begin(),
                                           sketch.intranode.excluded_links.end());
  std::vector<Link> links;
  std::vector<double> beta;
  for (const Link& l : topology.links()) {
    const Rank ls = topology.local_index(l.src);
    const Rank ld = topology.local_index(l.dst);
    double eff = l.beta;
    if (topology.node_of(l.src) == topology.node_of(l.dst)) {
      if (excluded.count({ls, ld})) continue;
    } else {
      if (relay) {
        auto it = sketch.internode.conn.find(ls);
        if (it == sketch.internode.conn.end()) continue;
        if (!std::binary_search(it->second.begin(), it->second.end(), ld)) continue;
      }
      auto split = sketch.internode.beta_split.find(ls);
      if (split != sketch.internode.beta_split.end()) eff = l.beta * split->second;
    }
    links.push_back(l);
    beta.push_back(eff);
  }

  // Scratch topology to answer link queries while building switches.
  const Topology pruned(topology.name(), topology.num_ranks(), links, {}, topology.nodes());

  std::vector<SwitchHyperedge> switches;
  if (sketch.intranode.strategy == "switch") {
    for (std::size_t g = 0; g < sketch.intranode.switches.size(); ++g) {
      const auto& group = sketch.intranode.switches[g];
      HyperedgePolicy policy = HyperedgePolicy::kFree;
      if (!sketch.intranode.hyperedge_policies.empty()) {
        policy = sketch.intranode.hyperedge_policies.size() == 1 ? sketch.intranode.hyperedge_policies[0]
                                                                 : sketch.intranode.hyperedge_policies[g];
      }
      for (int node = 0; node < static_cast<int>(topology.nodes().size()); ++node) {
        std::vector<Rank> members;
        for (Rank local : group) {
          if (auto r = rank_at(node, local)) members.push_back(*r);
        }
        for (Rank anchor : members) {
          SwitchHyperedge send{SwitchSide::kSend, anchor, {}, policy};
          SwitchHyperedge recv{SwitchSide::kRecv, anchor, {}, policy};
          for (Rank peer : members) {
            if (peer == anchor) continue;
            if (pruned.has_link(anchor, peer)) send.peers.push_back(peer);
            if (pruned.has_link(peer, anchor)) recv.peers.push_back(peer);
          }
          if (!send.peers.empty()) switches.push_back(std::move(send));
          if (!recv.peers.empty()) switches.push_back(std::move(recv));
        }
      }
    }
  } else {
    for (const auto& sw : topology.switches()) {
      SwitchHyperedge kept = sw;
      kept.peers.clear();
      for (Rank peer : sw.peers) {
        const bool ok = sw.kind == SwitchSide::kSend ? pruned.has_link(sw.anchor, peer)
                                                     : pruned.has_link(peer, sw.anchor);
        if (ok) kept.peers.push_back(peer);
      }
      if (!kept.peers.empty()) switches.push_back(std::move(kept));
    }
  }

  Topology base(topology.name(), topology.num_ranks(), std::move(links), std::move(switches),
                topology.nodes());
  return LogicalTopology(std::move(base), std::move(beta), sketch.internode.chunk_to_relay);
}

LogicalTopology identity_logical(const Topology& topology) {
  std::vector<double> beta;
  for (const auto& l : topology.links()) beta.push_back(l.beta);
  return LogicalTopology(topology, std::move(beta), std::nullopt);
}

Rank rotate_rank(const SymmetryOffset& sym, int num_ranks, Rank r) {
  if (sym.group <= 0) return r;
  const int full = (num_ranks / sym.group) * sym.group;
  if (r < 0 || r >= full) return r;
  const int base = (r / sym.group) * sym.group;
  return base + (r - base + sym.offset) % sym.group;
}

ChunkSend symmetric_image(const SymmetryOffset& sym, const CollectiveSpec& spec, const ChunkSend& send) {
  auto map = [&](Rank r) { return rotate_rank(sym, spec.num_ranks, r); };
  return ChunkSend{spec.map_chunk(send.chunk, map), map(send.src), map(send.dst)};
}

Rank relay_for_chunk(const CommSketch& sketch, Rank precondition_rank) {
  if (!sketch.internode.chunk_to_relay) {
    fail(ErrorCode::kValidation, "sketch has no chunk_to_relay_map", kStage);
  }
  const auto [r1, r2] = *sketch.internode.chunk_to_relay;
  return (precondition_rank / r1) * r1 + r2;
}

}  // namespace sketchsynth
