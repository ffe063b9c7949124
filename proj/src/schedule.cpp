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

#include "sketchsynth/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sketchsynth {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kStage = "schedule";
constexpr const char* kFormat = "sketchsynth-algorithm";

}  // namespace

std::vector<std::vector<int>> data_dependencies(const std::vector<Transfer>& transfers) {
  std::map<std::pair<ChunkId, Rank>, std::vector<int>> into;
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    into[{transfers[i].chunk, transfers[i].dst}].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> deps(transfers.size());
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    auto it = into.find({transfers[i].chunk, transfers[i].src});
    if (it == into.end()) continue;
    for (int j : it->second) {
      if (transfers[static_cast<std::size_t>(j)].phase <= transfers[i].phase) deps[i].push_back(j);
    }
  }
  return deps;
}

std::vector<std::vector<int>> serialization_chains(const std::vector<Transfer>& transfers,
                                                   const std::vector<int>& sequence,
                                                   const Topology& topology) {
  std::vector<std::vector<int>> per_link(topology.links().size());
  std::vector<std::vector<int>> per_side(topology.switches().size());
  for (int i : sequence) {
    const Transfer& t = transfers.at(static_cast<std::size_t>(i));
    const auto link = topology.find_link(t.src, t.dst);
    if (!link) {
      fail(ErrorCode::kValidation,
           "transfer of chunk " + std::to_string(t.chunk) + " uses missing link " + std::to_string(t.src) +
               "->" + std::to_string(t.dst),
           kStage);
    }
    per_link[*link].push_back(i);
    for (std::size_t h : topology.switches_containing(t.src, t.dst)) per_side[h].push_back(i);
  }
  std::vector<std::vector<int>> chains;
  for (auto& c : per_link) {
    if (c.size() > 1) chains.push_back(std::move(c));
  }
  for (auto& c : per_side) {
    if (c.size() > 1) chains.push_back(std::move(c));
  }
  return chains;
}

Micros group_latency(const LogicalTopology& lt, Rank src, Rank dst, Megabytes chunk_size, int group_size) {
  return lt.latency(src, dst, chunk_size * group_size);
}

Timing retime_asap(const std::vector<Transfer>& transfers, const std::vector<int>& group,
                   const std::vector<std::vector<int>>& chains, const LogicalTopology& lt,
                   Megabytes chunk_size) {
  const std::size_t n = transfers.size();
  // Collapse groups into nodes.
  std::map<int, int> node_of_group;
  std::vector<int> node(n);
  std::vector<int> size;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = node_of_group.emplace(group.at(i), static_cast<int>(size.size()));
    if (inserted) size.push_back(0);
    node[i] = it->second;
    ++size[static_cast<std::size_t>(it->second)];
  }
  const std::size_t m = size.size();
  std::vector<Micros> lat(m, 0.0);
  std::vector<int> rep(m, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = node[i];
    const Transfer& t = transfers[i];
    if (rep[static_cast<std::size_t>(v)] >= 0) {
      const Transfer& r = transfers[static_cast<std::size_t>(rep[static_cast<std::size_t>(v)])];
      if (r.src != t.src || r.dst != t.dst) {
        fail(ErrorCode::kInternal, "contiguous group spans two links", kStage);
      }
      continue;
    }
    rep[static_cast<std::size_t>(v)] = static_cast<int>(i);
    lat[static_cast<std::size_t>(v)] =
        group_latency(lt, t.src, t.dst, chunk_size, size[static_cast<std::size_t>(v)]);
  }

  // Edge u -> v: start(v) >= start(u) + lat(u).
  std::vector<std::vector<int>> out(m);
  std::vector<int> indegree(m, 0);
  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    out[static_cast<std::size_t>(a)].push_back(b);
    ++indegree[static_cast<std::size_t>(b)];
  };
  const auto deps = data_dependencies(transfers);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d : deps[i]) {
      if (node[static_cast<std::size_t>(d)] == node[i]) {
        fail(ErrorCode::kInternal, "transfer grouped with its own dependency", kStage);
      }
      add_edge(node[static_cast<std::size_t>(d)], node[i]);
    }
  }
  for (const auto& chain : chains) {
    for (std::size_t k = 1; k < chain.size(); ++k) {
      add_edge(node[static_cast<std::size_t>(chain[k - 1])], node[static_cast<std::size_t>(chain[k])]);
    }
  }

  std::vector<Micros> start(m, 0.0);
  std::vector<int> ready;
  for (std::size_t v = 0; v < m; ++v) {
    if (indegree[v] == 0) ready.push_back(static_cast<int>(v));
  }
  std::size_t done = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++done;
    const Micros finish = start[static_cast<std::size_t>(v)] + lat[static_cast<std::size_t>(v)];
    for (int w : out[static_cast<std::size_t>(v)]) {
      start[static_cast<std::size_t>(w)] = std::max(start[static_cast<std::size_t>(w)], finish);
      if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
    }
  }
  if (done != m) fail(ErrorCode::kInternal, "transfer orders form a cycle", kStage);

  Timing timing;
  timing.send.resize(n);
  timing.arrive.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::size_t>(node[i]);
    timing.send[i] = start[v];
    timing.arrive[i] = start[v] + lat[v];
    timing.total = std::max(timing.total, timing.arrive[i]);
  }
  return timing;
}

std::vector<Transfer> Schedule::transfers() const {
  std::vector<Transfer> out;
  out.reserve(sends.size());
  for (const auto& s : sends) out.push_back(s.transfer());
  return out;
}

std::vector<int> Schedule::groups() const {
  std::vector<int> out;
  out.reserve(sends.size());
  for (const auto& s : sends) out.push_back(s.group);
  return out;
}

void normalize_groups(Schedule& schedule) {
  std::map<int, int> renumber;
  for (auto& s : schedule.sends) {
    auto [it, inserted] = renumber.emplace(s.group, static_cast<int>(renumber.size()));
    s.group = it->second;
  }
}

void retime(Schedule& schedule, const LogicalTopology& lt) {
  const auto transfers = schedule.transfers();
  std::vector<int> sequence(transfers.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) sequence[i] = static_cast<int>(i);
  const Timing t = retime_asap(transfers, schedule.groups(), serialization_chains(transfers, sequence, lt.base()),
                               lt, schedule.chunk_size);
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    schedule.sends[i].send_time = t.send[i];
    schedule.sends[i].arrive_time = t.arrive[i];
  }
  schedule.total_time = t.total;
}

std::string serialize_schedule(const Schedule& s) {
  ordered_json doc;
  doc["format"] = kFormat;
  doc["version"] = 1;
  doc["name"] = s.name;
  doc["topology"] = s.topology;
  doc["collective"] = std::string(to_string(s.kind));
  doc["num_ranks"] = s.num_ranks;
  doc["partition_factor"] = s.partition_factor;
  doc["num_chunks"] = s.num_chunks;
  doc["input_size_mb"] = s.input_size;
  doc["chunk_size_mb"] = s.chunk_size;
  doc["total_time_us"] = s.total_time;
  doc["algorithm_bandwidth_mb_per_us"] = s.algorithm_bandwidth();
  if (s.lower_bound) doc["lower_bound_us"] = *s.lower_bound;
  ordered_json stats = ordered_json::array();
  for (const auto& st : s.stats) {
    ordered_json o;
    o["stage"] = st.stage;
    o["status"] = st.status;
    o["objective"] = st.objective;
    o["bound"] = st.bound;
    o["gap"] = st.gap;
    o["nodes"] = st.nodes;
    o["lp_iterations"] = st.lp_iterations;
    o["binaries"] = st.binaries;
    o["rows"] = st.rows;
    stats.push_back(std::move(o));
  }
  doc["solver"] = std::move(stats);
  ordered_json sends = ordered_json::array();
  for (const auto& x : s.sends) {
    ordered_json o;
    o["chunk"] = x.chunk;
    o["src"] = x.src;
    o["dst"] = x.dst;
    o["send_us"] = x.send_time;
    o["arrive_us"] = x.arrive_time;
    o["group"] = x.group;
    o["reduce"] = x.reduce;
    o["phase"] = x.phase;
    sends.push_back(std::move(o));
  }
  doc["sends"] = std::move(sends);
  return doc.dump(2) + "\n";
}

Schedule parse_schedule(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("algorithm document is not valid JSON: ") + e.what(), kStage);
  }
  try {
    if (doc.value("format", std::string()) != kFormat) {
      fail(ErrorCode::kParse, "not a sketchsynth algorithm document", kStage);
    }
    Schedule s;
    s.name = doc.at("name").get<std::string>();
    s.topology = doc.at("topology").get<std::string>();
    s.kind = parse_collective_kind(doc.at("collective").get<std::string>());
    s.num_ranks = doc.at("num_ranks").get<int>();
    s.partition_factor = doc.at("partition_factor").get<int>();
    s.num_chunks = doc.at("num_chunks").get<int>();
    s.input_size = doc.at("input_size_mb").get<double>();
    s.chunk_size = doc.at("chunk_size_mb").get<double>();
    s.total_time = doc.at("total_time_us").get<double>();
    if (doc.contains("lower_bound_us")) s.lower_bound = doc.at("lower_bound_us").get<double>();
    for (const auto& o : doc.value("solver", json::array())) {
      StageStats st;
      st.stage = o.at("stage").get<std::string>();
      st.status = o.at("status").get<std::string>();
      st.objective = o.at("objective").get<double>();
      st.bound = o.at("bound").get<double>();
      st.gap = o.at("gap").get<double>();
      st.nodes = o.at("nodes").get<long>();
      st.lp_iterations = o.at("lp_iterations").get<long>();
      st.binaries = o.at("binaries").get<int>();
      st.rows = o.at("rows").get<int>();
      s.stats.push_back(std::move(st));
    }
    for (const auto& o : doc.at("sends")) {
      ScheduledSend x;
      x.chunk = o.at("chunk").get<int>();
      x.src = o.at("src").get<int>();
      x.dst = o.at("dst").get<int>();
      x.send_time = o.at("send_us").get<double>();
      x.arrive_time = o.at("arrive_us").get<double>();
      x.group = o.at("group").get<int>();
      x.reduce = o.at("reduce").get<bool>();
      x.phase = o.value("phase", 0);
      if (x.chunk < 0 || x.chunk >= s.num_chunks || x.src < 0 || x.src >= s.num_ranks || x.dst < 0 ||
          x.dst >= s.num_ranks) {
        fail(ErrorCode::kValidation, "send references a chunk or rank out of range", kStage);
      }
      s.sends.push_back(x);
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed algorithm document: ") + e.what(), kStage);
  }
}

Schedule load_schedule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kValidation, "cannot open algorithm file '" + path + "'", kStage);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schedule(ss.str());
}

}  // namespace sketchsynth
