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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sketchsynth/contiguity.hpp"
#include "sketchsynth/lowering.hpp"
#include "sketchsynth/milp/lp_format.hpp"
#include "sketchsynth/ordering.hpp"
#include "sketchsynth/pipeline.hpp"
#include "sketchsynth/simulator.hpp"

namespace sketchsynth::cli {
namespace {

struct Common {
  std::string topology;
  std::string sketch;
  std::string collective = "allgather";
  std::optional<int> chunks;
  std::string size;
  std::string policy;
  std::string direction;
  double time_limit = 60.0;
  long node_limit = 200'000;
};

void add_topology(CLI::App* cmd, Common& c) {
  cmd->add_option("--topology", c.topology, "Physical topology JSON")->required();
  cmd->add_option("--sketch", c.sketch, "Communication sketch JSON (default: identity sketch)");
}

void add_synthesis(CLI::App* cmd, Common& c) {
  cmd->add_option("--collective", c.collective, "allgather, alltoall, reducescatter or allreduce")
      ->capture_default_str();
  cmd->add_option("--chunks", c.chunks, "Chunks per rank buffer (default: the sketch's input_chunkup)");
  cmd->add_option("--size", c.size, "Input buffer size, e.g. 1M or 32KB (default: the sketch's input_size)");
  cmd->add_option("--hyperedge-policy", c.policy, "uc-max, uc-min or free for every switch");
  cmd->add_option("--direction", c.direction, "Ordering direction: forward or reverse (default: by topology)");
  cmd->add_option("--time-limit", c.time_limit, "Seconds per solver stage")->capture_default_str();
  cmd->add_option("--node-limit", c.node_limit, "Branch-and-bound nodes per solver stage")->capture_default_str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) fail(ErrorCode::kValidation, "cannot write " + path, "output");
}

Topology topology_of(const Common& c) { return load_topology_file(c.topology); }

CommSketch sketch_of(const Common& c) { return c.sketch.empty() ? identity_sketch() : load_sketch_file(c.sketch); }

SynthesisOptions options_of(const Common& c) {
  SynthesisOptions o;
  o.kind = parse_collective_kind(c.collective);
  o.chunks = c.chunks;
  if (!c.size.empty()) o.size = parse_size(c.size);
  if (!c.policy.empty()) o.policy = parse_hyperedge_policy(c.policy);
  if (c.direction == "forward") {
    o.direction = OrderingDirection::kForward;
  } else if (c.direction == "reverse") {
    o.direction = OrderingDirection::kReverse;
  } else if (!c.direction.empty()) {
    fail(ErrorCode::kValidation, "unknown direction '" + c.direction + "'", "config");
  }
  if (!(c.time_limit > 0.0)) fail(ErrorCode::kValidation, "--time-limit must be positive", "config");
  o.solver.time_limit_seconds = c.time_limit;
  o.solver.node_limit = c.node_limit;
  return o;
}

LogicalTopology logical_of(const Common& c, const Topology& t) {
  return c.sketch.empty() ? identity_logical(t) : apply_sketch(t, load_sketch_file(c.sketch));
}

bool hit_limit(const Schedule& s) {
  return std::any_of(s.stats.begin(), s.stats.end(), [](const StageStats& st) { return st.status == "feasible-incumbent"; });
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

void print_summary(const Schedule& s, std::ostream& out) {
  out << to_string(s.kind) << " on " << s.topology << ": " << s.num_ranks << " ranks, " << s.partition_factor
      << " chunks per rank, input " << format_size(s.input_size) << "\n";
  for (const StageStats& st : s.stats) {
    out << "  " << st.stage << ": " << st.status << ", objective " << fmt(st.objective) << ", gap " << fmt(st.gap)
        << ", binaries " << st.binaries << ", rows " << st.rows << ", nodes " << st.nodes << "\n";
  }
  if (s.lower_bound) out << "lower bound " << fmt(*s.lower_bound) << " us\n";
  out << "total time " << fmt(s.total_time) << " us, algbw " << fmt(s.algorithm_bandwidth()) << " MB/us\n";
}

// Schedule replayed at a different input size; structure and order are kept.
Schedule rescaled(Schedule s, const LogicalTopology& lt, Megabytes size) {
  const CollectiveSpec spec = build_collective(s.kind, s.num_ranks, s.partition_factor);
  s.input_size = size;
  s.chunk_size = chunk_size(spec, size);
  retime(s, lt);
  return s;
}

int cmd_solve(const Common& c, const std::string& output, const std::string& ef, int instances, std::ostream& out,
              std::ostream& err) {
  const Topology t = topology_of(c);
  SynthesisOptions o = options_of(c);
  std::vector<std::pair<std::string, std::string>> partial;
  o.on_stage = [&](const std::string& stage, const std::string& json) { partial.emplace_back(stage, json); };
  SynthesisResult r;
  try {
    r = synthesize(t, sketch_of(c), o);
  } catch (const Error&) {
    for (const auto& [stage, json] : partial) {
      const std::string path = output + "." + stage + ".partial.json";
      write_file(path, json);
      err << "kept " << stage << " result in " << path << "\n";
    }
    throw;
  }
  write_file(output, serialize_schedule(r.schedule));
  print_summary(r.schedule, out);
  out << "wrote " << output << "\n";
  if (!ef.empty()) {
    write_file(ef, serialize_ef(lower(r.schedule, r.logical, instances)));
    out << "wrote " << ef << "\n";
  }
  if (hit_limit(r.schedule)) {
    err << "solver limit reached; the best schedule found was written\n";
    return kTimeout;
  }
  return kOk;
}

int cmd_simulate(const Common& c, const std::string& algorithm, const std::string& report, std::ostream& out) {
  const Topology t = topology_of(c);
  const LogicalTopology lt = logical_of(c, t);
  Schedule s = load_schedule_file(algorithm);
  if (!c.size.empty()) s = rescaled(std::move(s), lt, parse_size(c.size));
  const CollectiveSpec spec = build_collective(s.kind, s.num_ranks, s.partition_factor);
  const SimReport rep = simulate(s, lt, spec);
  const PostconditionResult pc = check_postcondition(rep, spec);
  if (!report.empty()) write_file(report, serialize_report(rep));
  out << "total time " << fmt(rep.total_time) << " us, algbw " << fmt(rep.algorithm_bandwidth()) << " MB/us\n";
  for (const auto& v : rep.violations) out << "violation: " << v << "\n";
  for (const auto& f : pc.failures) out << "postcondition: " << f << "\n";
  out << "postcondition " << (pc.pass ? "pass" : "fail") << "\n";
  return rep.ok() && pc.pass ? kOk : kInvalid;
}

int cmd_lower(const Common& c, const std::string& algorithm, const std::string& output, int instances,
              std::ostream& out) {
  const Topology t = topology_of(c);
  const LogicalTopology lt = logical_of(c, t);
  const Schedule s = load_schedule_file(algorithm);
  const EFProgram p = lower(s, lt, instances);
  const SimReport rep = interpret_ef(p, lt);
  const PostconditionResult pc = check_postcondition(rep, build_collective(s.kind, s.num_ranks, s.partition_factor));
  write_file(output, serialize_ef(p));
  std::size_t tbs = 0;
  for (const auto& g : p.gpus) tbs += g.threadblocks.size();
  out << "wrote " << output << ": " << p.gpus.size() << " gpus, " << tbs << " threadblocks, " << instances
      << " instance(s)\n";
  out << "interpreted time " << fmt(rep.total_time) << " us, schedule time " << fmt(s.total_time) << " us\n";
  for (const auto& v : rep.violations) out << "violation: " << v << "\n";
  for (const auto& f : pc.failures) out << "postcondition: " << f << "\n";
  return rep.ok() && pc.pass ? kOk : kInvalid;
}

int cmd_compare(const Common& c, const std::vector<std::string>& sizes_text, const std::vector<std::string>& algorithms,
                std::string baseline_name, const std::string& output, std::ostream& out, std::ostream& err) {
  std::vector<Megabytes> sizes;
  for (const auto& s : sizes_text) {
    if (!s.empty()) sizes.push_back(parse_size(s));
  }
  if (sizes.empty()) fail(ErrorCode::kValidation, "the size sweep is empty", "compare");
  for (Megabytes s : sizes) {
    if (!(s > 0.0)) fail(ErrorCode::kValidation, "sweep sizes must be positive", "compare");
  }
  std::sort(sizes.begin(), sizes.end());
  const Topology t = topology_of(c);
  const CollectiveKind kind = parse_collective_kind(c.collective);
  if (baseline_name.empty()) {
    baseline_name = kind == CollectiveKind::kAlltoall    ? "allpairs-alltoall"
                    : kind == CollectiveKind::kAllreduce ? "ring-allreduce"
                                                         : "ring-allgather";
  }
  const Baseline baseline = parse_baseline(baseline_name);

  std::vector<std::pair<std::string, Schedule>> loaded;
  for (const auto& path : algorithms) {
    Schedule s = load_schedule_file(path);
    if (s.kind != kind) fail(ErrorCode::kValidation, path + " is not a " + std::string(to_string(kind)) + " schedule", "compare");
    loaded.emplace_back(std::filesystem::path(path).stem().string(), std::move(s));
  }

  std::ostringstream csv;
  csv << "size,algorithm,time_us,algbw_mb_per_us,speedup\n";
  for (Megabytes size : sizes) {
    Common at = c;
    at.size = format_double(size);
    std::vector<std::pair<std::string, Schedule>> rows;
    LogicalTopology lt;
    if (loaded.empty()) {
      const SynthesisResult r = synthesize(t, sketch_of(c), options_of(at));
      lt = r.logical;
      rows.emplace_back("synthesized", r.schedule);
    } else {
      lt = logical_of(c, t);
      for (const auto& [name, s] : loaded) rows.emplace_back(name, rescaled(s, lt, size));
    }
    const CollectiveSpec spec = build_collective(kind, t.num_ranks(), rows.front().second.partition_factor);
    std::optional<Micros> base_time;
    try {
      // The baseline runs on the same logical topology when it embeds there.
      LogicalTopology blt = lt;
      Schedule b;
      try {
        b = baseline_schedule(baseline, blt, spec, size);
      } catch (const Error&) {
        blt = identity_logical(t);
        b = baseline_schedule(baseline, blt, spec, size);
      }
      const SimReport rep = simulate(b, blt, spec);
      base_time = rep.total_time;
      csv << format_size(size) << "," << to_string(baseline) << "," << format_double(rep.total_time) << ","
          << format_double(rep.algorithm_bandwidth()) << ",1\n";
    } catch (const Error& e) {
      err << "size " << format_size(size) << ": baseline " << to_string(baseline) << " unavailable: " << e.what() << "\n";
    }
    for (const auto& [name, s] : rows) {
      const SimReport rep = simulate(s, lt, spec);
      if (!rep.ok() || !check_postcondition(rep, spec).pass) {
        fail(ErrorCode::kValidation, name + " fails simulation at size " + format_size(size), "compare");
      }
      csv << format_size(size) << "," << name << "," << format_double(rep.total_time) << ","
          << format_double(rep.algorithm_bandwidth()) << ","
          << (base_time ? format_double(*base_time / rep.total_time) : std::string("n/a")) << "\n";
    }
  }
  if (output.empty()) {
    out << csv.str();
  } else {
    write_file(output, csv.str());
    out << "wrote " << output << "\n";
  }
  return kOk;
}

int cmd_export_lp(const Common& c, const std::string& stage, const std::string& output, std::ostream& out) {
  const Topology t = topology_of(c);
  const SynthesisOptions o = options_of(c);
  const CommSketch sk = effective_sketch(sketch_of(c), o);
  const LogicalTopology lt = apply_sketch(t, sk);
  CollectiveSpec spec = build_collective(o.kind, t.num_ranks(), sk.input_chunkup);
  const Megabytes chunk = chunk_size(spec, sk.input_size);
  if (o.kind == CollectiveKind::kReduceScatter || o.kind == CollectiveKind::kAllreduce) {
    spec = build_collective(CollectiveKind::kAllgather, t.num_ranks(), sk.input_chunkup);
  }
  const RoutingModel rm = encode_routing(lt, spec, sk, chunk);
  std::string text;
  if (stage == "routing") {
    text = milp::export_lp(rm.model);
  } else if (stage == "contiguity") {
    const RoutingSolution r = solve_routing(rm, o.solver);
    const Ordering ord = order_chunks(r, lt, sk.ordering.value_or(default_direction(lt.base())));
    text = milp::export_lp(encode_contiguity(r.transfers(), ord, lt, chunk, {sk.contiguity, sk.max_contiguous}).model);
  } else {
    fail(ErrorCode::kValidation, "unknown stage '" + stage + "' (routing or contiguity)", "config");
  }
  write_file(output, text);
  out << "wrote " << output << "\n";
  return kOk;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
      return kInvalid;
    case ErrorCode::kInfeasible:
      return kInfeasible;
    case ErrorCode::kSolverTimeout:
      return kNoIncumbent;
    case ErrorCode::kSolverFailure:
    case ErrorCode::kInternal:
      return kFailure;
  }
  return kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collective algorithm synthesis from communication sketches"};
  app.require_subcommand(1);
  Common c;
  std::string output, ef, algorithm, report, baseline, stage = "routing";
  std::vector<std::string> sizes, algorithms;
  int instances = 1;

  auto* solve = app.add_subcommand("solve", "Synthesize a schedule and write its algorithm JSON");
  add_topology(solve, c);
  add_synthesis(solve, c);
  solve->add_option("--output", output, "Algorithm JSON path")->required();
  solve->add_option("--ef", ef, "Also lower to an EF XML program at this path");
  solve->add_option("--instances", instances, "Instances for --ef")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Replay an algorithm JSON and check its postcondition");
  add_topology(sim, c);
  sim->add_option("--algorithm", algorithm, "Algorithm JSON")->required();
  sim->add_option("--size", c.size, "Replay at this input size instead of the recorded one");
  sim->add_option("--report", report, "Write the simulation report JSON here");

  auto* low = app.add_subcommand("lower", "Lower an algorithm JSON to an EF XML program and verify it");
  add_topology(low, c);
  low->add_option("--algorithm", algorithm, "Algorithm JSON")->required();
  low->add_option("--instances", instances, "Subchunks per chunk; threadblocks are repeated this many times")
      ->capture_default_str();
  low->add_option("--output", output, "EF XML path")->required();

  auto* cmp = app.add_subcommand("compare", "Time algorithms against a baseline over a size sweep (CSV)");
  add_topology(cmp, c);
  add_synthesis(cmp, c);
  cmp->add_option("--sizes", sizes, "Comma-separated input sizes")->delimiter(',');
  cmp->add_option("--algorithm", algorithms, "Algorithm JSON to compare (repeatable; default: synthesize per size)");
  cmp->add_option("--baseline", baseline, "ring-allgather, allpairs-alltoall or ring-allreduce");
  cmp->add_option("--output", output, "CSV path (default: stdout)");

  auto* lp = app.add_subcommand("export-lp", "Write a stage's MILP in LP format");
  add_topology(lp, c);
  add_synthesis(lp, c);
  lp->add_option("--stage", stage, "routing or contiguity")->capture_default_str();
  lp->add_option("--output", output, "LP path")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInvalid;
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (instances < 1) fail(ErrorCode::kValidation, "--instances must be at least 1", "config");
    if (command == "solve") return cmd_solve(c, output, ef, instances, out, err);
    if (command == "simulate") return cmd_simulate(c, algorithm, report, out);
    if (command == "lower") return cmd_lower(c, algorithm, output, instances, out);
    if (command == "compare") return cmd_compare(c, sizes, algorithms, baseline, output, out, err);
    return cmd_export_lp(c, stage, output, out);
  } catch (const Error& e) {
    std::string_view what = e.what();
    if (!e.stage().empty() && what.starts_with(e.stage() + ": ")) what.remove_prefix(e.stage().size() + 2);
    err << command << " failed in stage " << (e.stage().empty() ? "unknown" : e.stage()) << " (" << to_string(e.code())
        << "): " << what << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << command << " failed: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace sketchsynth::cli
