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

// Writer and reader for the XML form of an EF program. The writer's output
// is canonical: parse followed by serialize reproduces it byte for byte.

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <utility>

#include "sketchsynth/lowering.hpp"

namespace sketchsynth {
namespace {

constexpr const char* kStage = "ef";

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

char buffer_letter(BufferKind b) {
  return b == BufferKind::kInput ? 'i' : b == BufferKind::kOutput ? 'o' : 's';
}

std::string slots(const std::vector<BufferSlot>& v) {
  std::string out;
  for (const BufferSlot& b : v) {
    if (!out.empty()) out += ' ';
    out += buffer_letter(b.buffer);
    out += ':' + std::to_string(b.index);
  }
  return out;
}

std::string deps(const std::vector<EFDep>& v) {
  std::string out;
  for (const EFDep& d : v) {
    if (!out.empty()) out += ' ';
    out += std::to_string(d.tb) + ':' + std::to_string(d.step);
  }
  return out;
}

// Minimal element tree: no text content, no namespaces.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<Node> children;

  const std::string& attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return v;
    }
    fail(ErrorCode::kParse, "<" + name + "> lacks attribute " + key, kStage);
  }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : s_(text) {}

  Node document() {
    skip_misc();
    Node root = element();
    skip_misc();
    if (pos_ != s_.size()) error("trailing content");
    return root;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::kParse, what + " at offset " + std::to_string(pos_), kStage);
  }
  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  void skip_until(std::string_view end) {
    const auto at = s_.find(end, pos_);
    if (at == std::string_view::npos) error("unterminated markup");
    pos_ = at + end.size();
  }
  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts("<?")) {
        skip_until("?>");
      } else if (starts("<!--")) {
        skip_until("-->");
      } else {
        return;
      }
    }
  }
  std::string name() {
    const std::size_t from = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) ++pos_;
    if (pos_ == from) error("expected a name");
    return std::string(s_.substr(from, pos_ - from));
  }
  std::string value() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) error("expected a quoted value");
    const char q = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != q) {
      if (s_[pos_] == '&') {
        const auto semi = s_.find(';', pos_);
        if (semi == std::string_view::npos) error("unterminated entity");
        const std::string_view ent = s_.substr(pos_ + 1, semi - pos_ - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else error("unknown entity &" + std::string(ent) + ";");
        pos_ = semi + 1;
      } else {
        out += s_[pos_++];
      }
    }
    if (pos_ >= s_.size()) error("unterminated value");
    ++pos_;
    return out;
  }
  Node element() {
    if (!starts("<")) error("expected an element");
    ++pos_;
    Node node;
    node.name = name();
    while (true) {
      skip_ws();
      if (starts("/>")) {
        pos_ += 2;
        return node;
      }
      if (starts(">")) {
        ++pos_;
        break;
      }
      std::string key = name();
      skip_ws();
      if (!starts("=")) error("expected '=' after " + key);
      ++pos_;
      skip_ws();
      node.attrs.emplace_back(std::move(key), value());
    }
    while (true) {
      skip_misc();
      if (pos_ >= s_.size()) error("unterminated <" + node.name + ">");
      if (starts("</")) {
        pos_ += 2;
        if (name() != node.name) error("mismatched closing tag for <" + node.name + ">");
        skip_ws();
        if (!starts(">")) error("expected '>'");
        ++pos_;
        return node;
      }
      if (!starts("<")) error("unexpected text inside <" + node.name + ">");
      node.children.push_back(element());
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

int to_int(const std::string& v, const std::string& what) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(ErrorCode::kParse, what + " is not an integer: " + v, kStage);
  return out;
}

double to_double(const std::string& v, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) fail(ErrorCode::kParse, what + " is not a number: " + v, kStage);
  return out;
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < v.size()) {
    const auto j = v.find(' ', i);
    const auto end = j == std::string::npos ? v.size() : j;
    if (end > i) out.push_back(v.substr(i, end - i));
    i = end + 1;
  }
  return out;
}

std::vector<BufferSlot> parse_slots(const std::string& v) {
  std::vector<BufferSlot> out;
  for (const std::string& tok : split(v)) {
    if (tok.size() < 3 || tok[1] != ':') fail(ErrorCode::kParse, "bad buffer operand " + tok, kStage);
    BufferSlot b;
    switch (tok[0]) {
      case 'i':
        b.buffer = BufferKind::kInput;
        break;
      case 'o':
        b.buffer = BufferKind::kOutput;
        break;
      case 's':
        b.buffer = BufferKind::kScratch;
        break;
      default:
        fail(ErrorCode::kParse, "unknown buffer in operand " + tok, kStage);
    }
    b.index = to_int(tok.substr(2), "buffer index");
    out.push_back(b);
  }
  return out;
}

std::vector<EFDep> parse_deps(const std::string& v) {
  std::vector<EFDep> out;
  for (const std::string& tok : split(v)) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) fail(ErrorCode::kParse, "bad dependency " + tok, kStage);
    out.push_back({to_int(tok.substr(0, colon), "dependency tb"), to_int(tok.substr(colon + 1), "dependency step")});
  }
  return out;
}

EFOp parse_op(const std::string& v) {
  for (EFOp op : {EFOp::kSend, EFOp::kRecv, EFOp::kRecvReduce, EFOp::kCopy}) {
    if (to_string(op) == v) return op;
  }
  fail(ErrorCode::kParse, "unknown step type " + v, kStage);
}

void expect_children(const Node& n, const std::string& child) {
  for (const Node& c : n.children) {
    if (c.name != child) fail(ErrorCode::kParse, "<" + n.name + "> may only contain <" + child + ">", kStage);
  }
}

}  // namespace

std::string serialize_ef(const EFProgram& prog) {
  std::string out;
  out += "<algo name=\"" + escape(prog.name) + "\" coll=\"" + std::string(to_string(prog.kind)) + "\" ngpus=\"" +
         std::to_string(prog.num_ranks) + "\" nchunksperloop=\"" + std::to_string(prog.partition_factor) +
         "\" instances=\"" + std::to_string(prog.instances) + "\" subchunk=\"" + format_double(prog.subchunk_size) +
         "\">\n";
  for (const EFGpu& gpu : prog.gpus) {
    out += "  <gpu id=\"" + std::to_string(gpu.id) + "\" i_chunks=\"" + std::to_string(gpu.input_chunks) +
           "\" o_chunks=\"" + std::to_string(gpu.output_chunks) + "\" s_chunks=\"" + std::to_string(gpu.scratch_chunks) +
           "\">\n";
    for (const EFThreadblock& tb : gpu.threadblocks) {
      out += "    <tb id=\"" + std::to_string(tb.id) + "\" send=\"" + std::to_string(tb.send_peer) + "\" recv=\"" +
             std::to_string(tb.recv_peer) + "\">\n";
      for (std::size_t s = 0; s < tb.steps.size(); ++s) {
        const EFStep& st = tb.steps[s];
        out += "      <step s=\"" + std::to_string(s) + "\" type=\"" + std::string(to_string(st.op)) + "\" src=\"" +
               slots(st.src) + "\" dst=\"" + slots(st.dst) + "\" cnt=\"" + std::to_string(st.count()) + "\" seq=\"" +
               std::to_string(st.seq) + "\" deps=\"" + deps(st.deps) + "\"/>\n";
      }
      out += "    </tb>\n";
    }
    out += "  </gpu>\n";
  }
  out += "</algo>\n";
  return out;
}

EFProgram parse_ef(std::string_view text) {
  const Node root = Reader(text).document();
  if (root.name != "algo") fail(ErrorCode::kParse, "root element must be <algo>", kStage);
  expect_children(root, "gpu");
  EFProgram prog;
  prog.name = root.attr("name");
  try {
    prog.kind = parse_collective_kind(root.attr("coll"));
  } catch (const Error& e) {
    fail(ErrorCode::kParse, e.what(), kStage);
  }
  prog.num_ranks = to_int(root.attr("ngpus"), "ngpus");
  prog.partition_factor = to_int(root.attr("nchunksperloop"), "nchunksperloop");
  prog.instances = to_int(root.attr("instances"), "instances");
  prog.subchunk_size = to_double(root.attr("subchunk"), "subchunk");
  for (const Node& g : root.children) {
    expect_children(g, "tb");
    EFGpu gpu;
    gpu.id = to_int(g.attr("id"), "gpu id");
    gpu.input_chunks = to_int(g.attr("i_chunks"), "i_chunks");
    gpu.output_chunks = to_int(g.attr("o_chunks"), "o_chunks");
    gpu.scratch_chunks = to_int(g.attr("s_chunks"), "s_chunks");
    for (const Node& t : g.children) {
      expect_children(t, "step");
      EFThreadblock tb;
      tb.id = to_int(t.attr("id"), "tb id");
      tb.send_peer = to_int(t.attr("send"), "send peer");
      tb.recv_peer = to_int(t.attr("recv"), "recv peer");
      for (const Node& s : t.children) {
        EFStep st;
        if (to_int(s.attr("s"), "step index") != static_cast<int>(tb.steps.size())) {
          fail(ErrorCode::kParse, "steps must be numbered from 0 in order", kStage);
        }
        st.op = parse_op(s.attr("type"));
        st.src = parse_slots(s.attr("src"));
        st.dst = parse_slots(s.attr("dst"));
        if (to_int(s.attr("cnt"), "cnt") != st.count()) fail(ErrorCode::kParse, "cnt disagrees with operand count", kStage);
        st.seq = to_int(s.attr("seq"), "seq");
        st.deps = parse_deps(s.attr("deps"));
        tb.steps.push_back(std::move(st));
      }
      gpu.threadblocks.push_back(std::move(tb));
    }
    prog.gpus.push_back(std::move(gpu));
  }
  return prog;
}

}  // namespace sketchsynth
