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

#include "sketchsynth/milp/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "sketchsynth/common.hpp"

namespace sketchsynth::milp {
namespace {

constexpr int kTermsPerLine = 6;

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return format_double(v);
}

void write_terms(std::ostringstream& out, const Model& model, const std::vector<Term>& terms) {
  if (terms.empty()) {
    out << " 0";
    return;
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0 && i % kTermsPerLine == 0) out << "\n  ";
    const Term& t = terms[i];
    out << (t.coef < 0 ? " - " : " + ") << number(std::abs(t.coef)) << ' ' << model.variable(t.var).name;
  }
}

// ---- reader ----

enum class Tok { kName, kNumber, kOp, kColon, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double value = 0.0;
  int line = 0;
};

[[noreturn]] void parse_error(int line, const std::string& message) {
  fail(ErrorCode::kParse, "line " + std::to_string(line) + ": " + message, "lp");
}

bool name_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '[' ||
         ch == ']';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
    } else if (ch == '\\') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (ch == ':') {
      out.push_back({Tok::kColon, ":", 0.0, line});
      ++i;
    } else if (ch == '<' || ch == '>' || ch == '=') {
      std::string op(1, ch);
      ++i;
      if (i < text.size() && text[i] == '=') {
        op += '=';
        ++i;
      }
      if (op == "<") op = "<=";
      if (op == ">") op = ">=";
      if (op == "=<") op = "<=";
      if (op == "=>") op = ">=";
      out.push_back({Tok::kOp, op, 0.0, line});
    } else if (ch == '+' || ch == '-') {
      out.push_back({Tok::kOp, std::string(1, ch), 0.0, line});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      std::size_t j = i;
      while (j < text.size()) {
        const char c = text[j];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
          ++j;
        } else if ((c == 'e' || c == 'E') && j + 1 < text.size()) {
          ++j;
          if (text[j] == '+' || text[j] == '-') ++j;
        } else {
          break;
        }
      }
      Token t{Tok::kNumber, std::string(text.substr(i, j - i)), 0.0, line};
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) parse_error(line, "bad number '" + t.text + "'");
      out.push_back(std::move(t));
      i = j;
    } else if (name_char(ch)) {
      std::size_t j = i;
      while (j < text.size() && name_char(text[j])) ++j;
      out.push_back({Tok::kName, std::string(text.substr(i, j - i)), 0.0, line});
      i = j;
    } else {
      parse_error(line, std::string("unexpected character '") + ch + "'");
    }
  }
  out.push_back({Tok::kEnd, "", 0.0, line});
  return out;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kEnd };

class Reader {
 public:
  explicit Reader(std::string_view text) : toks_(tokenize(text)) {}

  Model read() {
    while (peek().kind != Tok::kEnd) {
      auto section = section_keyword();
      if (!section) parse_error(peek().line, "expected a section keyword, got '" + peek().text + "'");
      switch (*section) {
        case Section::kObjective:
          read_objective();
          break;
        case Section::kConstraints:
          while (peek().kind != Tok::kEnd && !at_section()) read_row();
          break;
        case Section::kBounds:
          while (peek().kind != Tok::kEnd && !at_section()) read_bound();
          break;
        case Section::kBinaries:
          while (peek().kind == Tok::kName && !at_section()) binaries_.push_back(next().text);
          break;
        case Section::kEnd:
          if (peek().kind != Tok::kEnd) parse_error(peek().line, "text after End");
          break;
        case Section::kNone:
          break;
      }
    }
    return build();
  }

 private:
  struct RawTerm {
    std::string var;
    double coef;
  };
  struct RawRow {
    std::string name;
    std::vector<RawTerm> terms;
    Sense sense;
    double rhs;
  };
  struct RawBound {
    double lb = 0.0;
    double ub = kInfinity;
    bool lb_set = false;
    bool ub_set = false;
  };

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  // Recognizes a section keyword at the cursor without consuming it.
  std::optional<std::pair<Section, std::size_t>> keyword_at(std::size_t at) const {
    const Token& t = toks_[at];
    if (t.kind != Tok::kName) return std::nullopt;
    // A name followed by ':' is a row label, not a keyword.
    if (toks_[at + 1].kind == Tok::kColon) return std::nullopt;
    const std::string w = lower(t.text);
    if (w == "minimize" || w == "minimise" || w == "min") return std::make_pair(Section::kObjective, 1u);
    if (w == "st" || w == "s.t." || w == "such") {
      if (w == "such" && lower(toks_[at + 1].text) == "that") return std::make_pair(Section::kConstraints, 2u);
      return std::make_pair(Section::kConstraints, 1u);
    }
    if (w == "subject" && lower(toks_[at + 1].text) == "to") return std::make_pair(Section::kConstraints, 2u);
    if (w == "bounds" || w == "bound") return std::make_pair(Section::kBounds, 1u);
    if (w == "binaries" || w == "binary" || w == "bin") return std::make_pair(Section::kBinaries, 1u);
    if (w == "end") return std::make_pair(Section::kEnd, 1u);
    if (w == "maximize" || w == "maximise" || w == "max" || w == "generals" || w == "general" ||
        w == "gen" || w == "semi-continuous" || w == "sos") {
      parse_error(t.line, "unsupported section '" + t.text + "'");
    }
    return std::nullopt;
  }

  bool at_section() const { return keyword_at(pos_).has_value(); }

  std::optional<Section> section_keyword() {
    auto kw = keyword_at(pos_);
    if (!kw) return std::nullopt;
    pos_ += kw->second;
    return kw->first;
  }

  std::optional<std::string> label() {
    if (peek().kind == Tok::kName && peek(1).kind == Tok::kColon) {
      std::string name = next().text;
      next();
      return name;
    }
    return std::nullopt;
  }

  // Linear expression up to a relational operator or section keyword.
  std::vector<RawTerm> expression(double* constant) {
    std::vector<RawTerm> terms;
    while (true) {
      const Token& t = peek();
      if (t.kind == Tok::kEnd || (t.kind == Tok::kOp && t.text != "+" && t.text != "-") || at_section()) break;
      if (t.kind == Tok::kName && peek(1).kind == Tok::kColon) break;
      double sign = 1.0;
      while (peek().kind == Tok::kOp && (peek().text == "+" || peek().text == "-")) {
        if (next().text == "-") sign = -sign;
      }
      double coef = 1.0;
      bool have_number = false;
      if (peek().kind == Tok::kNumber) {
        coef = next().value;
        have_number = true;
      }
      if (peek().kind == Tok::kName && !at_section() && peek(1).kind != Tok::kColon) {
        terms.push_back({next().text, sign * coef});
      } else if (have_number) {
        if (constant == nullptr) parse_error(peek().line, "constant not allowed here");
        *constant += sign * coef;
      } else {
        parse_error(peek().line, "expected a term, got '" + peek().text + "'");
      }
    }
    return terms;
  }

  double signed_number() {
    double sign = 1.0;
    while (peek().kind == Tok::kOp && (peek().text == "+" || peek().text == "-")) {
      if (next().text == "-") sign = -sign;
    }
    const Token& t = next();
    if (t.kind == Tok::kNumber) return sign * t.value;
    if (t.kind == Tok::kName) {
      const std::string w = lower(t.text);
      if (w == "inf" || w == "infinity") return sign * kInfinity;
    }
    parse_error(t.line, "expected a number, got '" + t.text + "'");
  }

  Sense relation() {
    const Token& t = next();
    if (t.kind != Tok::kOp) parse_error(t.line, "expected a relational operator");
    if (t.text == "<=") return Sense::kLe;
    if (t.text == ">=") return Sense::kGe;
    if (t.text == "=") return Sense::kEq;
    parse_error(t.line, "expected a relational operator, got '" + t.text + "'");
  }

  void read_objective() {
    label();
    objective_ = expression(&objective_constant_);
  }

  void read_row() {
    const int line = peek().line;
    auto name = label();
    if (!name) parse_error(line, "constraint rows must be named");
    RawRow row;
    row.name = *name;
    double constant = 0.0;
    row.terms = expression(&constant);
    row.sense = relation();
    row.rhs = signed_number() - constant;
    rows_.push_back(std::move(row));
  }

  RawBound& bound_for(const std::string& var) {
    auto it = bound_index_.find(var);
    if (it == bound_index_.end()) {
      bound_index_.emplace(var, bounds_.size());
      bounds_.emplace_back(var, RawBound{});
      return bounds_.back().second;
    }
    return bounds_[it->second].second;
  }

  static bool is_inf_name(const Token& t) {
    if (t.kind != Tok::kName) return false;
    const std::string w = lower(t.text);
    return w == "inf" || w == "infinity";
  }

  void read_bound() {
    const int line = peek().line;
    const bool leading_value = peek().kind == Tok::kNumber || peek().kind == Tok::kOp || is_inf_name(peek());
    if (leading_value) {
      // value <= x [<= value]
      const double lo = signed_number();
      const Sense s1 = relation();
      if (peek().kind != Tok::kName) parse_error(line, "expected a variable in bound");
      const std::string var = next().text;
      RawBound& b = bound_for(var);
      if (s1 == Sense::kLe) {
        b.lb = lo, b.lb_set = true;
      } else if (s1 == Sense::kGe) {
        b.ub = lo, b.ub_set = true;
      } else {
        b.lb = b.ub = lo, b.lb_set = b.ub_set = true;
      }
      if (peek().kind == Tok::kOp && peek().text != "+" && peek().text != "-") {
        const Sense s2 = relation();
        const double hi = signed_number();
        if (s2 == Sense::kLe) {
          b.ub = hi, b.ub_set = true;
        } else if (s2 == Sense::kGe) {
          b.lb = hi, b.lb_set = true;
        } else {
          parse_error(line, "bad double-sided bound");
        }
      }
      return;
    }
    if (peek().kind != Tok::kName) parse_error(line, "expected a bound");
    const std::string var = next().text;
    RawBound& b = bound_for(var);
    if (peek().kind == Tok::kName && lower(peek().text) == "free") {
      next();
      b.lb = -kInfinity, b.ub = kInfinity, b.lb_set = b.ub_set = true;
      return;
    }
    const Sense s = relation();
    const double v = signed_number();
    if (s == Sense::kLe) {
      b.ub = v, b.ub_set = true;
    } else if (s == Sense::kGe) {
      b.lb = v, b.lb_set = true;
    } else {
      b.lb = b.ub = v, b.lb_set = b.ub_set = true;
    }
  }

  Model build() {
    // Variable order: Bounds section first (export lists every variable in
    // declaration order), then first appearance elsewhere.
    std::vector<std::string> order;
    std::map<std::string, int> index;
    auto touch = [&](const std::string& name) {
      if (index.emplace(name, static_cast<int>(order.size())).second) order.push_back(name);
    };
    for (const auto& [name, b] : bounds_) touch(name);
    for (const auto& t : objective_) touch(t.var);
    for (const auto& r : rows_) {
      for (const auto& t : r.terms) touch(t.var);
    }
    for (const auto& name : binaries_) touch(name);

    std::map<std::string, bool> is_binary;
    for (const auto& name : binaries_) is_binary[name] = true;

    Model model;
    for (const auto& name : order) {
      const bool bin = is_binary.count(name) > 0;
      RawBound b;
      if (auto it = bound_index_.find(name); it != bound_index_.end()) b = bounds_[it->second].second;
      double lb = b.lb_set ? b.lb : 0.0;
      double ub = b.ub_set ? b.ub : (bin ? 1.0 : kInfinity);
      model.add_variable(name, bin ? VarKind::kBinary : VarKind::kContinuous, lb, ub);
    }
    auto convert = [&](const std::vector<RawTerm>& raw) {
      std::vector<Term> terms;
      for (const auto& t : raw) terms.push_back(Term{index.at(t.var), t.coef});
      return terms;
    };
    model.set_objective(convert(objective_), objective_constant_);
    for (const auto& r : rows_) model.add_constraint(r.name, convert(r.terms), r.sense, r.rhs);
    return model;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<RawTerm> objective_;
  double objective_constant_ = 0.0;
  std::vector<RawRow> rows_;
  std::vector<std::pair<std::string, RawBound>> bounds_;
  std::map<std::string, std::size_t> bound_index_;
  std::vector<std::string> binaries_;
};

}  // namespace

std::string export_lp(const Model& model) {
  model.validate();
  const Model lin = model.linearized();
  std::ostringstream out;
  out << "\\ sketchsynth MILP: " << lin.num_variables() << " variables, " << lin.constraints().size()
      << " rows, " << model.indicators().size() << " indicators linearized\n";
  out << "Minimize\n obj:";
  write_terms(out, lin, lin.objective());
  if (lin.objective_constant() != 0.0) {
    out << (lin.objective_constant() < 0 ? " - " : " + ") << number(std::abs(lin.objective_constant()));
  }
  out << "\nSubject To\n";
  for (const auto& c : lin.constraints()) {
    out << ' ' << c.name << ':';
    write_terms(out, lin, c.terms);
    out << ' ' << to_string(c.sense) << ' ' << number(c.rhs) << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : lin.variables()) {
    if (v.lb == -kInfinity && v.ub == kInfinity) {
      out << ' ' << v.name << " free\n";
    } else if (v.lb == v.ub) {
      out << ' ' << v.name << " = " << number(v.lb) << '\n';
    } else {
      out << ' ' << number(v.lb) << " <= " << v.name << " <= " << number(v.ub) << '\n';
    }
  }
  bool any_binary = false;
  int on_line = 0;
  for (const auto& v : lin.variables()) {
    if (v.kind != VarKind::kBinary) continue;
    if (!any_binary) out << "Binaries\n";
    any_binary = true;
    out << ' ' << v.name;
    if (++on_line == 8) {
      out << '\n';
      on_line = 0;
    }
  }
  if (on_line != 0) out << '\n';
  out << "End\n";
  return out.str();
}

Model parse_lp(std::string_view text) {
  Reader reader(text);
  return reader.read();
}

}  // namespace sketchsynth::milp
