#include "hmdp/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "hmdp/errors.hpp"
#include "hmdp/rational.hpp"

namespace hmdp {
namespace {

struct Token {
  enum Kind { kWord, kNumber, kSymbol, kEnd } kind{kEnd};
  std::string text;
  int col{0};
};

// Splits one physical line into tokens; '#' ends the line.
std::vector<Token> lex_line(const std::string& line, int line_no) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    int col = static_cast<int>(i) + 1;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < line.size() &&
         std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      size_t j = i;
      bool dot = false;
      while (j < line.size() &&
             (std::isdigit(static_cast<unsigned char>(line[j])) ||
              (line[j] == '.' && !dot))) {
        if (line[j] == '.') dot = true;
        ++j;
      }
      // "a/b" only when the slash is followed by a digit, so "1/2" is one
      // number token while a stray slash still surfaces as a symbol.
      if (!dot && j < line.size() && line[j] == '/' && j + 1 < line.size() &&
          std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
        ++j;
        while (j < line.size() &&
               std::isdigit(static_cast<unsigned char>(line[j])))
          ++j;
      }
      out.push_back({Token::kNumber, line.substr(i, j - i), col});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[j])) ||
              line[j] == '_')) {
        ++j;
      }
      out.push_back({Token::kWord, line.substr(i, j - i), col});
      i = j;
      continue;
    }
    if (std::string("|,:=[]()+-*").find(c) != std::string::npos) {
      out.push_back({Token::kSymbol, std::string(1, c), col});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_no,
                     col);
  }
  return out;
}

// Cursor over one line's tokens.
struct Line {
  const std::vector<Token>* toks;
  size_t pos{0};
  int line_no{1};
  int end_col{1};

  const Token& peek() const {
    static const Token end{Token::kEnd, "", 0};
    return pos < toks->size() ? (*toks)[pos] : end;
  }
  Token next() {
    Token t = peek();
    if (t.kind != Token::kEnd) ++pos;
    return t;
  }
  bool at_end() const { return pos >= toks->size(); }
  int here() const {
    return pos < toks->size() ? (*toks)[pos].col : end_col;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_no, here());
  }
  std::string expect_word(const std::string& what) {
    if (peek().kind != Token::kWord) fail("expected " + what);
    return next().text;
  }
  void expect_sym(char c) {
    if (peek().kind != Token::kSymbol || peek().text[0] != c)
      fail(std::string("expected '") + c + "'");
    next();
  }
  bool accept_sym(char c) {
    if (peek().kind == Token::kSymbol && peek().text[0] == c) {
      next();
      return true;
    }
    return false;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected trailing input");
  }
};

Rational parse_rational_token(const Token& tok, int line_no) {
  const std::string& s = tok.text;
  auto fail = [&](const std::string& msg) -> Rational {
    throw ParseError(msg, line_no, tok.col);
  };
  auto to_i64 = [&](std::string_view digits) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size())
      fail("number out of range");
    return v;
  };
  size_t slash = s.find('/');
  if (slash != std::string::npos) {
    std::int64_t den = to_i64(std::string_view(s).substr(slash + 1));
    if (den == 0) fail("zero denominator");
    return Rational(to_i64(std::string_view(s).substr(0, slash)), den);
  }
  size_t dot = s.find('.');
  if (dot == std::string::npos) return Rational::integer(to_i64(s));
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  size_t frac = s.size() - dot - 1;
  if (digits.size() > 18) fail("too many digits");
  std::int64_t den = 1;
  for (size_t k = 0; k < frac; ++k) den *= 10;
  return Rational(to_i64(digits), den);
}

double parse_number(Line& ln, const std::string& what) {
  bool neg = ln.accept_sym('-');
  if (ln.peek().kind != Token::kNumber) ln.fail("expected " + what);
  Rational r = parse_rational_token(ln.next(), ln.line_no);
  return neg ? -r.to_double() : r.to_double();
}

// Recursive descent over + - * and parentheses; identifiers must be
// declared parameters.
class ExprParser {
 public:
  ExprParser(Line& ln, const std::map<std::string, size_t>& params)
      : ln_(ln), params_(params) {}

  MultilinearExpr parse() { return sum(); }

 private:
  MultilinearExpr sum() {
    MultilinearExpr e = ln_.accept_sym('-')
                            ? MultilinearExpr::constant(Rational::integer(-1)) *
                                  product()
                            : product();
    while (true) {
      if (ln_.accept_sym('+')) {
        e = e + product();
      } else if (ln_.accept_sym('-')) {
        e = e - product();
      } else {
        return e;
      }
    }
  }

  MultilinearExpr product() {
    MultilinearExpr e = atom();
    while (ln_.accept_sym('*')) {
      MultilinearExpr rhs = atom();
      try {
        e = e * rhs;
      } catch (const Error& err) {
        throw ParseError(err.what(), ln_.line_no, ln_.here());
      }
    }
    return e;
  }

  MultilinearExpr atom() {
    const Token& t = ln_.peek();
    if (t.kind == Token::kNumber) {
      return MultilinearExpr::constant(
          parse_rational_token(ln_.next(), ln_.line_no));
    }
    if (t.kind == Token::kWord) {
      auto it = params_.find(t.text);
      if (it == params_.end())
        throw ParseError("unknown parameter '" + t.text + "'", ln_.line_no,
                         t.col);
      ln_.next();
      return MultilinearExpr::variable(it->second);
    }
    if (ln_.accept_sym('(')) {
      MultilinearExpr e = sum();
      ln_.expect_sym(')');
      return e;
    }
    ln_.fail("expected expression");
  }

  Line& ln_;
  const std::map<std::string, size_t>& params_;
};

std::vector<std::vector<Token>> lex_lines(const std::string& text) {
  std::vector<std::vector<Token>> lines;
  std::istringstream in(text);
  std::string line;
  int n = 1;
  while (std::getline(in, line)) {
    lines.push_back(lex_line(line, n));
    ++n;
  }
  return lines;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

TemplateModel parse_template(const std::string& text) {
  TemplateModel tmpl;
  std::map<std::string, size_t> params;
  std::map<std::string, StateId> states;
  std::optional<std::string> entry_name;
  std::vector<std::string> exit_names;
  std::vector<std::optional<MultilinearExpr>> rewards;
  std::vector<std::map<std::string, int>> actions_of;  // name -> row index

  auto state_id = [&](const std::string& name) {
    auto it = states.find(name);
    if (it != states.end()) return it->second;
    StateId s = static_cast<StateId>(tmpl.core.state_names.size());
    states.emplace(name, s);
    tmpl.core.state_names.push_back(name);
    tmpl.core.rows.emplace_back();
    rewards.emplace_back();
    actions_of.emplace_back();
    return s;
  };

  auto lines = lex_lines(text);
  for (size_t li = 0; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    Line ln{&lines[li], 0, static_cast<int>(li) + 1,
            lines[li].back().col + static_cast<int>(lines[li].back().text.size())};
    const Token& head = ln.peek();
    if (head.kind == Token::kWord && head.text == "param") {
      ln.next();
      std::string name = ln.expect_word("parameter name");
      if (params.count(name))
        throw ParseError("duplicate parameter '" + name + "'", ln.line_no,
                         head.col);
      if (ln.expect_word("'in'") != "in") ln.fail("expected 'in'");
      ln.expect_sym('[');
      double lo = parse_number(ln, "lower bound");
      ln.expect_sym(',');
      double hi = parse_number(ln, "upper bound");
      ln.expect_sym(']');
      ln.expect_end();
      params.emplace(name, params.size());
      tmpl.core.params.push_back(name);
      tmpl.admissible.lower.push_back(lo);
      tmpl.admissible.upper.push_back(hi);
      continue;
    }
    if (head.kind == Token::kWord && head.text == "entry") {
      ln.next();
      if (entry_name)
        throw ParseError("duplicate entry line", ln.line_no, head.col);
      entry_name = ln.expect_word("state name");
      ln.expect_end();
      continue;
    }
    if (head.kind == Token::kWord && head.text == "exits") {
      ln.next();
      if (!exit_names.empty())
        throw ParseError("duplicate exits line", ln.line_no, head.col);
      while (!ln.at_end()) exit_names.push_back(ln.expect_word("state name"));
      if (exit_names.empty()) ln.fail("expected at least one exit state");
      continue;
    }

    // Row: <state> | <action> | <succ>: <expr>, ... | <reward-expr>
    if (head.kind != Token::kWord) ln.fail("expected state name");
    std::string sname = ln.next().text;
    StateId s = state_id(sname);
    ln.expect_sym('|');
    Token action_tok = ln.peek();
    std::string action = ln.expect_word("action name");
    if (actions_of[s].count(action))
      throw ParseError(
          "duplicate action '" + action + "' on state '" + sname + "'",
          ln.line_no, action_tok.col);
    actions_of[s].emplace(action, static_cast<int>(tmpl.core.rows[s].size()));
    ln.expect_sym('|');
    Pmdp::Row row;
    row.action = action;
    std::map<std::string, int> seen_succ;
    while (true) {
      Token succ_tok = ln.peek();
      std::string succ = ln.expect_word("successor state");
      if (seen_succ.count(succ))
        throw ParseError("duplicate successor '" + succ + "'", ln.line_no,
                         succ_tok.col);
      seen_succ.emplace(succ, 1);
      ln.expect_sym(':');
      MultilinearExpr prob = ExprParser(ln, params).parse();
      row.branches.push_back({state_id(succ), std::move(prob)});
      if (!ln.accept_sym(',')) break;
    }
    ln.expect_sym('|');
    Token reward_tok = ln.peek();
    MultilinearExpr reward = ExprParser(ln, params).parse();
    ln.expect_end();
    if (rewards[s] && !(*rewards[s] == reward))
      throw ParseError("state '" + sname +
                           "' has conflicting rewards across its rows",
                       ln.line_no, reward_tok.col);
    rewards[s] = std::move(reward);
    tmpl.core.rows[s].push_back(std::move(row));
  }

  if (!entry_name) throw ParseError("missing entry line", 1, 1);
  if (exit_names.empty()) throw ParseError("missing exits line", 1, 1);
  tmpl.entry = state_id(*entry_name);
  for (const std::string& name : exit_names) {
    StateId e = state_id(name);
    if (std::find(tmpl.exits.begin(), tmpl.exits.end(), e) != tmpl.exits.end())
      throw ParseError("duplicate exit state '" + name + "'", 1, 1);
    tmpl.exits.push_back(e);
  }

  size_t n = tmpl.core.state_names.size();
  tmpl.core.rewards.resize(n);
  tmpl.core.target.assign(n, false);
  for (StateId e : tmpl.exits) tmpl.core.target[e] = true;
  for (StateId s = 0; s < n; ++s) {
    if (tmpl.core.target[s]) {
      if (rewards[s])
        throw ParseError(
            "exit state '" + tmpl.core.state_names[s] + "' must not have rows",
            1, 1);
      tmpl.core.rewards[s] = MultilinearExpr::constant(Rational::integer(0));
    } else {
      if (!rewards[s])
        throw ParseError(
            "state '" + tmpl.core.state_names[s] + "' has no rows", 1, 1);
      tmpl.core.rewards[s] = std::move(*rewards[s]);
    }
  }
  return tmpl;
}

HierarchicalModel parse_macro(const std::string& text,
                              const TemplateModel& tmpl) {
  HierarchicalModel model;
  model.tmpl = tmpl;
  model.mode = HierarchyMode::kSingleSuccessor;
  model.success_exit = 0;

  std::map<std::string, size_t> params;
  for (size_t i = 0; i < tmpl.core.params.size(); ++i)
    params.emplace(tmpl.core.params[i], i);
  std::map<std::string, size_t> exits;
  for (size_t i = 0; i < tmpl.exits.size(); ++i)
    exits.emplace(tmpl.core.state_names[tmpl.exits[i]], i);

  std::map<std::string, StateId> states;
  std::optional<std::string> init_name;
  std::vector<std::string> target_names;
  bool saw_mode = false;
  std::vector<std::map<std::string, int>> actions_of;
  std::vector<std::optional<double>> rewards;
  // States are numbered by their defining call/concrete line; every
  // other mention (branches, wiring, init, targets) is kept by name and
  // resolved after all lines are read, appending still-unknown states.
  std::vector<std::vector<std::string>> wiring_names;
  struct PendingRow {
    std::string action;
    std::vector<std::pair<std::string, double>> branches;
  };
  std::vector<std::vector<PendingRow>> pending_rows;

  auto state_id = [&](const std::string& name) {
    auto it = states.find(name);
    if (it != states.end()) return it->second;
    StateId s = static_cast<StateId>(model.states.size());
    states.emplace(name, s);
    HierarchicalModel::MacroState ms;
    ms.name = name;
    model.states.push_back(std::move(ms));
    actions_of.emplace_back();
    rewards.emplace_back();
    wiring_names.emplace_back();
    pending_rows.emplace_back();
    return s;
  };

  std::vector<bool> defined;  // appeared as call/concrete subject
  auto mark_defined = [&](StateId s, const Token& tok, int line_no,
                          bool is_call) {
    if (s >= defined.size()) defined.resize(s + 1, false);
    if (defined[s] && model.states[s].is_call != is_call)
      throw ParseError("state '" + model.states[s].name +
                           "' is both a call and a concrete state",
                       line_no, tok.col);
    if (defined[s] && is_call)
      throw ParseError("duplicate call state '" + model.states[s].name + "'",
                       line_no, tok.col);
    defined[s] = true;
  };

  auto lines = lex_lines(text);
  for (size_t li = 0; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    Line ln{&lines[li], 0, static_cast<int>(li) + 1,
            lines[li].back().col + static_cast<int>(lines[li].back().text.size())};
    Token head = ln.peek();
    if (head.kind != Token::kWord) ln.fail("expected keyword or state line");

    if (head.text == "mode") {
      ln.next();
      if (saw_mode) throw ParseError("duplicate mode line", ln.line_no, head.col);
      saw_mode = true;
      Token m = ln.peek();
      std::string kind = ln.expect_word("'single' or 'success-target'");
      if (kind == "single") {
        model.mode = HierarchyMode::kSingleSuccessor;
      } else if (kind == "success" && ln.accept_sym('-')) {
        if (ln.expect_word("'target'") != "target")
          throw ParseError("unknown mode '" + kind + "-...'", ln.line_no,
                           m.col);
        model.mode = HierarchyMode::kSuccessTarget;
        Token e = ln.peek();
        std::string exit_name = ln.expect_word("template exit name");
        auto it = exits.find(exit_name);
        if (it == exits.end())
          throw ParseError("'" + exit_name + "' is not a template exit",
                           ln.line_no, e.col);
        model.success_exit = it->second;
      } else {
        throw ParseError("unknown mode '" + kind + "'", ln.line_no, m.col);
      }
      ln.expect_end();
      continue;
    }
    if (head.text == "init") {
      ln.next();
      if (init_name) throw ParseError("duplicate init line", ln.line_no, head.col);
      init_name = ln.expect_word("state name");
      ln.expect_end();
      continue;
    }
    if (head.text == "targets") {
      ln.next();
      if (!target_names.empty())
        throw ParseError("duplicate targets line", ln.line_no, head.col);
      while (!ln.at_end()) target_names.push_back(ln.expect_word("state name"));
      if (target_names.empty()) ln.fail("expected at least one target state");
      continue;
    }

    if (head.text == "call") {
      ln.next();
      Token name_tok = ln.peek();
      std::string name = ln.expect_word("state name");
      StateId s = state_id(name);
      mark_defined(s, name_tok, ln.line_no, true);
      model.states[s].is_call = true;
      ln.expect_sym('|');
      Valuation val;
      val.values.assign(tmpl.core.params.size(), 0.0);
      std::vector<bool> assigned(tmpl.core.params.size(), false);
      while (true) {
        Token p = ln.peek();
        std::string pname = ln.expect_word("parameter name");
        auto it = params.find(pname);
        if (it == params.end())
          throw ParseError("unknown parameter '" + pname + "'", ln.line_no,
                           p.col);
        if (assigned[it->second])
          throw ParseError("parameter '" + pname + "' assigned twice",
                           ln.line_no, p.col);
        ln.expect_sym('=');
        val.values[it->second] = parse_number(ln, "parameter value");
        assigned[it->second] = true;
        if (!ln.accept_sym(',')) break;
      }
      for (size_t i = 0; i < assigned.size(); ++i) {
        if (!assigned[i])
          throw ParseError("call '" + name + "' does not assign parameter '" +
                               tmpl.core.params[i] + "'",
                           ln.line_no, name_tok.col);
      }
      ln.expect_sym('|');
      if (ln.expect_word("'exits'") != "exits") ln.fail("expected 'exits'");
      ln.expect_sym('=');
      std::vector<std::string> succ_names;
      do {
        succ_names.push_back(ln.expect_word("successor state"));
      } while (ln.accept_sym(','));
      ln.expect_end();
      if (succ_names.size() != tmpl.exits.size())
        throw ParseError("call '" + name + "' wires " +
                             std::to_string(succ_names.size()) +
                             " exits, template has " +
                             std::to_string(tmpl.exits.size()),
                         ln.line_no, name_tok.col);
      model.states[s].valuation = std::move(val);
      wiring_names[s] = std::move(succ_names);
      continue;
    }

    if (head.text == "concrete") {
      ln.next();
      Token name_tok = ln.peek();
      std::string name = ln.expect_word("state name");
      StateId s = state_id(name);
      mark_defined(s, name_tok, ln.line_no, false);
      ln.expect_sym('|');
      Token action_tok = ln.peek();
      std::string action = ln.expect_word("action name");
      if (actions_of[s].count(action))
        throw ParseError(
            "duplicate action '" + action + "' on state '" + name + "'",
            ln.line_no, action_tok.col);
      actions_of[s].emplace(action,
                            static_cast<int>(pending_rows[s].size()));
      ln.expect_sym('|');
      PendingRow row;
      row.action = action;
      std::map<std::string, int> seen_succ;
      while (true) {
        Token succ_tok = ln.peek();
        std::string succ = ln.expect_word("successor state");
        if (seen_succ.count(succ))
          throw ParseError("duplicate successor '" + succ + "'", ln.line_no,
                           succ_tok.col);
        seen_succ.emplace(succ, 1);
        ln.expect_sym(':');
        double p = parse_number(ln, "probability");
        row.branches.emplace_back(succ, p);
        if (!ln.accept_sym(',')) break;
      }
      ln.expect_sym('|');
      Token reward_tok = ln.peek();
      double reward = parse_number(ln, "reward");
      ln.expect_end();
      if (rewards[s] && *rewards[s] != reward)
        throw ParseError("state '" + name +
                             "' has conflicting rewards across its rows",
                         ln.line_no, reward_tok.col);
      rewards[s] = reward;
      pending_rows[s].push_back(std::move(row));
      continue;
    }

    throw ParseError("unknown keyword '" + head.text + "'", ln.line_no,
                     head.col);
  }

  if (!init_name) throw ParseError("missing init line", 1, 1);
  if (target_names.empty()) throw ParseError("missing targets line", 1, 1);

  // Resolving names can append states, so never hold references into
  // model.states across state_id calls.
  size_t defined_count = pending_rows.size();
  for (StateId s = 0; s < defined_count; ++s) {
    std::vector<ConcreteMdp::Row> rows;
    for (const PendingRow& pending : pending_rows[s]) {
      ConcreteMdp::Row row;
      row.action = pending.action;
      for (const auto& [succ, p] : pending.branches)
        row.branches.push_back({state_id(succ), p});
      rows.push_back(std::move(row));
    }
    model.states[s].rows = std::move(rows);
  }
  model.initial = state_id(*init_name);
  std::vector<StateId> target_ids;
  for (const std::string& t : target_names) target_ids.push_back(state_id(t));
  for (StateId s = 0; s < defined_count; ++s) {
    if (!model.states[s].is_call) continue;
    std::vector<StateId> wired;
    for (const std::string& succ : wiring_names[s])
      wired.push_back(state_id(succ));
    model.states[s].exit_wiring = std::move(wired);
  }
  model.target.assign(model.states.size(), false);
  for (StateId t : target_ids) model.target[t] = true;
  for (StateId s = 0; s < model.states.size(); ++s) {
    if (!model.states[s].is_call)
      model.states[s].reward = s < rewards.size() && rewards[s] ? *rewards[s] : 0.0;
  }
  return model;
}

std::string serialize(const TemplateModel& tmpl) {
  std::ostringstream out;
  for (size_t i = 0; i < tmpl.core.params.size(); ++i) {
    out << "param " << tmpl.core.params[i] << " in ["
        << fmt_double(tmpl.admissible.lower[i]) << ", "
        << fmt_double(tmpl.admissible.upper[i]) << "]\n";
  }
  out << "entry " << tmpl.core.state_names[tmpl.entry] << "\n";
  out << "exits";
  for (StateId e : tmpl.exits) out << " " << tmpl.core.state_names[e];
  out << "\n";
  for (StateId s = 0; s < tmpl.core.state_names.size(); ++s) {
    for (const auto& row : tmpl.core.rows[s]) {
      out << tmpl.core.state_names[s] << " | " << row.action << " | ";
      for (size_t b = 0; b < row.branches.size(); ++b) {
        if (b) out << ", ";
        out << tmpl.core.state_names[row.branches[b].to] << ": "
            << row.branches[b].probability.to_string(tmpl.core.params);
      }
      out << " | " << tmpl.core.rewards[s].to_string(tmpl.core.params) << "\n";
    }
  }
  return out.str();
}

std::string serialize_macro(const HierarchicalModel& model) {
  std::ostringstream out;
  const auto& tmpl = model.tmpl;
  if (model.mode == HierarchyMode::kSuccessTarget) {
    out << "mode success-target "
        << tmpl.core.state_names[tmpl.exits[model.success_exit]] << "\n";
  } else {
    out << "mode single\n";
  }
  out << "init " << model.states[model.initial].name << "\n";
  out << "targets";
  for (StateId s = 0; s < model.states.size(); ++s)
    if (model.target[s]) out << " " << model.states[s].name;
  out << "\n";
  for (const auto& ms : model.states) {
    if (ms.is_call) {
      out << "call " << ms.name << " | ";
      for (size_t i = 0; i < tmpl.core.params.size(); ++i) {
        if (i) out << ", ";
        out << tmpl.core.params[i] << " = "
            << fmt_double(ms.valuation.values[i]);
      }
      out << " | exits = ";
      for (size_t i = 0; i < ms.exit_wiring.size(); ++i) {
        if (i) out << ", ";
        out << model.states[ms.exit_wiring[i]].name;
      }
      out << "\n";
    } else {
      for (const auto& row : ms.rows) {
        out << "concrete " << ms.name << " | " << row.action << " | ";
        for (size_t b = 0; b < row.branches.size(); ++b) {
          if (b) out << ", ";
          out << model.states[row.branches[b].to].name << ": "
              << fmt_double(row.branches[b].probability);
        }
        out << " | " << fmt_double(ms.reward) << "\n";
      }
    }
  }
  return out.str();
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Bundle load_bundle(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path bundle_path(path);
  if (fs::is_directory(bundle_path)) bundle_path /= "bundle.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(bundle_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(bundle_path.string() + ": " + e.what());
  }
  fs::path dir = bundle_path.parent_path();

  Bundle bundle;
  if (!j.contains("template") || !j.contains("macro"))
    throw Error(bundle_path.string() + ": missing \"template\" or \"macro\" entry");
  fs::path tmpl_path = dir / j.at("template").get<std::string>();
  fs::path macro_path = dir / j.at("macro").get<std::string>();
  TemplateModel tmpl;
  try {
    tmpl = parse_template(read_file(tmpl_path));
  } catch (const ParseError& e) {
    throw ParseError(tmpl_path.string() + ": " + e.what(), e.line, e.column);
  }
  try {
    bundle.model = parse_macro(read_file(macro_path), tmpl);
  } catch (const ParseError& e) {
    throw ParseError(macro_path.string() + ": " + e.what(), e.line, e.column);
  }

  if (j.contains("config")) {
    const auto& c = j.at("config");
    RunDefaults& d = bundle.defaults;
    d.eta = c.value("eta", d.eta);
    d.epsilon = c.value("epsilon", d.epsilon);
    d.cadence = c.value("cadence", d.cadence);
    d.seed = c.value("seed", d.seed);
    d.max_iterations = c.value("max_iterations", d.max_iterations);
    d.flatten_cap = c.value("flatten_cap", d.flatten_cap);
    if (c.contains("mode")) {
      std::string mode = c.at("mode").get<std::string>();
      std::string actual = bundle.model.mode == HierarchyMode::kSuccessTarget
                               ? "success-target"
                               : "single";
      if (mode != actual)
        throw Error(bundle_path.string() + ": config mode \"" + mode +
                    "\" does not match macro mode \"" + actual + "\"");
    }
  }
  return bundle;
}

void write_bundle(const std::string& dir, const HierarchicalModel& model,
                  const RunDefaults& defaults) {
  namespace fs = std::filesystem;
  fs::path d(dir);
  fs::create_directories(d);
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
  };
  write(d / "template.txt", serialize(model.tmpl));
  write(d / "macro.txt", serialize_macro(model));
  nlohmann::json j;
  j["template"] = "template.txt";
  j["macro"] = "macro.txt";
  j["config"] = {
      {"eta", defaults.eta},
      {"epsilon", defaults.epsilon},
      {"cadence", defaults.cadence},
      {"seed", defaults.seed},
      {"max_iterations", defaults.max_iterations},
      {"flatten_cap", defaults.flatten_cap},
      {"mode", model.mode == HierarchyMode::kSuccessTarget ? "success-target"
                                                           : "single"},
  };
  write(d / "bundle.json", j.dump(2) + "\n");
}

}  // namespace hmdp
