#pragma once

// The textual scenario language.  A document declares one program, the objects
// it may talk about, and a list of scenarios:
//
//   program timer_charging_tests
//
//   object customer
//   object obc.comStack
//
//   test scenario TM_708.1
//     request customer -> obc.comStack . timerChargingRequest(true, 100, now + 6h)
//     wait obc.rtcHandler -> obc.application . timerChargingUserCfg(soc, time)
//     assert soc == 100, "unexpected state of charge"
//
// Scenarios marked `test` start active; plain scenarios may begin with a
// `when <pattern>` trigger.  A bare identifier in a pattern slot captures the
// parameter on first use and compares against the captured value afterwards.

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "scenweave/scenario.hpp"

namespace scenweave::dsl {

struct Diagnostic {
  int line = 0;
  int col = 0;
  std::string message;
};

inline std::string format_diagnostic(const std::string& file, const Diagnostic& d) {
  return file + ":" + std::to_string(d.line) + ":" + std::to_string(d.col) + ": " + d.message;
}

// --- document structure --------------------------------------------------------

struct Step;

struct Request {
  EventTemplate event;
};
struct Wait {
  PatternTemplate pattern;
};
struct If {
  ExprPtr condition;
  std::vector<Step> block;
};
struct Assert {
  ExprPtr condition;
  std::string message;  // empty = report the condition itself
};

struct Step {
  std::variant<Request, Wait, If, Assert> node;
};

struct ScenarioDef {
  std::string id;
  bool is_test = false;
  std::optional<PatternTemplate> trigger;
  std::vector<Step> steps;
};

struct ScenarioDoc {
  std::string program_id;
  std::vector<ObjectRef> objects;
  std::vector<ScenarioDef> scenarios;
};

struct ParseResult {
  std::optional<ScenarioDoc> doc;  // present only when diagnostics are empty
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return doc.has_value(); }
};

// --- lexing ----------------------------------------------------------------------

namespace lex {

enum class Kind {
  Ident, Int, Decimal, Duration, TimestampLit, String,
  Arrow, Dot, LParen, RParen, Comma, Star, Plus, Minus,
  Eq, Ne, Lt, Le, Gt, Ge,
  End
};

struct Token {
  Kind kind = Kind::End;
  std::string text;
  std::int64_t int_value = 0;   // Int, Duration (ms), TimestampLit (ms)
  double dec_value = 0.0;       // Decimal
  std::string str_value;        // String
  int col = 0;                  // 1-based column in the source line
};

struct LexOutcome {
  std::vector<Token> tokens;
  std::optional<Diagnostic> error;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline bool is_keyword(const std::string& s) {
  return s == "and" || s == "or" || s == "not" || s == "true" || s == "false" || s == "now";
}

inline LexOutcome lex_line(const std::string& line, int line_no) {
  LexOutcome out;
  std::size_t i = 0;
  auto fail = [&](std::size_t at, std::string msg) {
    out.error = Diagnostic{line_no, static_cast<int>(at) + 1, std::move(msg)};
  };

  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;  // comment until end of line
    if (c == ' ') {
      ++i;
      continue;
    }
    if (c == '\t') {
      fail(i, "tab characters are not allowed; use spaces");
      return out;
    }

    Token t;
    t.col = static_cast<int>(i) + 1;

    if (ident_start(c)) {
      std::size_t start = i;
      while (i < line.size() && ident_char(line[i])) ++i;
      t.kind = Kind::Ident;
      t.text = line.substr(start, i - start);
      out.tokens.push_back(std::move(t));
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      if (i < line.size() && line[i] == '.' && i + 1 < line.size() &&
          std::isdigit(static_cast<unsigned char>(line[i + 1]))) {
        ++i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        t.kind = Kind::Decimal;
        t.text = line.substr(start, i - start);
        t.dec_value = std::stod(t.text);
        out.tokens.push_back(std::move(t));
        continue;
      }
      std::size_t unit_start = i;
      while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i]))) ++i;
      std::string digits = line.substr(start, unit_start - start);
      std::string unit = line.substr(unit_start, i - unit_start);
      if (unit.empty()) {
        t.kind = Kind::Int;
        t.text = digits;
        t.int_value = std::stoll(digits);
        out.tokens.push_back(std::move(t));
        continue;
      }
      std::int64_t scale;
      if (unit == "ms") scale = 1;
      else if (unit == "s") scale = 1'000;
      else if (unit == "min") scale = 60'000;
      else if (unit == "h") scale = 3'600'000;
      else if (unit == "d") scale = 86'400'000;
      else {
        fail(unit_start, "unknown duration unit '" + unit + "' (use ms, s, min, h or d)");
        return out;
      }
      t.kind = Kind::Duration;
      t.text = digits + unit;
      t.int_value = std::stoll(digits) * scale;
      out.tokens.push_back(std::move(t));
      continue;
    }

    if (c == '@') {
      std::size_t start = i++;
      if (i < line.size() && line[i] == '-') ++i;
      std::size_t digit_start = i;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      if (i == digit_start) {
        fail(start, "expected milliseconds after '@'");
        return out;
      }
      t.kind = Kind::TimestampLit;
      t.text = line.substr(start, i - start);
      t.int_value = std::stoll(line.substr(start + 1, i - start - 1));
      out.tokens.push_back(std::move(t));
      continue;
    }

    if (c == '"') {
      std::size_t start = i++;
      std::string value;
      bool closed = false;
      while (i < line.size()) {
        char d = line[i];
        if (d == '"') {
          closed = true;
          ++i;
          break;
        }
        if (d == '\\') {
          if (i + 1 >= line.size()) break;
          char e = line[i + 1];
          if (e == '"') value += '"';
          else if (e == '\\') value += '\\';
          else if (e == 'n') value += '\n';
          else if (e == 't') value += '\t';
          else if (e == 'r') value += '\r';
          else {
            fail(i, std::string("unknown escape '\\") + e + "'");
            return out;
          }
          i += 2;
          continue;
        }
        value += d;
        ++i;
      }
      if (!closed) {
        fail(start, "unterminated string literal");
        return out;
      }
      t.kind = Kind::String;
      t.str_value = std::move(value);
      out.tokens.push_back(std::move(t));
      continue;
    }

    auto two = [&](char a, char b) {
      return c == a && i + 1 < line.size() && line[i + 1] == b;
    };
    if (two('-', '>')) { t.kind = Kind::Arrow; i += 2; }
    else if (two('=', '=')) { t.kind = Kind::Eq; i += 2; }
    else if (two('!', '=')) { t.kind = Kind::Ne; i += 2; }
    else if (two('<', '=')) { t.kind = Kind::Le; i += 2; }
    else if (two('>', '=')) { t.kind = Kind::Ge; i += 2; }
    else if (c == '<') { t.kind = Kind::Lt; ++i; }
    else if (c == '>') { t.kind = Kind::Gt; ++i; }
    else if (c == '.') { t.kind = Kind::Dot; ++i; }
    else if (c == '(') { t.kind = Kind::LParen; ++i; }
    else if (c == ')') { t.kind = Kind::RParen; ++i; }
    else if (c == ',') { t.kind = Kind::Comma; ++i; }
    else if (c == '*') { t.kind = Kind::Star; ++i; }
    else if (c == '+') { t.kind = Kind::Plus; ++i; }
    else if (c == '-') { t.kind = Kind::Minus; ++i; }
    else {
      fail(i, std::string("unexpected character '") + c + "'");
      return out;
    }
    out.tokens.push_back(std::move(t));
  }

  Token end;
  end.kind = Kind::End;
  end.col = static_cast<int>(line.size()) + 1;
  out.tokens.push_back(std::move(end));
  return out;
}

}  // namespace lex

// --- parsing ---------------------------------------------------------------------

namespace detail {

struct Cursor {
  std::vector<lex::Token> tokens;
  std::size_t idx = 0;
  int line_no = 0;

  const lex::Token& peek() const { return tokens[idx]; }
  const lex::Token& peek_next() const {
    return tokens[std::min(idx + 1, tokens.size() - 1)];
  }
  const lex::Token& get() { return tokens[idx++]; }
  bool at(lex::Kind k) const { return peek().kind == k; }
  bool at_keyword(const char* kw) const {
    return peek().kind == lex::Kind::Ident && peek().text == kw;
  }
};

// The per-scenario context used to resolve bare identifiers in pattern slots
// and to reject references to names that are not bound yet.
struct ScenarioCtx {
  std::set<std::string> bound;
};

// An object mention to verify against the declarations once the whole
// document has been read.
struct UsedRef {
  ObjectRef ref;
  int line = 0;
  int col = 0;
  std::string scenario;
};

struct Parser {
  std::vector<Diagnostic> diags;
  std::vector<UsedRef> used_refs;
  std::string current_scenario;

  void error(int line, int col, std::string msg) {
    diags.push_back(Diagnostic{line, col, std::move(msg)});
  }
  void error(const Cursor& c, std::string msg) {
    error(c.line_no, c.peek().col, std::move(msg));
  }

  void note_ref(const ObjectRef& ref, int line, int col) {
    used_refs.push_back(UsedRef{ref, line, col, current_scenario});
  }

  // Identifiers may be dotted and segments after the first may be numeric,
  // e.g. TM_710.1.
  std::optional<std::string> parse_doc_id(Cursor& c) {
    if (!c.at(lex::Kind::Ident)) {
      error(c, "expected an identifier");
      return std::nullopt;
    }
    std::string id = c.get().text;
    while (c.at(lex::Kind::Dot)) {
      c.get();
      if (c.at(lex::Kind::Ident) || c.at(lex::Kind::Int)) {
        id += "." + c.get().text;
      } else {
        error(c, "expected an identifier segment after '.'");
        return std::nullopt;
      }
    }
    return id;
  }

  // A dotted chain of plain identifiers: obc.comStack.timerChargingRequest
  std::optional<std::vector<std::string>> parse_chain(Cursor& c) {
    if (!c.at(lex::Kind::Ident)) {
      error(c, "expected an object path");
      return std::nullopt;
    }
    std::vector<std::string> segs{c.get().text};
    while (c.at(lex::Kind::Dot)) {
      c.get();
      if (!c.at(lex::Kind::Ident)) {
        error(c, "expected an identifier after '.'");
        return std::nullopt;
      }
      segs.push_back(c.get().text);
    }
    return segs;
  }

  // --- expressions -------------------------------------------------------------

  ExprPtr parse_expr(Cursor& c, const ScenarioCtx& ctx) { return parse_or(c, ctx); }

  ExprPtr parse_or(Cursor& c, const ScenarioCtx& ctx) {
    ExprPtr lhs = parse_and(c, ctx);
    while (lhs && c.at_keyword("or")) {
      c.get();
      ExprPtr rhs = parse_and(c, ctx);
      if (!rhs) return nullptr;
      lhs = make_binary(BinaryOp::Or, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_and(Cursor& c, const ScenarioCtx& ctx) {
    ExprPtr lhs = parse_not(c, ctx);
    while (lhs && c.at_keyword("and")) {
      c.get();
      ExprPtr rhs = parse_not(c, ctx);
      if (!rhs) return nullptr;
      lhs = make_binary(BinaryOp::And, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_not(Cursor& c, const ScenarioCtx& ctx) {
    if (c.at_keyword("not")) {
      c.get();
      ExprPtr operand = parse_not(c, ctx);
      if (!operand) return nullptr;
      return make_unary(UnaryOp::Not, std::move(operand));
    }
    return parse_cmp(c, ctx);
  }

  ExprPtr parse_cmp(Cursor& c, const ScenarioCtx& ctx) {
    ExprPtr lhs = parse_add(c, ctx);
    while (lhs) {
      BinaryOp op;
      switch (c.peek().kind) {
        case lex::Kind::Eq: op = BinaryOp::Eq; break;
        case lex::Kind::Ne: op = BinaryOp::Ne; break;
        case lex::Kind::Lt: op = BinaryOp::Lt; break;
        case lex::Kind::Le: op = BinaryOp::Le; break;
        case lex::Kind::Gt: op = BinaryOp::Gt; break;
        case lex::Kind::Ge: op = BinaryOp::Ge; break;
        default: return lhs;
      }
      c.get();
      ExprPtr rhs = parse_add(c, ctx);
      if (!rhs) return nullptr;
      lhs = make_binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_add(Cursor& c, const ScenarioCtx& ctx) {
    ExprPtr lhs = parse_mul(c, ctx);
    while (lhs && (c.at(lex::Kind::Plus) || c.at(lex::Kind::Minus))) {
      BinaryOp op = c.get().kind == lex::Kind::Plus ? BinaryOp::Add : BinaryOp::Sub;
      ExprPtr rhs = parse_mul(c, ctx);
      if (!rhs) return nullptr;
      lhs = make_binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_mul(Cursor& c, const ScenarioCtx& ctx) {
    ExprPtr lhs = parse_unary(c, ctx);
    while (lhs && c.at(lex::Kind::Star)) {
      c.get();
      ExprPtr rhs = parse_unary(c, ctx);
      if (!rhs) return nullptr;
      lhs = make_binary(BinaryOp::Mul, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_unary(Cursor& c, const ScenarioCtx& ctx) {
    if (c.at(lex::Kind::Minus)) {
      c.get();
      ExprPtr operand = parse_unary(c, ctx);
      if (!operand) return nullptr;
      return make_unary(UnaryOp::Neg, std::move(operand));
    }
    return parse_primary(c, ctx);
  }

  ExprPtr parse_primary(Cursor& c, const ScenarioCtx& ctx) {
    const lex::Token& t = c.peek();
    switch (t.kind) {
      case lex::Kind::Int:
        return make_literal(Value{c.get().int_value});
      case lex::Kind::Decimal:
        return make_literal(Value{c.get().dec_value});
      case lex::Kind::Duration:
        return make_duration(c.get().int_value);
      case lex::Kind::TimestampLit:
        return make_literal(Value{Timestamp{c.get().int_value}});
      case lex::Kind::String:
        return make_literal(Value{c.get().str_value});
      case lex::Kind::LParen: {
        c.get();
        ExprPtr inner = parse_or(c, ctx);
        if (!inner) return nullptr;
        if (!c.at(lex::Kind::RParen)) {
          error(c, "expected ')'");
          return nullptr;
        }
        c.get();
        return inner;
      }
      case lex::Kind::Ident: {
        if (t.text == "true") { c.get(); return make_literal(Value{true}); }
        if (t.text == "false") { c.get(); return make_literal(Value{false}); }
        if (t.text == "now") { c.get(); return make_now(); }
        if (t.text == "and" || t.text == "or" || t.text == "not") break;
        int col = t.col;
        std::string name = c.get().text;
        if (!ctx.bound.count(name)) {
          error(c.line_no, col, "name '" + name + "' is not bound at this point");
          return nullptr;
        }
        return make_name(std::move(name));
      }
      default:
        break;
    }
    error(c, "expected an expression");
    return nullptr;
  }

  // --- events and patterns -------------------------------------------------------

  // Shared shape: <source> -> <receiver-chain> . <label> ( ... ).  The label is
  // the last chain segment before the parenthesis.
  struct MessageHead {
    std::optional<ObjectRef> sender;  // nullopt for '*'
    ObjectRef receiver;
    std::string label;
  };

  std::optional<MessageHead> parse_message_head(Cursor& c, bool allow_wildcard) {
    MessageHead head;
    if (c.at(lex::Kind::Star)) {
      if (!allow_wildcard) {
        error(c, "a request needs a concrete sender");
        return std::nullopt;
      }
      c.get();
    } else {
      int col = c.peek().col;
      auto segs = parse_chain(c);
      if (!segs) return std::nullopt;
      head.sender = ObjectRef{std::move(*segs)};
      note_ref(*head.sender, c.line_no, col);
    }
    if (!c.at(lex::Kind::Arrow)) {
      error(c, "expected '->'");
      return std::nullopt;
    }
    c.get();
    int chain_col = c.peek().col;
    auto segs = parse_chain(c);
    if (!segs) return std::nullopt;
    if (!c.at(lex::Kind::LParen)) {
      error(c, "expected '(' after the message label");
      return std::nullopt;
    }
    if (segs->size() < 2) {
      error(c.line_no, chain_col, "expected '<receiver> . <label>' before '('");
      return std::nullopt;
    }
    head.label = segs->back();
    segs->pop_back();
    head.receiver = ObjectRef{std::move(*segs)};
    note_ref(head.receiver, c.line_no, chain_col);
    return head;
  }

  std::optional<EventTemplate> parse_request_event(Cursor& c, const ScenarioCtx& ctx) {
    auto head = parse_message_head(c, /*allow_wildcard=*/false);
    if (!head) return std::nullopt;
    EventTemplate ev{std::move(*head->sender), std::move(head->receiver), std::move(head->label), {}};
    c.get();  // consume '('
    if (!c.at(lex::Kind::RParen)) {
      while (true) {
        ExprPtr arg = parse_expr(c, ctx);
        if (!arg) return std::nullopt;
        ev.args.push_back(std::move(arg));
        if (c.at(lex::Kind::Comma)) {
          c.get();
          continue;
        }
        break;
      }
    }
    if (!c.at(lex::Kind::RParen)) {
      error(c, "expected ')'");
      return std::nullopt;
    }
    c.get();
    return ev;
  }

  // Pattern slots: a lone identifier that is not bound yet becomes a free name
  // (and is bound from here on); anything else is an expression whose value the
  // matching event must carry.
  std::optional<PatternTemplate> parse_pattern(Cursor& c, ScenarioCtx& ctx) {
    auto head = parse_message_head(c, /*allow_wildcard=*/true);
    if (!head) return std::nullopt;
    PatternTemplate p;
    p.sender = std::move(head->sender);
    p.receiver = std::move(head->receiver);
    p.label = std::move(head->label);
    c.get();  // consume '('
    std::vector<std::string> new_names;
    if (!c.at(lex::Kind::RParen)) {
      while (true) {
        const lex::Token& t = c.peek();
        bool lone_ident = t.kind == lex::Kind::Ident && !lex::is_keyword(t.text) &&
                          (c.peek_next().kind == lex::Kind::Comma ||
                           c.peek_next().kind == lex::Kind::RParen);
        if (lone_ident && !ctx.bound.count(t.text)) {
          std::string name = c.get().text;
          // Within one pattern a repeated new name must see equal values; the
          // matcher enforces that, so record it once.
          if (std::find(new_names.begin(), new_names.end(), name) == new_names.end())
            new_names.push_back(name);
          p.slots.push_back(SlotTemplate{FreeName{std::move(name)}});
        } else {
          ExprPtr e = parse_expr(c, ctx);
          if (!e) return std::nullopt;
          p.slots.push_back(SlotTemplate{std::move(e)});
        }
        if (c.at(lex::Kind::Comma)) {
          c.get();
          continue;
        }
        break;
      }
    }
    if (!c.at(lex::Kind::RParen)) {
      error(c, "expected ')'");
      return std::nullopt;
    }
    c.get();
    for (auto& n : new_names) ctx.bound.insert(std::move(n));
    return p;
  }

  void expect_line_end(Cursor& c) {
    if (!c.at(lex::Kind::End)) error(c, "unexpected trailing input");
  }
};

struct RawLine {
  int number = 0;
  int indent = 0;
  std::string text;  // without indentation
};

}  // namespace detail

inline ParseResult parse_scenario_doc(const std::string& text) {
  using namespace detail;

  Parser parser;
  std::vector<RawLine> lines;

  // Split into meaningful lines; comments and blanks disappear here.
  {
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
      bool last = nl == std::string::npos;
      pos = last ? text.size() + 1 : nl + 1;
      ++number;
      if (last && line.empty()) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();

      std::size_t indent = 0;
      while (indent < line.size() && line[indent] == ' ') ++indent;
      if (indent < line.size() && line[indent] == '\t') {
        parser.error(number, static_cast<int>(indent) + 1,
                     "tab characters are not allowed; use spaces");
        continue;
      }
      std::string body = line.substr(indent);
      if (body.empty() || body[0] == '#') continue;
      lines.push_back(RawLine{number, static_cast<int>(indent), std::move(body)});
    }
  }

  ScenarioDoc doc;
  std::set<std::string> scenario_ids;
  std::set<std::string> declared_objects;
  bool saw_program = false;

  std::size_t li = 0;

  auto tokenize = [&](const RawLine& raw) -> std::optional<detail::Cursor> {
    auto lexed = lex::lex_line(raw.text, raw.number);
    if (lexed.error) {
      lexed.error->col += raw.indent;  // columns are relative to the trimmed text
      parser.diags.push_back(*lexed.error);
      return std::nullopt;
    }
    detail::Cursor c;
    c.tokens = std::move(lexed.tokens);
    for (auto& t : c.tokens) t.col += raw.indent;
    c.line_no = raw.number;
    return c;
  };

  // Parses the steps of one block at `indent`, recursing for `if` bodies.
  auto parse_block = [&](auto&& self, int indent, detail::ScenarioCtx& ctx,
                         std::vector<Step>& out) -> void {
    while (li < lines.size() && lines[li].indent >= indent) {
      const RawLine& raw = lines[li];
      if (raw.indent != indent) {
        parser.error(raw.number, raw.indent + 1,
                     "unexpected indentation (expected " + std::to_string(indent) + " spaces)");
        ++li;
        continue;
      }
      auto cur = tokenize(raw);
      ++li;
      if (!cur) continue;
      detail::Cursor& c = *cur;

      if (c.at_keyword("request")) {
        c.get();
        auto ev = parser.parse_request_event(c, ctx);
        if (!ev) continue;
        parser.expect_line_end(c);
        out.push_back(Step{Request{std::move(*ev)}});
      } else if (c.at_keyword("wait")) {
        c.get();
        auto p = parser.parse_pattern(c, ctx);
        if (!p) continue;
        parser.expect_line_end(c);
        out.push_back(Step{Wait{std::move(*p)}});
      } else if (c.at_keyword("assert")) {
        c.get();
        ExprPtr cond = parser.parse_expr(c, ctx);
        if (!cond) continue;
        std::string message;
        if (c.at(lex::Kind::Comma)) {
          c.get();
          if (!c.at(lex::Kind::String)) {
            parser.error(c, "expected a quoted message after ','");
            continue;
          }
          message = c.get().str_value;
        }
        parser.expect_line_end(c);
        out.push_back(Step{Assert{std::move(cond), std::move(message)}});
      } else if (c.at_keyword("if")) {
        c.get();
        ExprPtr cond = parser.parse_expr(c, ctx);
        if (!cond) continue;
        parser.expect_line_end(c);
        If branch{std::move(cond), {}};
        // Names bound inside the block may be skipped at run time, so they
        // stay local to it.
        detail::ScenarioCtx inner = ctx;
        self(self, indent + 2, inner, branch.block);
        if (branch.block.empty())
          parser.error(raw.number, raw.indent + 1, "an 'if' block must contain at least one step");
        out.push_back(Step{std::move(branch)});
      } else if (c.at_keyword("when")) {
        parser.error(raw.number, c.peek().col,
                     "'when' is only allowed as the first line of a scenario");
      } else {
        parser.error(raw.number, c.peek().col, "expected a step (request, wait, if or assert)");
      }
    }
  };

  while (li < lines.size()) {
    const RawLine& raw = lines[li];
    if (raw.indent != 0) {
      parser.error(raw.number, raw.indent + 1, "unexpected indentation at top level");
      ++li;
      continue;
    }
    auto cur = tokenize(raw);
    ++li;
    if (!cur) continue;
    detail::Cursor& c = *cur;

    if (c.at_keyword("program")) {
      c.get();
      auto id = parser.parse_doc_id(c);
      if (!id) continue;
      parser.expect_line_end(c);
      if (saw_program) {
        parser.error(raw.number, 1, "duplicate 'program' line");
        continue;
      }
      saw_program = true;
      doc.program_id = *id;
    } else if (c.at_keyword("object")) {
      c.get();
      auto segs = parser.parse_chain(c);
      if (!segs) continue;
      parser.expect_line_end(c);
      ObjectRef ref{std::move(*segs)};
      if (!declared_objects.insert(ref.qualified()).second) {
        parser.error(raw.number, 1, "object '" + ref.qualified() + "' declared twice");
        continue;
      }
      doc.objects.push_back(std::move(ref));
    } else if (c.at_keyword("scenario") || c.at_keyword("test")) {
      ScenarioDef def;
      if (c.at_keyword("test")) {
        c.get();
        def.is_test = true;
        if (!c.at_keyword("scenario")) {
          parser.error(c, "expected 'scenario' after 'test'");
          continue;
        }
      }
      c.get();  // 'scenario'
      auto id = parser.parse_doc_id(c);
      if (!id) continue;
      parser.expect_line_end(c);
      def.id = *id;
      if (!scenario_ids.insert(def.id).second)
        parser.error(raw.number, 1, "scenario '" + def.id + "' declared twice");
      parser.current_scenario = def.id;
      std::size_t diags_before = parser.diags.size();

      detail::ScenarioCtx ctx;

      // Optional trigger line.  The lookahead lexes without reporting so a
      // malformed step line is only diagnosed once, by the block parser.
      if (li < lines.size() && lines[li].indent == 2) {
        auto lexed = lex::lex_line(lines[li].text, lines[li].number);
        bool is_when = !lexed.error && !lexed.tokens.empty() &&
                       lexed.tokens[0].kind == lex::Kind::Ident && lexed.tokens[0].text == "when";
        if (is_when) {
          auto peek = tokenize(lines[li]);
          int when_line = lines[li].number;
          int when_col = peek->peek().col;
          ++li;
          peek->get();
          auto p = parser.parse_pattern(*peek, ctx);
          if (p) {
            parser.expect_line_end(*peek);
            if (def.is_test)
              parser.error(when_line, when_col,
                           "test scenarios start active and cannot have a trigger");
            else
              def.trigger = std::move(*p);
          }
        }
      }

      parse_block(parse_block, 2, ctx, def.steps);
      // Only complain about an empty body when nothing else went wrong in it.
      if (def.steps.empty() && parser.diags.size() == diags_before)
        parser.error(raw.number, 1, "scenario '" + def.id + "' has an empty body");
      doc.scenarios.push_back(std::move(def));
    } else {
      parser.error(raw.number, c.peek().col,
                   "expected 'program', 'object' or a scenario declaration");
    }
  }

  if (!saw_program) parser.error(1, 1, "missing 'program' line");

  for (const auto& used : parser.used_refs) {
    if (!declared_objects.count(used.ref.qualified()))
      parser.error(used.line, used.col,
                   "scenario '" + used.scenario + "' references undeclared object '" +
                       used.ref.qualified() + "' (add an 'object " + used.ref.qualified() +
                       "' line)");
  }

  ParseResult result;
  std::sort(parser.diags.begin(), parser.diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return a.line != b.line ? a.line < b.line : a.col < b.col;
  });
  result.diagnostics = std::move(parser.diags);
  if (result.diagnostics.empty()) result.doc = std::move(doc);
  return result;
}

// --- printing --------------------------------------------------------------------

namespace detail {

inline std::string render_slot(const SlotTemplate& s) {
  if (const auto* f = std::get_if<FreeName>(&s)) return f->name;
  return scenweave::pretty_print(std::get<ExprPtr>(s));
}

inline std::string render_pattern_template(const PatternTemplate& p) {
  std::string out = p.sender ? p.sender->qualified() : "*";
  out += " -> " + p.receiver.qualified() + " . " + p.label + "(";
  for (std::size_t i = 0; i < p.slots.size(); ++i) {
    if (i) out += ", ";
    out += render_slot(p.slots[i]);
  }
  return out + ")";
}

inline std::string render_event_template(const EventTemplate& e) {
  std::string out = e.sender.qualified() + " -> " + e.receiver.qualified() + " . " + e.label + "(";
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i) out += ", ";
    out += scenweave::pretty_print(e.args[i]);
  }
  return out + ")";
}

inline void print_steps(const std::vector<Step>& steps, int indent, std::string& out) {
  std::string pad(indent, ' ');
  for (const auto& s : steps) {
    if (const auto* r = std::get_if<Request>(&s.node)) {
      out += pad + "request " + render_event_template(r->event) + "\n";
    } else if (const auto* w = std::get_if<Wait>(&s.node)) {
      out += pad + "wait " + render_pattern_template(w->pattern) + "\n";
    } else if (const auto* i = std::get_if<If>(&s.node)) {
      out += pad + "if " + scenweave::pretty_print(i->condition) + "\n";
      print_steps(i->block, indent + 2, out);
    } else {
      const auto& a = std::get<Assert>(s.node);
      out += pad + "assert " + scenweave::pretty_print(a.condition);
      if (!a.message.empty()) out += ", " + scenweave::detail::quote_text(a.message);
      out += "\n";
    }
  }
}

}  // namespace detail

inline std::string pretty_print(const ScenarioDoc& doc) {
  std::string out = "program " + doc.program_id + "\n";
  if (!doc.objects.empty()) {
    out += "\n";
    for (const auto& o : doc.objects) out += "object " + o.qualified() + "\n";
  }
  for (const auto& def : doc.scenarios) {
    out += "\n";
    out += (def.is_test ? "test scenario " : "scenario ") + def.id + "\n";
    if (def.trigger) out += "  when " + detail::render_pattern_template(*def.trigger) + "\n";
    detail::print_steps(def.steps, 2, out);
  }
  return out;
}

// Structural equivalence via the canonical form (comments never survive
// parsing, so formatting is all that can differ).
inline bool equivalent(const ScenarioDoc& a, const ScenarioDoc& b) {
  return pretty_print(a) == pretty_print(b);
}

// --- lowering --------------------------------------------------------------------

namespace detail {

inline void flatten(const std::vector<Step>& steps, std::vector<scenweave::Step>& out) {
  for (const auto& s : steps) {
    if (const auto* r = std::get_if<Request>(&s.node)) {
      out.push_back(SyncStep{{r->event}, {}, {}});
    } else if (const auto* w = std::get_if<Wait>(&s.node)) {
      out.push_back(SyncStep{{}, {w->pattern}, {}});
    } else if (const auto* i = std::get_if<If>(&s.node)) {
      std::size_t guard_idx = out.size();
      out.push_back(GuardStep{i->condition, 0});
      flatten(i->block, out);
      std::get<GuardStep>(out[guard_idx]).exit = out.size();
    } else {
      const auto& a = std::get<Assert>(s.node);
      out.push_back(AssertStep{a.condition, a.message});
    }
  }
}

}  // namespace detail

inline Scenario lower(const ScenarioDef& def) {
  Scenario sc;
  sc.id = def.id;
  sc.trigger = def.trigger;
  detail::flatten(def.steps, sc.body);
  return sc;
}

inline ScenarioProgram lower(const ScenarioDoc& doc) {
  ScenarioProgram p;
  p.id = doc.program_id;
  p.objects = doc.objects;
  for (const auto& def : doc.scenarios) p.scenarios.push_back(lower(def));
  return p;
}

}  // namespace scenweave::dsl
