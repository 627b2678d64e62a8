#pragma once

// Rule-based cause-effect extraction from natural-language requirements and
// MC/DC-style test-suite derivation over the resulting boolean gate network.
//
// Requirements arrive as tab-separated records `<id> TAB <kind> TAB <text>`.
// A requirement is *causal* when a conditional cue word (if, when, after,
// in case, unless, triggered by) separates an antecedent (causes) from a
// consequent (effect).  Causes split on coordinating and/or; `not`, `no`,
// `never` negate a cause; `unless` negates all causes and, by De Morgan,
// flips the combinator.  The gate network combines causes left-associatively
// with AND binding tighter than OR.  Test derivation picks, per cause, one
// assignment pair differing only in that cause with differing effect — the
// minimal independence suite (n+1 cases for pure AND/OR over n causes).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenweave/dsl.hpp"

namespace scenweave::ceg {

using dsl::Diagnostic;

// --- requirements file -----------------------------------------------------------

enum class RequirementKind { Functional, ArchitecturalQuality, Interface };

inline const char* kind_name(RequirementKind k) {
  switch (k) {
    case RequirementKind::Functional: return "functional";
    case RequirementKind::ArchitecturalQuality: return "architectural-quality";
    case RequirementKind::Interface: return "interface";
  }
  return "?";
}

inline std::optional<RequirementKind> parse_requirement_kind(const std::string& s) {
  if (s == "functional") return RequirementKind::Functional;
  if (s == "architectural-quality") return RequirementKind::ArchitecturalQuality;
  if (s == "interface") return RequirementKind::Interface;
  return std::nullopt;
}

struct Requirement {
  std::string id;
  RequirementKind kind = RequirementKind::Functional;
  std::string text;
};

struct RequirementsParse {
  std::vector<Requirement> requirements;
  std::vector<Diagnostic> diagnostics;
};

// One record per line: `<id> TAB <kind> TAB <text>`.  Blank lines and lines
// whose first non-space character is '#' are skipped.
inline RequirementsParse parse_requirements(const std::string& text) {
  RequirementsParse out;
  std::vector<std::string> seen_ids;
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

    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      out.diagnostics.push_back(
          {number, 1, "expected `<id> TAB <kind> TAB <text>`"});
      continue;
    }
    std::string id = line.substr(0, tab1);
    std::string kind = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::string body = line.substr(tab2 + 1);
    if (id.empty()) {
      out.diagnostics.push_back({number, 1, "requirement id must not be empty"});
      continue;
    }
    auto k = parse_requirement_kind(kind);
    if (!k) {
      out.diagnostics.push_back(
          {number, static_cast<int>(tab1) + 2,
           "unknown requirement kind '" + kind +
               "' (expected functional, architectural-quality, or interface)"});
      continue;
    }
    if (body.empty()) {
      out.diagnostics.push_back(
          {number, static_cast<int>(tab2) + 2, "requirement text must not be empty"});
      continue;
    }
    if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end()) {
      out.diagnostics.push_back({number, 1, "duplicate requirement id '" + id + "'"});
      continue;
    }
    seen_ids.push_back(id);
    out.requirements.push_back(Requirement{id, *k, body});
  }
  return out;
}

// --- conditional extraction ------------------------------------------------------

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CauseLink { None, And, Or };
enum class Combinator { Single, And, Or, Mixed };

struct Cause {
  std::string phrase;
  bool negated = false;
  CauseLink link = CauseLink::None;  // connective between this cause and the previous one
};

struct Conditional {
  std::vector<Cause> causes;
  Combinator combinator = Combinator::Single;
  std::vector<std::string> effects;
};

namespace detail {

inline std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Trailing sentence punctuation (and surrounding space) is insignificant.
inline std::string strip_terminal_punct(const std::string& s) {
  std::string out = trim(s);
  while (!out.empty()) {
    char c = out.back();
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == ',' || c == ' ' || c == '\t')
      out.pop_back();
    else
      break;
  }
  return out;
}

// Word-bounded occurrence of `word` (already lowercase; may contain spaces)
// in lowercase `text`, at or after `from`.
inline std::size_t find_word(const std::string& text, const std::string& word,
                             std::size_t from = 0) {
  std::size_t pos = from;
  while ((pos = text.find(word, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    std::size_t end = pos + word.size();
    bool right_ok = end >= text.size() || !is_word_char(text[end]);
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string::npos;
}

inline const std::vector<std::string>& cue_words() {
  static const std::vector<std::string> cues = {"if",     "when",         "after",
                                                "in case", "unless",      "triggered by"};
  return cues;
}

struct CueHit {
  std::size_t pos = 0;
  std::size_t len = 0;
  bool unless_cue = false;
};

inline std::optional<CueHit> leftmost_cue(const std::string& lower) {
  std::optional<CueHit> best;
  for (const auto& cue : cue_words()) {
    std::size_t p = find_word(lower, cue);
    if (p == std::string::npos) continue;
    if (!best || p < best->pos) best = CueHit{p, cue.size(), cue == "unless"};
  }
  return best;
}

struct Split {
  std::string antecedent;
  std::string consequent;
  bool unless_cue = false;
};

// Cue at sentence start: `<cue> <antecedent>, <consequent>`.
// Cue mid-sentence:      `<consequent> <cue> <antecedent>`.
inline std::optional<Split> split_conditional(const std::string& raw) {
  std::string text = strip_terminal_punct(raw);
  std::string lower = to_lower(text);
  auto cue = leftmost_cue(lower);
  if (!cue) return std::nullopt;

  bool at_start = true;
  for (std::size_t i = 0; i < cue->pos; ++i)
    if (is_word_char(text[i])) at_start = false;

  Split split;
  split.unless_cue = cue->unless_cue;
  if (at_start) {
    std::string rest = text.substr(cue->pos + cue->len);
    std::size_t comma = rest.find(',');
    if (comma == std::string::npos) return std::nullopt;
    split.antecedent = trim(rest.substr(0, comma));
    split.consequent = trim(rest.substr(comma + 1));
  } else {
    split.consequent = strip_terminal_punct(text.substr(0, cue->pos));
    split.antecedent = trim(text.substr(cue->pos + cue->len));
  }

  auto has_word = [](const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_word_char(c); });
  };
  if (!has_word(split.antecedent) || !has_word(split.consequent)) return std::nullopt;
  return split;
}

inline bool phrase_negated(const std::string& phrase) {
  std::string lower = to_lower(phrase);
  return find_word(lower, "not") != std::string::npos ||
         find_word(lower, "no") != std::string::npos ||
         find_word(lower, "never") != std::string::npos;
}

// Split an antecedent on word-bounded coordinating `and` / `or`.
inline std::vector<Cause> split_causes(const std::string& antecedent) {
  std::string lower = to_lower(antecedent);
  std::vector<Cause> causes;
  std::size_t start = 0;
  CauseLink pending = CauseLink::None;
  auto flush = [&](std::size_t end, CauseLink next) {
    std::string phrase = trim(antecedent.substr(start, end - start));
    while (!phrase.empty() && (phrase.back() == ',' || phrase.back() == ' ')) phrase.pop_back();
    while (!phrase.empty() && (phrase.front() == ',' || phrase.front() == ' ')) phrase.erase(0, 1);
    if (!phrase.empty())
      causes.push_back(Cause{phrase, phrase_negated(phrase), pending});
    pending = next;
  };
  std::size_t pos = 0;
  while (pos < lower.size()) {
    std::size_t p_and = find_word(lower, "and", pos);
    std::size_t p_or = find_word(lower, "or", pos);
    if (p_and == std::string::npos && p_or == std::string::npos) break;
    bool and_first = p_or == std::string::npos || (p_and != std::string::npos && p_and < p_or);
    std::size_t p = and_first ? p_and : p_or;
    flush(p, and_first ? CauseLink::And : CauseLink::Or);
    start = p + (and_first ? 3 : 2);
    pos = start;
  }
  flush(antecedent.size(), CauseLink::None);
  return causes;
}

}  // namespace detail

// Detector/extractor interface: the rule-based implementation below is the
// default; an external classifier can substitute behind the same contract.
class ConditionalExtractor {
 public:
  virtual ~ConditionalExtractor() = default;
  virtual bool classify(const std::string& text) const = 0;
  virtual Conditional extract(const std::string& text) const = 0;
};

class RuleBasedExtractor final : public ConditionalExtractor {
 public:
  bool classify(const std::string& text) const override {
    return detail::split_conditional(text).has_value();
  }

  Conditional extract(const std::string& text) const override {
    auto split = detail::split_conditional(text);
    if (!split)
      throw ExtractionError("cannot separate cause and effect in: \"" + detail::trim(text) +
                            "\"");
    Conditional c;
    c.causes = detail::split_causes(split->antecedent);
    if (c.causes.empty())
      throw ExtractionError("no extractable cause in: \"" + detail::trim(text) + "\"");
    c.effects.push_back(split->consequent);

    bool has_and = false;
    bool has_or = false;
    for (const auto& cause : c.causes) {
      has_and = has_and || cause.link == CauseLink::And;
      has_or = has_or || cause.link == CauseLink::Or;
    }
    c.combinator = has_and && has_or ? Combinator::Mixed
                   : has_and        ? Combinator::And
                   : has_or         ? Combinator::Or
                                    : Combinator::Single;

    if (split->unless_cue) {
      if (c.combinator == Combinator::Mixed)
        throw ExtractionError("'unless' with mixed and/or coordination in: \"" +
                              detail::trim(text) + "\"");
      for (auto& cause : c.causes) {
        cause.negated = !cause.negated;
        if (cause.link == CauseLink::And)
          cause.link = CauseLink::Or;
        else if (cause.link == CauseLink::Or)
          cause.link = CauseLink::And;
      }
      if (c.combinator == Combinator::And)
        c.combinator = Combinator::Or;
      else if (c.combinator == Combinator::Or)
        c.combinator = Combinator::And;
    }
    return c;
  }
};

inline const ConditionalExtractor& default_extractor() {
  static const RuleBasedExtractor extractor;
  return extractor;
}

inline bool classify(const std::string& text) { return default_extractor().classify(text); }
inline Conditional extract(const std::string& text) { return default_extractor().extract(text); }

// --- cause-effect graph ----------------------------------------------------------

struct Gate;
using GatePtr = std::shared_ptr<const Gate>;

struct Gate {
  enum class Kind { Cause, Not, And, Or };
  Kind kind = Kind::Cause;
  std::size_t cause = 0;        // Kind::Cause: index into CauseEffectGraph::causes
  std::vector<GatePtr> inputs;  // Not: exactly 1; And/Or: 2 or more
};

struct CauseEffectGraph {
  std::string requirement_id;
  std::vector<Cause> causes;         // leaf order equals surface order
  std::vector<std::string> effects;  // every effect observes the root gate
  GatePtr root;
};

inline bool eval_gate(const GatePtr& g, const std::vector<bool>& assignment) {
  switch (g->kind) {
    case Gate::Kind::Cause: return assignment.at(g->cause);
    case Gate::Kind::Not: return !eval_gate(g->inputs[0], assignment);
    case Gate::Kind::And:
      return std::all_of(g->inputs.begin(), g->inputs.end(),
                         [&](const GatePtr& in) { return eval_gate(in, assignment); });
    case Gate::Kind::Or:
      return std::any_of(g->inputs.begin(), g->inputs.end(),
                         [&](const GatePtr& in) { return eval_gate(in, assignment); });
  }
  return false;
}

// AND binds tighter than OR: runs of and-linked causes form AND groups, the
// groups join under one OR.
inline CauseEffectGraph build_graph(const std::string& requirement_id, const Conditional& c) {
  if (c.causes.empty()) throw ExtractionError("conditional has no causes");
  if (c.effects.empty()) throw ExtractionError("conditional has no effects");

  CauseEffectGraph g;
  g.requirement_id = requirement_id;
  g.causes = c.causes;
  g.effects = c.effects;

  auto leaf = [&](std::size_t i) -> GatePtr {
    auto node = std::make_shared<Gate>();
    node->kind = Gate::Kind::Cause;
    node->cause = i;
    if (!c.causes[i].negated) return node;
    auto neg = std::make_shared<Gate>();
    neg->kind = Gate::Kind::Not;
    neg->inputs.push_back(node);
    return neg;
  };
  auto combine = [](Gate::Kind kind, std::vector<GatePtr> inputs) -> GatePtr {
    if (inputs.size() == 1) return inputs[0];
    auto node = std::make_shared<Gate>();
    node->kind = kind;
    node->inputs = std::move(inputs);
    return node;
  };

  std::vector<GatePtr> groups;
  std::vector<GatePtr> current{leaf(0)};
  for (std::size_t i = 1; i < c.causes.size(); ++i) {
    if (c.causes[i].link == CauseLink::Or) {
      groups.push_back(combine(Gate::Kind::And, std::move(current)));
      current = {leaf(i)};
    } else {
      current.push_back(leaf(i));
    }
  }
  groups.push_back(combine(Gate::Kind::And, std::move(current)));
  g.root = combine(Gate::Kind::Or, std::move(groups));
  return g;
}

// --- test-case derivation --------------------------------------------------------

class DerivationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DerivedCase {
  std::string requirement_id;
  int index = 1;                  // 1-based position within the suite
  std::vector<bool> causes;       // assignment, aligned with CauseEffectGraph::causes
  bool effect = false;            // expected observation of every effect
};

// Minimal independence suite: per cause, the first assignment pair (scanning
// the remaining causes from all-true down to all-false) that differs only in
// that cause and flips the effect.  Effect-true cases come first, then the
// effect-false cases, each group in cause order.
inline std::vector<DerivedCase> derive_tests(const CauseEffectGraph& g) {
  const std::size_t n = g.causes.size();
  if (n == 0) throw DerivationError("graph has no causes");
  if (n > 20) throw DerivationError("too many causes for exhaustive derivation");

  auto eval_mask = [&](std::uint32_t mask) {
    std::vector<bool> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = (mask >> j) & 1u;
    return eval_gate(g.root, a);
  };
  auto spread = [&](std::uint32_t context, std::size_t skip) {
    std::uint32_t mask = 0;
    std::size_t bit = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == skip) continue;
      if ((context >> bit++) & 1u) mask |= std::uint32_t{1} << j;
    }
    return mask;
  };

  std::vector<std::uint32_t> positives;
  std::vector<std::uint32_t> negatives;
  auto note = [](std::vector<std::uint32_t>& list, std::uint32_t mask) {
    if (std::find(list.begin(), list.end(), mask) == list.end()) list.push_back(mask);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t contexts = std::uint32_t{1} << (n - 1);
    bool found = false;
    for (std::uint32_t v = contexts; v-- > 0;) {
      std::uint32_t off = spread(v, i);
      std::uint32_t on = off | (std::uint32_t{1} << i);
      bool r_off = eval_mask(off);
      bool r_on = eval_mask(on);
      if (r_off == r_on) continue;
      note(positives, r_on ? on : off);
      note(negatives, r_on ? off : on);
      found = true;
      break;
    }
    if (!found)
      throw DerivationError("cause '" + g.causes[i].phrase +
                            "' cannot independently affect the effect");
  }

  std::vector<DerivedCase> suite;
  auto emit = [&](std::uint32_t mask) {
    DerivedCase dc;
    dc.requirement_id = g.requirement_id;
    dc.index = static_cast<int>(suite.size()) + 1;
    dc.causes.resize(n);
    for (std::size_t j = 0; j < n; ++j) dc.causes[j] = (mask >> j) & 1u;
    dc.effect = eval_mask(mask);
    suite.push_back(std::move(dc));
  };
  for (std::uint32_t mask : positives) emit(mask);
  for (std::uint32_t mask : negatives) emit(mask);
  return suite;
}

// --- test skeleton emission ------------------------------------------------------

// A parseable scenario document with one test scenario stub per derived case,
// named `<requirement>.<index>`.  Cause assignments and the expected effect
// appear as comments for the engineer to replace with concrete events.
inline std::string emit_test_skeletons(const Requirement& req, const CauseEffectGraph& g,
                                       const std::vector<DerivedCase>& cases) {
  if (cases.empty()) return "";

  std::string program = req.id + "_tests";
  for (char& c : program)
    if (!detail::is_word_char(c)) c = '_';

  std::string out;
  out += "# Test skeletons for " + req.id + " (" + kind_name(req.kind) + ")\n";
  out += "# " + req.id + ": " + req.text + "\n";
  out += "program " + program + "\n";
  out += "\n";
  out += "object tester\n";
  out += "object sut\n";
  for (const auto& dc : cases) {
    out += "\n";
    out += "# " + req.id + " case " + std::to_string(dc.index) + "\n";
    for (std::size_t j = 0; j < g.causes.size(); ++j) {
      out += "#   cause " + std::to_string(j + 1) + " = " +
             (dc.causes[j] ? "true" : "false") + ": " + g.causes[j].phrase + "\n";
    }
    for (const auto& effect : g.effects) {
      out += dc.effect ? "#   expect the effect to be observed: " + effect + "\n"
                       : "#   expect the effect to stay absent: " + effect + "\n";
    }
    out += "test scenario " + req.id + "." + std::to_string(dc.index) + "\n";
    out += "  # TODO: replace the placeholder stimulus with concrete cause events\n";
    out += "  request tester -> sut . stimulus()\n";
    out += "  # TODO: observe the effect event; the wait keeps an unrefined stub inconclusive\n";
    out += "  wait * -> sut . effectObserved()\n";
  }
  return out;
}

}  // namespace scenweave::ceg
