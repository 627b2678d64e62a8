#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scenweave/value.hpp"

namespace scenweave {

// A (possibly nested) object taking part in an interaction, e.g. `hmiControlUnit`
// or `obc.comStack`.  The last path segment is the object's own name, the
// leading segments are its owners.
struct ObjectRef {
  std::vector<std::string> path;

  const std::string& name() const { return path.back(); }

  std::string qualified() const {
    std::string out;
    for (const auto& seg : path) {
      if (!out.empty()) out += '.';
      out += seg;
    }
    return out;
  }

  friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};

inline ObjectRef object_ref(std::initializer_list<std::string> segments) {
  return ObjectRef{std::vector<std::string>(segments)};
}

// A concrete message: sender and receiver objects, a label and bound parameters.
struct Event {
  ObjectRef sender;
  ObjectRef receiver;
  std::string label;
  std::vector<Value> parameters;

  friend bool operator==(const Event&, const Event&) = default;
};

// `a.b -> c . label(v1, v2)`
inline std::string render_event(const Event& e) {
  std::string out = e.sender.qualified() + " -> " + e.receiver.qualified() + " . " + e.label + "(";
  for (std::size_t i = 0; i < e.parameters.size(); ++i) {
    if (i) out += ", ";
    out += render_value(e.parameters[i]);
  }
  out += ")";
  return out;
}

// One parameter position of a pattern: either a bound value that must compare
// equal, or a free name that captures whatever the event carries there.
struct FreeName {
  std::string name;
  friend bool operator==(const FreeName&, const FreeName&) = default;
};

using Slot = std::variant<Value, FreeName>;

// A symbolic event.  The sender may be left open (wildcard); receiver and
// label are always concrete.
struct EventPattern {
  std::optional<ObjectRef> sender;  // nullopt matches any sender
  ObjectRef receiver;
  std::string label;
  std::vector<Slot> slots;

  friend bool operator==(const EventPattern&, const EventPattern&) = default;
};

inline std::string render_pattern(const EventPattern& p) {
  std::string out = p.sender ? p.sender->qualified() : "*";
  out += " -> " + p.receiver.qualified() + " . " + p.label + "(";
  for (std::size_t i = 0; i < p.slots.size(); ++i) {
    if (i) out += ", ";
    if (const auto* v = std::get_if<Value>(&p.slots[i]))
      out += render_value(*v);
    else
      out += std::get<FreeName>(p.slots[i]).name;
  }
  out += ")";
  return out;
}

// Deterministically ordered so everything derived from bindings is stable.
using BindingMap = std::map<std::string, Value>;

// Matches an event against a pattern.  `seed` carries bindings that are
// already fixed: a free name present in the seed behaves like a bound value
// (unification), so repeated names must agree across and within patterns.
// Returns the *new* bindings on success, std::nullopt on mismatch.
inline std::optional<BindingMap> match(const EventPattern& pattern, const Event& event,
                                       const BindingMap& seed) {
  if (pattern.sender && *pattern.sender != event.sender) return std::nullopt;
  if (pattern.receiver != event.receiver) return std::nullopt;
  if (pattern.label != event.label) return std::nullopt;
  if (pattern.slots.size() != event.parameters.size()) return std::nullopt;

  BindingMap bound;
  for (std::size_t i = 0; i < pattern.slots.size(); ++i) {
    const Value& param = event.parameters[i];
    if (const auto* v = std::get_if<Value>(&pattern.slots[i])) {
      if (*v != param) return std::nullopt;
      continue;
    }
    const std::string& name = std::get<FreeName>(pattern.slots[i]).name;
    if (auto it = seed.find(name); it != seed.end()) {
      if (it->second != param) return std::nullopt;
      continue;
    }
    if (auto it = bound.find(name); it != bound.end()) {
      if (it->second != param) return std::nullopt;
      continue;
    }
    bound.emplace(name, param);
  }
  return bound;
}

inline std::optional<BindingMap> match(const EventPattern& pattern, const Event& event) {
  return match(pattern, event, BindingMap{});
}

}  // namespace scenweave
