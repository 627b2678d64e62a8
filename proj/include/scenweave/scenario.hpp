#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scenweave/event.hpp"
#include "scenweave/expr.hpp"

namespace scenweave {

// Raised when a program is structurally unusable (duplicate ids, references
// to undeclared objects, empty synchronisation points...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -----------------------------------------------------------------------------
// Templates: the symbolic half of a scenario body.  Argument expressions are
// evaluated against the scenario's bindings when the scenario arrives at the
// step, which turns a template into a concrete Event / EventPattern.

struct EventTemplate {
  ObjectRef sender;
  ObjectRef receiver;
  std::string label;
  std::vector<ExprPtr> args;
};

// Pattern slots are either expressions (evaluated, then compared) or free
// names (captured from the matching event).
using SlotTemplate = std::variant<ExprPtr, FreeName>;

struct PatternTemplate {
  std::optional<ObjectRef> sender;  // nullopt = wildcard
  ObjectRef receiver;
  std::string label;
  std::vector<SlotTemplate> slots;
};

inline Event instantiate(const EventTemplate& t, const EvalContext& ctx) {
  Event e{t.sender, t.receiver, t.label, {}};
  e.parameters.reserve(t.args.size());
  for (const auto& a : t.args) e.parameters.push_back(eval_to_value(a, ctx));
  return e;
}

inline EventPattern instantiate(const PatternTemplate& t, const EvalContext& ctx) {
  EventPattern p{t.sender, t.receiver, t.label, {}};
  p.slots.reserve(t.slots.size());
  for (const auto& s : t.slots) {
    if (const auto* e = std::get_if<ExprPtr>(&s))
      p.slots.push_back(Slot{eval_to_value(*e, ctx)});
    else
      p.slots.push_back(Slot{std::get<FreeName>(s)});
  }
  return p;
}

// -----------------------------------------------------------------------------
// Runtime synchronisation point: what an active scenario offers the engine.
// `requested` are events the scenario wants to drive; `waited` are patterns it
// advances on without requesting them; `forbidden` are patterns that must not
// be selected while the scenario is paused here.

struct SyncPoint {
  std::vector<Event> requested;
  std::vector<EventPattern> waited;
  std::vector<EventPattern> forbidden;
};

// -----------------------------------------------------------------------------
// Scenario bodies are flat step lists.  Guards jump past their block when the
// condition is false; `exit` is the index of the first step after the block.

struct SyncStep {
  std::vector<EventTemplate> requested;
  std::vector<PatternTemplate> waited;
  std::vector<PatternTemplate> forbidden;
};

struct GuardStep {
  ExprPtr condition;
  std::size_t exit = 0;
};

struct AssertStep {
  ExprPtr condition;
  std::string message;
};

using Step = std::variant<SyncStep, GuardStep, AssertStep>;

// A scenario with a trigger is dormant until an event matches the trigger
// pattern; it then runs with the trigger's bindings, and re-arms after its
// body completes.  A scenario without a trigger starts immediately and
// completes for good.
struct Scenario {
  std::string id;
  std::optional<PatternTemplate> trigger;
  std::vector<Step> body;
};

struct ScenarioProgram {
  std::string id;
  std::vector<ObjectRef> objects;  // every object the scenarios may mention
  std::vector<Scenario> scenarios;
};

}  // namespace scenweave
