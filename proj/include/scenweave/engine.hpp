#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scenweave/scenario.hpp"

namespace scenweave {

inline constexpr std::size_t kDefaultStepBudget = 10'000;

// --- traces ------------------------------------------------------------------

struct TraceStep {
  std::size_t index = 0;
  Event event;
  std::vector<std::string> advanced;  // scenario ids that moved on this event

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct Quiescence {
  friend bool operator==(const Quiescence&, const Quiescence&) = default;
};
struct BudgetExhausted {
  friend bool operator==(const BudgetExhausted&, const BudgetExhausted&) = default;
};
struct AssertionFailure {
  std::string scenario_id;
  std::string message;
  friend bool operator==(const AssertionFailure&, const AssertionFailure&) = default;
};

using Terminal = std::variant<Quiescence, BudgetExhausted, AssertionFailure>;

struct ExecutionTrace {
  std::vector<TraceStep> steps;
  Terminal terminal = Quiescence{};

  friend bool operator==(const ExecutionTrace&, const ExecutionTrace&) = default;
};

inline std::string render_trace_step(const TraceStep& s) {
  return "step " + std::to_string(s.index) + ": " + render_event(s.event);
}

inline std::string render_terminal(const Terminal& t) {
  if (std::holds_alternative<Quiescence>(t)) return "quiescence";
  if (std::holds_alternative<BudgetExhausted>(t)) return "step budget exhausted";
  const auto& f = std::get<AssertionFailure>(t);
  return "assertion failure in " + f.scenario_id + ": " + f.message;
}

// One line per step followed by a terminal line.
inline std::string render_trace(const ExecutionTrace& tr) {
  std::string out;
  for (const auto& s : tr.steps) out += render_trace_step(s) + "\n";
  out += render_terminal(tr.terminal) + "\n";
  return out;
}

// --- engine state --------------------------------------------------------------

enum class Phase { Dormant, Active, Completed };

// Read-only view of one scenario's progress, exposed for tests and tools.
struct ScenarioStatus {
  std::string program_id;
  std::string scenario_id;
  Phase phase = Phase::Active;
  std::size_t pc = 0;               // body index of the sync step paused at
  std::size_t completions = 0;      // how many times the body ran to its end
  BindingMap bindings;
  std::optional<SyncPoint> sync;    // present while Active
};

class EngineState;

struct Selected {
  Event event;
  std::vector<std::string> advanced;
  // Set when applying the event tripped an assertion; the step still happened.
  std::optional<AssertionFailure> failure;
};
struct QuiescentNow {};
struct Halted {
  AssertionFailure failure;
};
using StepOutcome = std::variant<Selected, QuiescentNow, Halted>;

EngineState activate(std::span<const ScenarioProgram> programs, std::int64_t now_ms);
StepOutcome step(EngineState& state);

class EngineState {
 public:
  std::int64_t now_ms() const { return now_ms_; }

  const std::vector<ScenarioStatus>& scenarios() const { return states_; }

  const ScenarioStatus* find(const std::string& scenario_id) const {
    for (const auto& st : states_)
      if (st.scenario_id == scenario_id) return &st;
    return nullptr;
  }

  // All events currently requested by active scenarios, in selection order,
  // duplicates collapsed.
  std::vector<Event> requested_events() const {
    std::vector<Event> out;
    for (const auto& st : states_) {
      if (st.phase != Phase::Active) continue;
      for (const auto& ev : st.sync->requested)
        if (std::find(out.begin(), out.end(), ev) == out.end()) out.push_back(ev);
    }
    return out;
  }

  bool is_forbidden(const Event& ev) const {
    for (const auto& st : states_) {
      if (st.phase != Phase::Active) continue;
      for (const auto& p : st.sync->forbidden)
        if (match(p, ev)) return true;
    }
    return false;
  }

  // Requested events that survive the forbidden filter.
  std::vector<Event> selectable_events() const {
    std::vector<Event> out;
    for (const Event& ev : requested_events())
      if (!is_forbidden(ev)) out.push_back(ev);
    return out;
  }

  bool halted() const { return pending_failure_.has_value(); }

  const std::optional<AssertionFailure>& pending_failure() const { return pending_failure_; }

 private:
  friend EngineState activate(std::span<const ScenarioProgram>, std::int64_t);
  friend StepOutcome step(EngineState&);

  // Runs body steps from `from` until the scenario pauses at a sync point or
  // its body ends.  Returns a failure if a guard or assertion went wrong.
  std::optional<AssertionFailure> advance(std::size_t idx, std::size_t from) {
    const Scenario& sc = registry_[idx];
    ScenarioStatus& st = states_[idx];
    EvalContext ctx{&st.bindings, now_ms_};
    std::size_t pc = from;
    while (pc < sc.body.size()) {
      if (const auto* sync = std::get_if<SyncStep>(&sc.body[pc])) {
        SyncPoint sp;
        try {
          for (const auto& t : sync->requested) sp.requested.push_back(instantiate(t, ctx));
          for (const auto& t : sync->waited) sp.waited.push_back(instantiate(t, ctx));
          for (const auto& t : sync->forbidden) sp.forbidden.push_back(instantiate(t, ctx));
        } catch (const EvalError& err) {
          return AssertionFailure{sc.id, err.what()};
        }
        st.phase = Phase::Active;
        st.pc = pc;
        st.sync = std::move(sp);
        return std::nullopt;
      }
      if (const auto* guard = std::get_if<GuardStep>(&sc.body[pc])) {
        bool cond;
        try {
          cond = detail::eval_bool(guard->condition, ctx, "guard");
        } catch (const EvalError& err) {
          return AssertionFailure{sc.id, err.what()};
        }
        pc = cond ? pc + 1 : guard->exit;
        continue;
      }
      const auto& as = std::get<AssertStep>(sc.body[pc]);
      bool cond;
      try {
        cond = detail::eval_bool(as.condition, ctx, "assertion");
      } catch (const EvalError& err) {
        return AssertionFailure{sc.id, err.what()};
      }
      if (!cond) {
        std::string msg = as.message.empty() ? "assertion failed: " + pretty_print(as.condition)
                                             : as.message;
        return AssertionFailure{sc.id, msg};
      }
      ++pc;
    }
    // Body finished: triggered scenarios re-arm, others complete for good.
    st.sync.reset();
    st.bindings.clear();
    st.pc = 0;
    ++st.completions;
    st.phase = sc.trigger ? Phase::Dormant : Phase::Completed;
    return std::nullopt;
  }

  std::vector<Scenario> registry_;               // registration order
  std::vector<ScenarioStatus> states_;           // parallel to registry_
  std::vector<EventPattern> triggers_;           // parallel; unused slot when no trigger
  std::vector<bool> has_trigger_;
  std::int64_t now_ms_ = 0;
  std::optional<AssertionFailure> pending_failure_;
};

// --- activation ----------------------------------------------------------------

namespace detail {

inline void validate_object(const std::set<std::string>& declared, const ObjectRef& ref,
                            const std::string& program, const std::string& scenario) {
  if (ref.path.empty())
    throw ConfigError("program '" + program + "': scenario '" + scenario + "' uses an empty object reference");
  if (!declared.count(ref.qualified()))
    throw ConfigError("program '" + program + "': scenario '" + scenario +
                      "' references undeclared object '" + ref.qualified() + "'");
}

inline void validate_pattern(const std::set<std::string>& declared, const PatternTemplate& p,
                             const std::string& program, const std::string& scenario) {
  if (p.sender) validate_object(declared, *p.sender, program, scenario);
  validate_object(declared, p.receiver, program, scenario);
}

inline void validate_program(const ScenarioProgram& program) {
  if (program.id.empty()) throw ConfigError("program id must not be empty");
  std::set<std::string> declared;
  for (const auto& o : program.objects) declared.insert(o.qualified());
  for (const auto& sc : program.scenarios) {
    if (sc.id.empty())
      throw ConfigError("program '" + program.id + "' contains a scenario without an id");
    if (sc.trigger) validate_pattern(declared, *sc.trigger, program.id, sc.id);
    for (std::size_t i = 0; i < sc.body.size(); ++i) {
      if (const auto* sync = std::get_if<SyncStep>(&sc.body[i])) {
        if (sync->requested.empty() && sync->waited.empty() && sync->forbidden.empty())
          throw ConfigError("program '" + program.id + "': scenario '" + sc.id +
                            "' has a synchronisation point with nothing to request, wait for or forbid");
        for (const auto& t : sync->requested) {
          validate_object(declared, t.sender, program.id, sc.id);
          validate_object(declared, t.receiver, program.id, sc.id);
        }
        for (const auto& t : sync->waited) validate_pattern(declared, t, program.id, sc.id);
        for (const auto& t : sync->forbidden) validate_pattern(declared, t, program.id, sc.id);
      } else if (const auto* guard = std::get_if<GuardStep>(&sc.body[i])) {
        if (guard->exit > sc.body.size())
          throw ConfigError("program '" + program.id + "': scenario '" + sc.id +
                            "' has a guard jumping past the end of the body");
      }
    }
  }
}

}  // namespace detail

inline EngineState activate(std::span<const ScenarioProgram> programs, std::int64_t now_ms = 0) {
  std::set<std::string> program_ids;
  std::set<std::string> scenario_ids;
  for (const auto& p : programs) {
    detail::validate_program(p);
    if (!program_ids.insert(p.id).second)
      throw ConfigError("program id '" + p.id + "' registered twice");
    for (const auto& sc : p.scenarios)
      if (!scenario_ids.insert(sc.id).second)
        throw ConfigError("scenario id '" + sc.id + "' declared twice");
  }

  EngineState state;
  state.now_ms_ = now_ms;
  for (const auto& p : programs) {
    for (const auto& sc : p.scenarios) {
      state.registry_.push_back(sc);
      ScenarioStatus st;
      st.program_id = p.id;
      st.scenario_id = sc.id;
      state.states_.push_back(std::move(st));
      state.has_trigger_.push_back(sc.trigger.has_value());
      if (sc.trigger) {
        EvalContext ctx{nullptr, now_ms};
        try {
          state.triggers_.push_back(instantiate(*sc.trigger, ctx));
        } catch (const EvalError& err) {
          throw ConfigError("program '" + p.id + "': trigger of scenario '" + sc.id +
                            "' cannot be evaluated: " + err.what());
        }
        state.states_.back().phase = Phase::Dormant;
      } else {
        state.triggers_.emplace_back();
      }
    }
  }

  // Untriggered scenarios start running right away.
  for (std::size_t i = 0; i < state.registry_.size(); ++i) {
    if (state.has_trigger_[i]) continue;
    if (auto failure = state.advance(i, 0); failure && !state.pending_failure_)
      state.pending_failure_ = std::move(failure);
  }
  return state;
}

inline EngineState activate(const ScenarioProgram& program, std::int64_t now_ms = 0) {
  return activate(std::span<const ScenarioProgram>(&program, 1), now_ms);
}

// --- stepping ------------------------------------------------------------------

// Selects the next event and applies it.  Selection order is deterministic:
// scenarios in registration order, requests in declaration order, first event
// that no active scenario forbids.  Every active scenario that requested the
// event or waits for a matching pattern advances, and so does every dormant
// scenario whose trigger matches.
inline StepOutcome step(EngineState& state) {
  if (state.pending_failure_) return Halted{*state.pending_failure_};

  const Event* chosen = nullptr;
  for (const auto& st : state.states_) {
    if (st.phase != Phase::Active) continue;
    for (const auto& ev : st.sync->requested) {
      if (!state.is_forbidden(ev)) {
        chosen = &ev;
        break;
      }
    }
    if (chosen) break;
  }
  if (!chosen) return QuiescentNow{};

  // The chosen pointer aliases state we are about to mutate; copy first.
  Event event = *chosen;
  Selected outcome{event, {}, std::nullopt};

  for (std::size_t i = 0; i < state.states_.size(); ++i) {
    ScenarioStatus& st = state.states_[i];
    if (st.phase == Phase::Active) {
      bool advanced = false;
      const auto& sync = *st.sync;
      if (std::find(sync.requested.begin(), sync.requested.end(), event) != sync.requested.end())
        advanced = true;
      for (const auto& p : sync.waited) {
        if (auto bound = match(p, event, st.bindings)) {
          st.bindings.insert(bound->begin(), bound->end());
          advanced = true;
          break;  // first matching pattern binds
        }
      }
      if (!advanced) continue;
      std::size_t resume = st.pc + 1;
      st.sync.reset();
      outcome.advanced.push_back(st.scenario_id);
      if (auto failure = state.advance(i, resume)) {
        outcome.failure = std::move(failure);
        state.pending_failure_ = outcome.failure;
        return outcome;
      }
    } else if (st.phase == Phase::Dormant) {
      auto bound = match(state.triggers_[i], event);
      if (!bound) continue;
      st.bindings = std::move(*bound);
      outcome.advanced.push_back(st.scenario_id);
      if (auto failure = state.advance(i, 0)) {
        outcome.failure = std::move(failure);
        state.pending_failure_ = outcome.failure;
        return outcome;
      }
    }
  }
  return outcome;
}

// Runs until quiescence, an assertion failure, or the step budget is spent.
inline ExecutionTrace run(EngineState& state, std::size_t budget = kDefaultStepBudget) {
  ExecutionTrace trace;
  while (true) {
    if (state.halted()) {
      trace.terminal = *state.pending_failure();
      return trace;
    }
    if (trace.steps.size() >= budget) {
      // Out of budget: it only counts as exhaustion if something could still run.
      trace.terminal = state.selectable_events().empty() ? Terminal{Quiescence{}}
                                                         : Terminal{BudgetExhausted{}};
      return trace;
    }
    StepOutcome out = step(state);
    if (std::holds_alternative<QuiescentNow>(out)) {
      trace.terminal = Quiescence{};
      return trace;
    }
    if (const auto* halted = std::get_if<Halted>(&out)) {
      trace.terminal = halted->failure;
      return trace;
    }
    auto& sel = std::get<Selected>(out);
    trace.steps.push_back(TraceStep{trace.steps.size(), std::move(sel.event), std::move(sel.advanced)});
    if (sel.failure) {
      trace.terminal = *sel.failure;
      return trace;
    }
  }
}

}  // namespace scenweave
