#pragma once

// Seeded generator for small random sync-only programs.  Used by the engine
// property tests and by the acceptance checks, so the distribution lives in
// one place.

#include <random>
#include <string>
#include <vector>

#include "scenweave/scenario.hpp"

namespace tb {

using namespace scenweave;

struct GenLimits {
  int max_scenarios = 5;
  int max_syncs = 4;
};

namespace gen_detail {

inline ObjectRef pick_object(std::mt19937_64& rng) {
  static const char* names[] = {"a", "b", "c"};
  return ObjectRef{{names[rng() % 3]}};
}

inline std::string pick_label(std::mt19937_64& rng) {
  return "m" + std::to_string(rng() % 4);
}

inline std::vector<ExprPtr> pick_args(std::mt19937_64& rng) {
  std::vector<ExprPtr> args;
  std::size_t n = rng() % 3;
  for (std::size_t i = 0; i < n; ++i)
    args.push_back(make_literal(Value{static_cast<std::int64_t>(rng() % 2)}));
  return args;
}

inline EventTemplate pick_event(std::mt19937_64& rng) {
  return EventTemplate{pick_object(rng), pick_object(rng), pick_label(rng), pick_args(rng)};
}

inline PatternTemplate pick_pattern(std::mt19937_64& rng) {
  PatternTemplate p;
  if (rng() % 2) p.sender = pick_object(rng);
  p.receiver = pick_object(rng);
  p.label = pick_label(rng);
  std::size_t n = rng() % 3;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() % 2)
      p.slots.push_back(SlotTemplate{FreeName{"v" + std::to_string(rng() % 3)}});
    else
      p.slots.push_back(SlotTemplate{make_literal(Value{static_cast<std::int64_t>(rng() % 2)})});
  }
  return p;
}

}  // namespace gen_detail

inline ScenarioProgram random_program(std::mt19937_64& rng, const std::string& id,
                                      GenLimits limits = {}) {
  using namespace gen_detail;
  ScenarioProgram prog;
  prog.id = id;
  prog.objects = {ObjectRef{{"a"}}, ObjectRef{{"b"}}, ObjectRef{{"c"}}};

  std::size_t scenario_count = 1 + rng() % limits.max_scenarios;
  for (std::size_t s = 0; s < scenario_count; ++s) {
    Scenario sc;
    sc.id = id + ".s" + std::to_string(s);
    if (rng() % 4 == 0) {
      PatternTemplate trigger = pick_pattern(rng);
      // Trigger free names must be distinct to be meaningful; the generator may
      // repeat them, which the engine treats as unification -- fine either way.
      sc.trigger = std::move(trigger);
    }
    std::size_t syncs = 1 + rng() % limits.max_syncs;
    for (std::size_t k = 0; k < syncs; ++k) {
      SyncStep sync;
      std::size_t requests = rng() % 3;
      for (std::size_t r = 0; r < requests; ++r) sync.requested.push_back(pick_event(rng));
      if (rng() % 2) sync.waited.push_back(pick_pattern(rng));
      if (rng() % 4 == 0) sync.forbidden.push_back(pick_pattern(rng));
      if (sync.requested.empty() && sync.waited.empty() && sync.forbidden.empty())
        sync.requested.push_back(pick_event(rng));
      sc.body.push_back(std::move(sync));
    }
    prog.scenarios.push_back(std::move(sc));
  }
  return prog;
}

}  // namespace tb
