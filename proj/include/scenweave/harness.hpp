#pragma once

// Runs test programs against a specification program and turns the joint
// execution into a verdict:
//
//   pass          every test scenario ran to completion
//   fail          an assertion tripped (test or specification side)
//   inconclusive  the run ended before the test completed -- either nothing
//                 was left to do (quiescence) or the step budget ran out
//
// The test program is registered first so its stimuli win selection ties
// against specification reactions.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scenweave/engine.hpp"

namespace scenweave {

struct Verdict {
  enum class Kind { Pass, Fail, Inconclusive };
  Kind kind = Kind::Inconclusive;
  std::string detail;  // failure message or reason for inconclusiveness

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline const char* verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Pass: return "pass";
    case Verdict::Kind::Fail: return "fail";
    case Verdict::Kind::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct TestRun {
  std::string test_id;          // program id of the test program
  std::string spec_program_id;
  std::int64_t now_ms = 0;
  ExecutionTrace trace;
  Verdict verdict;
};

struct SuiteReport {
  std::vector<TestRun> runs;
  // Optional cross-references into a system model, keyed by test id (filled
  // in by tooling that knows the model; empty otherwise).
  std::map<std::string, std::vector<std::string>> links;

  std::size_t count(Verdict::Kind k) const {
    std::size_t n = 0;
    for (const auto& r : runs)
      if (r.verdict.kind == k) ++n;
    return n;
  }
  bool all_passed() const { return count(Verdict::Kind::Pass) == runs.size(); }
};

inline TestRun run_test(const ScenarioProgram& spec, const ScenarioProgram& test,
                        std::size_t budget = kDefaultStepBudget, std::int64_t now_ms = 0) {
  std::vector<ScenarioProgram> programs{test, spec};
  EngineState state = activate(programs, now_ms);
  TestRun result;
  result.test_id = test.id;
  result.spec_program_id = spec.id;
  result.now_ms = now_ms;
  result.trace = run(state, budget);

  if (const auto* failure = std::get_if<AssertionFailure>(&result.trace.terminal)) {
    result.verdict = Verdict{Verdict::Kind::Fail, failure->scenario_id + ": " + failure->message};
    return result;
  }

  // The test is done when none of its scenarios is still running or waiting.
  // Triggered helpers rest in Dormant and do not count against completion.
  bool complete = true;
  for (const auto& st : state.scenarios())
    if (st.program_id == test.id && st.phase == Phase::Active) complete = false;

  if (complete) {
    result.verdict = Verdict{Verdict::Kind::Pass, ""};
  } else if (std::holds_alternative<BudgetExhausted>(result.trace.terminal)) {
    result.verdict = Verdict{Verdict::Kind::Inconclusive, "step budget exhausted"};
  } else {
    result.verdict = Verdict{Verdict::Kind::Inconclusive, "quiescence before the test completed"};
  }
  return result;
}

inline SuiteReport run_suite(const ScenarioProgram& spec, std::span<const ScenarioProgram> tests,
                             std::size_t budget = kDefaultStepBudget, std::int64_t now_ms = 0) {
  SuiteReport report;
  for (const auto& t : tests) report.runs.push_back(run_test(spec, t, budget, now_ms));
  return report;
}

// Plain-text table: test id, verdict, steps, linked model elements, detail.
inline std::string render_report(const SuiteReport& report) {
  std::vector<std::array<std::string, 5>> rows;
  rows.push_back({"test", "verdict", "steps", "links", "detail"});
  for (const auto& r : report.runs) {
    std::string links = "-";
    if (auto it = report.links.find(r.test_id); it != report.links.end() && !it->second.empty()) {
      links.clear();
      for (const auto& id : it->second) {
        if (!links.empty()) links += ",";
        links += id;
      }
    }
    rows.push_back({r.test_id, verdict_name(r.verdict.kind), std::to_string(r.trace.steps.size()),
                    links, r.verdict.detail.empty() ? "-" : r.verdict.detail});
  }

  std::array<std::size_t, 5> width{};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += "\n";
  }
  out += std::to_string(report.runs.size()) + " run, " +
         std::to_string(report.count(Verdict::Kind::Pass)) + " passed, " +
         std::to_string(report.count(Verdict::Kind::Fail)) + " failed, " +
         std::to_string(report.count(Verdict::Kind::Inconclusive)) + " inconclusive\n";
  return out;
}

}  // namespace scenweave
