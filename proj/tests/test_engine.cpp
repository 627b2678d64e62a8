#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "scenweave/engine.hpp"
#include "support/builders.hpp"
#include "support/random_programs.hpp"

using namespace scenweave;
using namespace tb;

namespace {

std::vector<std::string> trace_lines(const ExecutionTrace& tr) {
  std::vector<std::string> out;
  for (const auto& s : tr.steps) out.push_back(render_trace_step(s));
  return out;
}

}  // namespace

TEST_CASE("an untriggered scenario starts at its first sync point") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {request_step(req("a", "b", "ping")), request_step(req("a", "b", "pong"))})});
  EngineState st = activate(p);
  REQUIRE(st.scenarios().size() == 1);
  CHECK(st.scenarios()[0].phase == Phase::Active);
  CHECK(st.scenarios()[0].pc == 0);
  REQUIRE(st.scenarios()[0].sync);
  CHECK(st.requested_events().size() == 1);
}

TEST_CASE("a triggered scenario is dormant until its trigger matches") {
  auto spec = timer_charging_spec();
  auto test = timer_charging_test();
  std::vector<ScenarioProgram> programs{test, spec};
  EngineState st = activate(programs);

  const ScenarioStatus* spec_state = st.find("forward_timer_charging_request");
  REQUIRE(spec_state);
  CHECK(spec_state->phase == Phase::Dormant);

  const ScenarioStatus* test_state = st.find("TM_708.1");
  REQUIRE(test_state);
  CHECK(test_state->phase == Phase::Active);
  CHECK(test_state->pc == 0);  // paused at its first request
}

TEST_CASE("joint run of the timer-charging test and specification") {
  // Hand-derived execution: the configuration is requested and forwarded, then
  // the dormant forwarding scenario wakes on the stack request, re-emits it to
  // the charging handler, passes its guard and delivers the configuration.
  auto spec = timer_charging_spec();
  auto test = timer_charging_test();
  std::vector<ScenarioProgram> programs{test, spec};
  EngineState st = activate(programs, 0);
  ExecutionTrace tr = run(st);

  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: customer -> hmiControlUnit . configureTimerCharging(true, 100, @21600000)",
      "step 1: hmiControlUnit -> obc.comStack . timerChargingRequest(true, 100, @21600000)",
      "step 2: obc.comStack -> obc.rtcHandler . timerChargingRequest(true, 100, @21600000)",
      "step 3: obc.rtcHandler -> obc.application . timerChargingUserCfg(100, @21600000)",
  });
  CHECK(tr.terminal == Terminal{Quiescence{}});

  REQUIRE(tr.steps.size() == 4);
  CHECK(tr.steps[0].advanced == std::vector<std::string>{"TM_708.1"});
  CHECK(tr.steps[1].advanced ==
        std::vector<std::string>{"TM_708.1", "forward_timer_charging_request"});
  CHECK(tr.steps[2].advanced == std::vector<std::string>{"forward_timer_charging_request"});
  CHECK(tr.steps[3].advanced ==
        std::vector<std::string>{"TM_708.1", "forward_timer_charging_request"});

  // The test ran to completion; the triggered specification scenario re-armed.
  CHECK(st.find("TM_708.1")->phase == Phase::Completed);
  CHECK(st.find("forward_timer_charging_request")->phase == Phase::Dormant);
  CHECK(st.find("forward_timer_charging_request")->completions == 1);
}

TEST_CASE("trigger bindings capture the matched parameters") {
  auto spec = timer_charging_spec();
  auto test = timer_charging_test();
  std::vector<ScenarioProgram> programs{test, spec};
  EngineState st = activate(programs, 0);

  step(st);  // configureTimerCharging
  step(st);  // timerChargingRequest reaches the stack, trigger fires

  const ScenarioStatus* spec_state = st.find("forward_timer_charging_request");
  REQUIRE(spec_state);
  CHECK(spec_state->phase == Phase::Active);
  CHECK(spec_state->bindings.at("activate") == Value{true});
  CHECK(spec_state->bindings.at("soc") == Value{std::int64_t{100}});
  CHECK(spec_state->bindings.at("departure") == Value{Timestamp{21600000}});
}

TEST_CASE("a mutated specification parameter trips the test assertion") {
  auto spec = timer_charging_spec(/*forwarded_soc_delta=*/1);
  auto test = timer_charging_test();
  std::vector<ScenarioProgram> programs{test, spec};
  EngineState st = activate(programs, 0);
  ExecutionTrace tr = run(st);

  REQUIRE(tr.steps.size() == 4);
  CHECK(render_trace_step(tr.steps[3]) ==
        "step 3: obc.rtcHandler -> obc.application . timerChargingUserCfg(99, @21600000)");
  const auto* failure = std::get_if<AssertionFailure>(&tr.terminal);
  REQUIRE(failure);
  CHECK(failure->scenario_id == "TM_708.1");
  CHECK(failure->message == "timer charging configuration must reach the application unchanged");
}

TEST_CASE("selection prefers earlier registration, then declaration order") {
  SyncStep both;
  both.requested.push_back(req("a", "b", "first"));
  both.requested.push_back(req("a", "b", "second"));
  auto p1 = prog("p1", {"a", "b"}, {scen("s1", {Step{both}})});
  auto p2 = prog("p2", {"a", "b"}, {scen("s2", {request_step(req("a", "b", "other"))})});

  std::vector<ScenarioProgram> programs{p1, p2};
  EngineState st = activate(programs);
  auto out = step(st);
  const auto* sel = std::get_if<Selected>(&out);
  REQUIRE(sel);
  CHECK(sel->event.label == "first");

  std::vector<ScenarioProgram> reversed{p2, p1};
  EngineState st2 = activate(reversed);
  auto out2 = step(st2);
  CHECK(std::get<Selected>(out2).event.label == "other");
}

TEST_CASE("forbidden patterns veto selection until they are dropped") {
  // s1 wants to send `go` twice; s2 forbids `go` until it has seen `unlock`.
  SyncStep blocker;
  blocker.waited.push_back(pat("*", "b", "unlock"));
  blocker.forbidden.push_back(pat("*", "b", "go"));

  auto p = prog("p", {"a", "b"},
                {scen("sender", {request_step(req("a", "b", "go")), request_step(req("a", "b", "done"))}),
                 scen("unlocker", {request_step(req("a", "b", "unlock"))}),
                 scen("blocker", {Step{blocker}})});
  EngineState st = activate(p);

  // `go` is requested first but forbidden; `unlock` is the first selectable.
  auto selectable = st.selectable_events();
  REQUIRE(selectable.size() == 1);
  CHECK(selectable[0].label == "unlock");
  CHECK(st.is_forbidden(Event{obj("a"), obj("b"), "go", {}}));

  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . unlock()",
      "step 1: a -> b . go()",
      "step 2: a -> b . done()",
  });
  CHECK(tr.terminal == Terminal{Quiescence{}});
}

TEST_CASE("quiescence exactly when nothing selectable remains") {
  // A lone waiter never runs: no one requests anything.
  auto p = prog("p", {"a", "b"}, {scen("w", {wait_step(pat("*", "b", "never"))})});
  EngineState st = activate(p);
  CHECK(st.selectable_events().empty());
  auto out = step(st);
  CHECK(std::holds_alternative<QuiescentNow>(out));
  ExecutionTrace tr = run(st);
  CHECK(tr.steps.empty());
  CHECK(tr.terminal == Terminal{Quiescence{}});
}

TEST_CASE("waited patterns advance bystanders and bind their free names") {
  auto p = prog(
      "p", {"a", "b"},
      {scen("speaker", {request_step(req("a", "b", "tell", {lit_i(7), lit_i(9)}))}),
       scen("listener", {wait_step(pat("*", "b", "tell", {free_slot("x"), free_slot("y")})),
                         request_step(req("b", "a", "echo", {name("x"), name("y")}))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . tell(7, 9)",
      "step 1: b -> a . echo(7, 9)",
  });
}

TEST_CASE("conflicting bindings keep a waited pattern from matching") {
  // The listener captures x from the first message, then waits for a second
  // message carrying the same x; a different value must not wake it.
  auto p = prog("p", {"a", "b"},
                {scen("speaker", {request_step(req("a", "b", "tell", {lit_i(1)})),
                                  request_step(req("a", "b", "tell", {lit_i(2)}))}),
                 scen("listener", {wait_step(pat("*", "b", "tell", {free_slot("x")})),
                                   wait_step(pat("*", "b", "tell", {free_slot("x")})),
                                   request_step(req("b", "a", "same", {name("x")}))})});
  // Second wait re-uses the bound x: only an equal value matches, and tell(2)
  // carries a different one, so the listener stays put.
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . tell(1)",
      "step 1: a -> b . tell(2)",
  });
  CHECK(st.find("listener")->phase == Phase::Active);
  CHECK(st.find("listener")->pc == 1);
}

TEST_CASE("a triggered scenario re-arms after completing") {
  // The poker waits for each acknowledgement, so the reactor is dormant again
  // when the second poke arrives and reacts a second time.
  auto p = prog("p", {"a", "b"},
                {scen("poker", {request_step(req("a", "b", "poke", {lit_i(1)})),
                                wait_step(pat("b", "a", "ack", {free_slot("k1")})),
                                request_step(req("a", "b", "poke", {lit_i(2)})),
                                wait_step(pat("b", "a", "ack", {free_slot("k2")}))}),
                 scen("reactor", pat("*", "b", "poke", {free_slot("n")}),
                      {request_step(req("b", "a", "ack", {name("n")}))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . poke(1)",
      "step 1: b -> a . ack(1)",
      "step 2: a -> b . poke(2)",
      "step 3: b -> a . ack(2)",
  });
  CHECK(st.find("reactor")->completions == 2);
  CHECK(st.find("reactor")->phase == Phase::Dormant);
  CHECK(st.find("poker")->phase == Phase::Completed);
}

TEST_CASE("a running scenario does not re-trigger on overlapping events") {
  // The second poke arrives while the reactor is still busy acknowledging the
  // first one; nothing synchronises the poker, so that poke goes unanswered.
  auto p = prog("p", {"a", "b"},
                {scen("poker", {request_step(req("a", "b", "poke", {lit_i(1)})),
                                request_step(req("a", "b", "poke", {lit_i(2)}))}),
                 scen("reactor", pat("*", "b", "poke", {free_slot("n")}),
                      {request_step(req("b", "a", "ack", {name("n")}))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . poke(1)",
      "step 1: a -> b . poke(2)",
      "step 2: b -> a . ack(1)",
  });
  CHECK(st.find("reactor")->completions == 1);
}

TEST_CASE("guards skip their block when false") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {request_step(req("a", "b", "start", {lit_i(0)})),
                            guard(make_binary(BinaryOp::Gt, lit_i(0), lit_i(5)), 3),
                            request_step(req("a", "b", "skipped")),
                            request_step(req("a", "b", "after"))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(trace_lines(tr) == std::vector<std::string>{
      "step 0: a -> b . start(0)",
      "step 1: a -> b . after()",
  });
}

TEST_CASE("guards skip their block when false (with arguments rendered)") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {guard(make_binary(BinaryOp::Gt, lit_i(7), lit_i(5)), 2),
                            request_step(req("a", "b", "taken"))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  REQUIRE(tr.steps.size() == 1);
  CHECK(render_trace_step(tr.steps[0]) == "step 0: a -> b . taken()");
}

TEST_CASE("a failing assertion halts the run with scenario and message") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {request_step(req("a", "b", "go")),
                            assert_step(make_binary(BinaryOp::Eq, lit_i(1), lit_i(2)), "one is not two"),
                            request_step(req("a", "b", "unreached"))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  REQUIRE(tr.steps.size() == 1);
  const auto* failure = std::get_if<AssertionFailure>(&tr.terminal);
  REQUIRE(failure);
  CHECK(failure->scenario_id == "s");
  CHECK(failure->message == "one is not two");
}

TEST_CASE("an assertion without a message reports the condition") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {assert_step(make_binary(BinaryOp::Eq, lit_i(1), lit_i(2)))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(tr.steps.empty());
  const auto* failure = std::get_if<AssertionFailure>(&tr.terminal);
  REQUIRE(failure);
  CHECK(failure->message == "assertion failed: 1 == 2");
}

TEST_CASE("evaluation errors surface as assertion failures") {
  auto p = prog("p", {"a", "b"},
                {scen("s", {guard(make_binary(BinaryOp::Lt, lit_i(1), lit_ts(2)), 1)})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  const auto* failure = std::get_if<AssertionFailure>(&tr.terminal);
  REQUIRE(failure);
  CHECK(failure->scenario_id == "s");
  CHECK(failure->message.find("cannot order") != std::string::npos);
}

TEST_CASE("the step budget cuts off livelocks") {
  // Two reactive scenarios feed each other forever once kicked.
  auto p = prog("p", {"a", "b"},
                {scen("ping_side", pat("*", "b", "ping"), {request_step(req("b", "a", "pong"))}),
                 scen("pong_side", pat("*", "a", "pong"), {request_step(req("a", "b", "ping"))}),
                 scen("kick", {request_step(req("a", "b", "ping"))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st, 50);
  CHECK(tr.steps.size() == 50);
  CHECK(tr.terminal == Terminal{BudgetExhausted{}});
}

TEST_CASE("a run ending exactly at the budget is still quiescence") {
  auto p = prog("p", {"a", "b"}, {scen("s", {request_step(req("a", "b", "one"))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st, 1);
  CHECK(tr.steps.size() == 1);
  CHECK(tr.terminal == Terminal{Quiescence{}});
}

TEST_CASE("activation validates the program shape") {
  SECTION("duplicate scenario ids") {
    auto p = prog("p", {"a", "b"},
                  {scen("s", {request_step(req("a", "b", "x"))}),
                   scen("s", {request_step(req("a", "b", "y"))})});
    CHECK_THROWS_AS(activate(p), ConfigError);
  }
  SECTION("duplicate program ids") {
    auto p1 = prog("p", {"a", "b"}, {scen("s1", {request_step(req("a", "b", "x"))})});
    auto p2 = prog("p", {"a", "b"}, {scen("s2", {request_step(req("a", "b", "y"))})});
    std::vector<ScenarioProgram> programs{p1, p2};
    CHECK_THROWS_AS(activate(programs), ConfigError);
  }
  SECTION("undeclared object") {
    auto p = prog("p", {"a"}, {scen("s", {request_step(req("a", "ghost", "x"))})});
    CHECK_THROWS_WITH(activate(p), Catch::Matchers::ContainsSubstring("ghost"));
  }
  SECTION("empty sync point") {
    auto p = prog("p", {"a", "b"}, {scen("s", {Step{SyncStep{}}})});
    CHECK_THROWS_AS(activate(p), ConfigError);
  }
  SECTION("guard exit out of range") {
    auto p = prog("p", {"a", "b"}, {scen("s", {guard(lit_b(true), 7)})});
    CHECK_THROWS_AS(activate(p), ConfigError);
  }
}

TEST_CASE("an assertion failing during activation halts before any step") {
  auto p = prog("p", {"a", "b"},
                {scen("doomed", {assert_step(lit_b(false), "failed on arrival")})});
  EngineState st = activate(p);
  CHECK(st.halted());
  ExecutionTrace tr = run(st);
  CHECK(tr.steps.empty());
  CHECK(std::get<AssertionFailure>(tr.terminal).message == "failed on arrival");
}

TEST_CASE("trace rendering includes the terminal line") {
  auto p = prog("p", {"a", "b"}, {scen("s", {request_step(req("a", "b", "hello", {lit_i(1)}))})});
  EngineState st = activate(p);
  ExecutionTrace tr = run(st);
  CHECK(render_trace(tr) == "step 0: a -> b . hello(1)\nquiescence\n");
}

TEST_CASE("randomized programs never violate the selection rules") {
  std::mt19937_64 rng(20260814);
  for (int iteration = 0; iteration < 300; ++iteration) {
    ScenarioProgram p = random_program(rng, "rp" + std::to_string(iteration));
    EngineState st = activate(p);

    for (int steps = 0; steps < 120; ++steps) {
      auto requested = st.requested_events();
      auto selectable = st.selectable_events();
      for (const auto& ev : selectable) {
        CAPTURE(iteration);
        CHECK(std::find(requested.begin(), requested.end(), ev) != requested.end());
        CHECK_FALSE(st.is_forbidden(ev));
      }

      auto out = step(st);
      if (std::holds_alternative<QuiescentNow>(out)) {
        // Quiescent exactly when nothing was selectable.
        CHECK(selectable.empty());
        break;
      }
      REQUIRE(std::holds_alternative<Selected>(out));
      const auto& sel = std::get<Selected>(out);
      REQUIRE_FALSE(selectable.empty());
      CHECK(sel.event == selectable.front());  // deterministic tie-break
      CHECK_FALSE(sel.advanced.empty());
      REQUIRE_FALSE(sel.failure.has_value());  // sync-only programs cannot assert
    }
  }
}

TEST_CASE("randomized programs replay to identical traces") {
  std::mt19937_64 rng(97531);
  for (int iteration = 0; iteration < 150; ++iteration) {
    ScenarioProgram p = random_program(rng, "rp" + std::to_string(iteration));
    EngineState s1 = activate(p);
    EngineState s2 = activate(p);
    ExecutionTrace t1 = run(s1, 200);
    ExecutionTrace t2 = run(s2, 200);
    CAPTURE(iteration);
    CHECK(t1 == t2);
    CHECK(render_trace(t1) == render_trace(t2));
  }
}
