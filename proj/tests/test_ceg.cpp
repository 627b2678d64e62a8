#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scenweave/ceg.hpp"
#include "scenweave/dsl.hpp"
#include "support/io.hpp"
#include "support/mcdc_oracle.hpp"
#include "support/test_config.hpp"

using namespace scenweave;
using ceg::CauseLink;
using ceg::Combinator;

namespace {

const std::string kTm710 =
    "The software of the OBC must set the clock time of the Hardware-Timer (Real Time Clock) "
    "to the time contained in the CAN message \"CanMessageTimerCharging\" when triggered by "
    "the Signal \"TimerChargingRequest\".";

const std::string kTm708 =
    "After the customer has activated the timer charging function and set the destination SOC "
    "and the departure time, the software of the OBC shall transmit this data to the "
    "Application.";

// A synthetic conditional over n placeholder causes joined by one connective.
ceg::Conditional synthetic(int n, CauseLink link) {
  ceg::Conditional c;
  for (int i = 0; i < n; ++i) {
    ceg::Cause cause;
    cause.phrase = "cause " + std::to_string(i + 1) + " holds";
    cause.link = i == 0 ? CauseLink::None : link;
    c.causes.push_back(cause);
  }
  c.combinator = n == 1            ? Combinator::Single
                 : link == CauseLink::And ? Combinator::And
                                          : Combinator::Or;
  c.effects.push_back("the effect occurs");
  return c;
}

std::uint32_t case_mask(const ceg::DerivedCase& dc) {
  std::uint32_t mask = 0;
  for (std::size_t j = 0; j < dc.causes.size(); ++j)
    if (dc.causes[j]) mask |= std::uint32_t{1} << j;
  return mask;
}

}  // namespace

TEST_CASE("classification finds conditional cues at word boundaries") {
  CHECK(ceg::classify(kTm710));
  CHECK(ceg::classify(kTm708));
  CHECK_FALSE(ceg::classify("The OBC must support three-phase charging."));
  // 'specified' and 'notification' contain cue substrings but no cue words.
  CHECK_FALSE(ceg::classify("The specified notification value is stored."));
  CHECK(ceg::classify("In case of emergency, the charger stops."));
  CHECK(ceg::classify("Unless the driver overrides the setting, the configured limit is kept."));
  CHECK(ceg::classify("The relay opens when triggered by the watchdog."));

  // Invariant under surrounding whitespace and sentence-final punctuation.
  CHECK(ceg::classify("  " + kTm710 + "  "));
  CHECK(ceg::classify(kTm708.substr(0, kTm708.size() - 1) + "!"));

  // A cue without separable antecedent and consequent is not causal.
  CHECK_FALSE(ceg::classify("If."));
  CHECK_FALSE(ceg::classify("The charger reacts if."));
  CHECK_FALSE(ceg::classify("If the value rises the system reacts."));  // start cue needs a comma
}

TEST_CASE("extraction reproduces the annotated cause and effect structure") {
  auto c710 = ceg::extract(kTm710);
  REQUIRE(c710.causes.size() == 1);
  CHECK(c710.combinator == Combinator::Single);
  CHECK(c710.causes[0].phrase == "triggered by the Signal \"TimerChargingRequest\"");
  CHECK_FALSE(c710.causes[0].negated);
  REQUIRE(c710.effects.size() == 1);
  CHECK(c710.effects[0] ==
        "The software of the OBC must set the clock time of the Hardware-Timer (Real Time "
        "Clock) to the time contained in the CAN message \"CanMessageTimerCharging\"");

  auto c708 = ceg::extract(kTm708);
  REQUIRE(c708.causes.size() == 3);
  CHECK(c708.combinator == Combinator::And);
  CHECK(c708.causes[0].phrase == "the customer has activated the timer charging function");
  CHECK(c708.causes[1].phrase == "set the destination SOC");
  CHECK(c708.causes[2].phrase == "the departure time");
  CHECK(c708.causes[1].link == CauseLink::And);
  CHECK(c708.causes[2].link == CauseLink::And);
  REQUIRE(c708.effects.size() == 1);
  CHECK(c708.effects[0] == "the software of the OBC shall transmit this data to the Application");
}

TEST_CASE("constructed coordination, negation, and unless forms extract mechanically") {
  auto disjunction =
      ceg::extract("If the plug is locked or the relay is closed, the charger starts.");
  REQUIRE(disjunction.causes.size() == 2);
  CHECK(disjunction.combinator == Combinator::Or);
  CHECK(disjunction.causes[1].link == CauseLink::Or);

  auto negated = ceg::extract("If the clock time is not plausible, the charger deactivates.");
  REQUIRE(negated.causes.size() == 1);
  CHECK(negated.causes[0].negated);
  CHECK(negated.causes[0].phrase == "the clock time is not plausible");

  auto unless_single =
      ceg::extract("Unless the driver overrides the setting, the configured limit is kept.");
  REQUIRE(unless_single.causes.size() == 1);
  CHECK(unless_single.combinator == Combinator::Single);
  CHECK(unless_single.causes[0].negated);

  // De Morgan: unless (A and B) == (not A) or (not B).
  auto unless_pair = ceg::extract(
      "Unless the plug is locked and the relay is closed, the charger refuses to start.");
  REQUIRE(unless_pair.causes.size() == 2);
  CHECK(unless_pair.combinator == Combinator::Or);
  CHECK(unless_pair.causes[0].negated);
  CHECK(unless_pair.causes[1].negated);
  CHECK(unless_pair.causes[1].link == CauseLink::Or);

  auto mixed = ceg::extract(
      "If the plug is locked and the relay is closed or the override is active, the charger "
      "starts.");
  REQUIRE(mixed.causes.size() == 3);
  CHECK(mixed.combinator == Combinator::Mixed);
  CHECK(mixed.causes[1].link == CauseLink::And);
  CHECK(mixed.causes[2].link == CauseLink::Or);

  CHECK_THROWS_MATCHES(
      ceg::extract("The OBC must support three-phase charging."), ceg::ExtractionError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("The OBC must support three-phase charging")));
}

TEST_CASE("gate construction composes AND tighter than OR") {
  auto g708 = ceg::build_graph("TM_708", ceg::extract(kTm708));
  REQUIRE(g708.root->kind == ceg::Gate::Kind::And);
  REQUIRE(g708.root->inputs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g708.root->inputs[i]->kind == ceg::Gate::Kind::Cause);
    CHECK(g708.root->inputs[i]->cause == i);
  }

  auto g710 = ceg::build_graph("TM_710", ceg::extract(kTm710));
  CHECK(g710.root->kind == ceg::Gate::Kind::Cause);

  auto negated =
      ceg::build_graph("N1", ceg::extract("If the value is not plausible, the charger stops."));
  REQUIRE(negated.root->kind == ceg::Gate::Kind::Not);
  CHECK(negated.root->inputs[0]->kind == ceg::Gate::Kind::Cause);

  // (c1 and c2) or c3
  auto mixed = ceg::build_graph(
      "M1", ceg::extract("If the plug is locked and the relay is closed or the override is "
                         "active, the charger starts."));
  REQUIRE(mixed.root->kind == ceg::Gate::Kind::Or);
  REQUIRE(mixed.root->inputs.size() == 2);
  CHECK(mixed.root->inputs[0]->kind == ceg::Gate::Kind::And);
  CHECK(mixed.root->inputs[0]->inputs.size() == 2);
  CHECK(mixed.root->inputs[1]->kind == ceg::Gate::Kind::Cause);
  CHECK(mixed.root->inputs[1]->cause == 2);

  CHECK(ceg::eval_gate(mixed.root, {true, true, false}));
  CHECK(ceg::eval_gate(mixed.root, {false, false, true}));
  CHECK_FALSE(ceg::eval_gate(mixed.root, {true, false, false}));
  CHECK_FALSE(ceg::eval_gate(mixed.root, {false, false, false}));
}

TEST_CASE("derived suites match the published counts for the two worked requirements") {
  auto suite710 = ceg::derive_tests(ceg::build_graph("TM_710", ceg::extract(kTm710)));
  REQUIRE(suite710.size() == 2);
  CHECK(suite710[0].requirement_id == "TM_710");
  CHECK(suite710[0].index == 1);
  CHECK(suite710[0].causes == std::vector<bool>{true});
  CHECK(suite710[0].effect);
  CHECK(suite710[1].index == 2);
  CHECK(suite710[1].causes == std::vector<bool>{false});
  CHECK_FALSE(suite710[1].effect);

  auto suite708 = ceg::derive_tests(ceg::build_graph("TM_708", ceg::extract(kTm708)));
  REQUIRE(suite708.size() == 4);
  CHECK(suite708[0].causes == std::vector<bool>{true, true, true});
  CHECK(suite708[0].effect);
  CHECK(suite708[1].causes == std::vector<bool>{false, true, true});
  CHECK(suite708[2].causes == std::vector<bool>{true, false, true});
  CHECK(suite708[3].causes == std::vector<bool>{true, true, false});
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK_FALSE(suite708[i].effect);
    // Each negative case sits at Hamming distance 1 from the positive case.
    int delta = 0;
    for (std::size_t j = 0; j < 3; ++j)
      if (suite708[i].causes[j] != suite708[0].causes[j]) ++delta;
    CHECK(delta == 1);
    CHECK(suite708[i].index == static_cast<int>(i) + 1);
  }
}

TEST_CASE("derived suites equal the exhaustive-truth-table oracle for pure gates") {
  for (int n = 1; n <= 6; ++n) {
    for (CauseLink link : {CauseLink::And, CauseLink::Or}) {
      INFO("n=" << n << " link=" << (link == CauseLink::And ? "and" : "or"));
      auto graph = ceg::build_graph("R", synthetic(n, link));
      auto suite = ceg::derive_tests(graph);
      REQUIRE(suite.size() == static_cast<std::size_t>(n) + 1);

      auto fn = n == 1            ? mcdc_oracle::pure_and(1)
                : link == CauseLink::And ? mcdc_oracle::pure_and(n)
                                         : mcdc_oracle::pure_or(n);
      auto minimal = mcdc_oracle::unique_minimal_suite(n, fn);
      REQUIRE(minimal.has_value());

      std::set<mcdc_oracle::Assignment> derived;
      for (const auto& dc : suite) {
        derived.insert(case_mask(dc));
        CHECK(dc.effect == fn(case_mask(dc)));  // expected effect matches the truth table
      }
      CHECK(derived == *minimal);
      CHECK(mcdc_oracle::covers_all_causes(n, fn, derived));

      // Positive-determining cases first, then by flipped cause index.
      if (n > 1 && link == CauseLink::And) {
        const auto full = case_mask(suite[0]);
        CHECK(fn(full));
        for (int i = 1; i <= n; ++i)
          CHECK(case_mask(suite[i]) == (full ^ (std::uint32_t{1} << (i - 1))));
      }
      if (n > 1 && link == CauseLink::Or) {
        for (int i = 0; i < n; ++i)
          CHECK(case_mask(suite[i]) == std::uint32_t{1} << i);
        CHECK(case_mask(suite[n]) == 0);
      }
    }
  }
}

TEST_CASE("suites over negated and mixed gates stay MC/DC-complete") {
  auto texts = std::vector<std::string>{
      "If the clock is not plausible and the charger is active, the function deactivates.",
      "If the plug is locked and the relay is closed or the override is active, the charger "
      "starts.",
      "Unless the plug is locked and the relay is closed, the charger refuses to start.",
  };
  for (const auto& text : texts) {
    INFO(text);
    auto graph = ceg::build_graph("R", ceg::extract(text));
    auto suite = ceg::derive_tests(graph);
    const int n = static_cast<int>(graph.causes.size());

    auto fn = [&](mcdc_oracle::Assignment mask) {
      std::vector<bool> a(graph.causes.size());
      for (std::size_t j = 0; j < a.size(); ++j) a[j] = (mask >> j) & 1u;
      return ceg::eval_gate(graph.root, a);
    };
    std::set<mcdc_oracle::Assignment> derived;
    for (const auto& dc : suite) {
      derived.insert(case_mask(dc));
      CHECK(dc.effect == fn(case_mask(dc)));
    }
    CHECK(mcdc_oracle::covers_all_causes(n, fn, derived));

    // Derivation is deterministic.
    auto again = ceg::derive_tests(graph);
    REQUIRE(again.size() == suite.size());
    for (std::size_t i = 0; i < suite.size(); ++i) {
      CHECK(again[i].causes == suite[i].causes);
      CHECK(again[i].effect == suite[i].effect);
    }
  }
}

TEST_CASE("requirements file parsing reports precise line diagnostics") {
  auto good = ceg::parse_requirements(
      "# comment\n"
      "\n"
      "R1\tfunctional\tIf a, then b.\n"
      "R2\tinterface\tProvide CAN.\n"
      "R3\tarchitectural-quality\tStay updatable.\n");
  CHECK(good.diagnostics.empty());
  REQUIRE(good.requirements.size() == 3);
  CHECK(good.requirements[0].id == "R1");
  CHECK(good.requirements[0].kind == ceg::RequirementKind::Functional);
  CHECK(good.requirements[1].kind == ceg::RequirementKind::Interface);
  CHECK(good.requirements[2].kind == ceg::RequirementKind::ArchitecturalQuality);
  CHECK(good.requirements[2].text == "Stay updatable.");

  auto bad = ceg::parse_requirements(
      "R1\tfunctional\tFine.\n"
      "R2 functional no tabs here\n"
      "R3\tquality\tBad kind.\n"
      "R1\tfunctional\tDuplicate.\n"
      "\tfunctional\tEmpty id.\n"
      "R4\tfunctional\t\n");
  REQUIRE(bad.requirements.size() == 1);
  REQUIRE(bad.diagnostics.size() == 5);
  CHECK(bad.diagnostics[0].line == 2);
  CHECK(bad.diagnostics[0].message == "expected `<id> TAB <kind> TAB <text>`");
  CHECK(bad.diagnostics[1].line == 3);
  CHECK(bad.diagnostics[1].col == 4);  // the kind field starts after `R3` + tab
  CHECK(bad.diagnostics[1].message ==
        "unknown requirement kind 'quality' (expected functional, architectural-quality, or "
        "interface)");
  CHECK(bad.diagnostics[2].line == 4);
  CHECK(bad.diagnostics[2].message == "duplicate requirement id 'R1'");
  CHECK(bad.diagnostics[3].line == 5);
  CHECK(bad.diagnostics[3].message == "requirement id must not be empty");
  CHECK(bad.diagnostics[4].line == 6);
  CHECK(bad.diagnostics[4].message == "requirement text must not be empty");

  // Carriage returns are tolerated.
  auto crlf = ceg::parse_requirements("R1\tfunctional\tFine.\r\n");
  CHECK(crlf.diagnostics.empty());
  REQUIRE(crlf.requirements.size() == 1);
  CHECK(crlf.requirements[0].text == "Fine.");
}

TEST_CASE("the bundled requirements fixture parses and classifies as expected") {
  auto parsed =
      ceg::parse_requirements(testio::read_file(testcfg::fixtures_dir() + "/requirements.tsv"));
  CHECK(parsed.diagnostics.empty());
  REQUIRE(parsed.requirements.size() == 7);

  std::vector<std::string> causal;
  std::vector<std::string> plain;
  for (const auto& req : parsed.requirements)
    (ceg::classify(req.text) ? causal : plain).push_back(req.id);
  CHECK(causal == std::vector<std::string>{"TM_708", "TM_710", "TM_712", "TM_713"});
  CHECK(plain == std::vector<std::string>{"TM_714", "TM_720", "TM_725"});

  std::map<std::string, std::size_t> counts;
  for (const auto& req : parsed.requirements)
    if (ceg::classify(req.text))
      counts[req.id] =
          ceg::derive_tests(ceg::build_graph(req.id, ceg::extract(req.text))).size();
  CHECK(counts == std::map<std::string, std::size_t>{
                      {"TM_708", 4}, {"TM_710", 2}, {"TM_712", 2}, {"TM_713", 3}});
}

TEST_CASE("emitted test skeletons parse and record the derived assignments") {
  ceg::Requirement req{"TM_710", ceg::RequirementKind::Functional, kTm710};
  auto graph = ceg::build_graph(req.id, ceg::extract(req.text));
  auto cases = ceg::derive_tests(graph);
  auto text = ceg::emit_test_skeletons(req, graph, cases);

  auto parsed = dsl::parse_scenario_doc(text);
  for (const auto& d : parsed.diagnostics) INFO(dsl::format_diagnostic("stub", d));
  REQUIRE(parsed.ok());
  CHECK(parsed.doc->program_id == "TM_710_tests");
  REQUIRE(parsed.doc->scenarios.size() == 2);
  CHECK(parsed.doc->scenarios[0].id == "TM_710.1");
  CHECK(parsed.doc->scenarios[0].is_test);
  CHECK(parsed.doc->scenarios[1].id == "TM_710.2");

  CHECK(text.find("cause 1 = true: triggered by the Signal \"TimerChargingRequest\"") !=
        std::string::npos);
  CHECK(text.find("cause 1 = false") != std::string::npos);
  CHECK(text.find("expect the effect to stay absent") != std::string::npos);

  CHECK(ceg::emit_test_skeletons(req, graph, {}).empty());
}
