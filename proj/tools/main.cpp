// scenweave: scenario-based requirements verification and validation from the
// command line.
//
//   ingest    read a requirements file into the system model
//   gentests  derive test cases from causal requirements, write stubs
//   verify    run a test suite against a specification, record results
//   validate  run the test scenarios of a validation goal, emit diagrams
//   view      render a model projection as a table
//   check     report traceability gaps in the model
//   add/link  low-level model editing
//
// Exit codes: 0 success / all verdicts pass, 1 verdict failures or
// consistency violations, 2 usage or parse errors.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "scenweave/ceg.hpp"
#include "scenweave/diagram.hpp"
#include "scenweave/dsl.hpp"
#include "scenweave/harness.hpp"
#include "scenweave/model.hpp"

namespace fs = std::filesystem;
using namespace scenweave;

namespace {

constexpr int kOk = 0;
constexpr int kVerdictFailure = 1;
constexpr int kUsageError = 2;

int fail(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kUsageError;
}

// --- files -----------------------------------------------------------------------

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

bool write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) return false;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return static_cast<bool>(out);
}

// Advisory lock serializing model writers.  Lives next to the model file so a
// reader never has to create the model itself.
class ModelLock {
 public:
  explicit ModelLock(const fs::path& model_path) {
    fs::path lock_path = model_path;
    lock_path += ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~ModelLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  ModelLock(const ModelLock&) = delete;
  ModelLock& operator=(const ModelLock&) = delete;

 private:
  int fd_ = -1;
};

model::SystemModel load_model_file(const fs::path& path) {
  auto text = read_file(path);
  if (!text) throw model::ModelError("cannot read model file '" + path.string() + "'");
  return model::load_model(*text);
}

model::SystemModel load_or_empty(const fs::path& path) {
  if (!fs::exists(path)) return model::SystemModel{};
  return load_model_file(path);
}

bool save_model_file(const fs::path& path, const model::SystemModel& m) {
  fs::path tmp = path;
  tmp += ".tmp";
  if (!write_file(tmp, model::save_model(m))) return false;
  std::error_code ec;
  fs::rename(tmp, path, ec);
  return !ec;
}

// true/false, 42, 4.2, @21600000, anything else is a string.
Value parse_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  std::string_view v = text;
  bool is_timestamp = v.starts_with("@");
  if (is_timestamp) v.remove_prefix(1);
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
      ec == std::errc{} && p == v.data() + v.size())
    return is_timestamp ? Value(Timestamp{i}) : Value(i);
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
      !is_timestamp && ec == std::errc{} && p == v.data() + v.size())
    return d;
  return text;
}

// --- scenario documents ----------------------------------------------------------

std::optional<dsl::ScenarioDoc> parse_doc(const fs::path& path, bool& reported) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read scenario file '" << path.string() << "'\n";
    reported = true;
    return std::nullopt;
  }
  auto result = dsl::parse_scenario_doc(*text);
  for (const auto& d : result.diagnostics) {
    std::cerr << dsl::format_diagnostic(path.string(), d) << "\n";
    reported = true;
  }
  return result.doc;
}

// Each test scenario becomes its own program (registered stimuli win ties);
// non-test scenarios in the tests document ride along as helpers.
std::vector<ScenarioProgram> test_programs(const dsl::ScenarioDoc& doc) {
  ScenarioProgram all = dsl::lower(doc);
  std::vector<Scenario> helpers;
  for (std::size_t i = 0; i < doc.scenarios.size(); ++i)
    if (!doc.scenarios[i].is_test) helpers.push_back(all.scenarios[i]);

  std::vector<ScenarioProgram> out;
  for (std::size_t i = 0; i < doc.scenarios.size(); ++i) {
    if (!doc.scenarios[i].is_test) continue;
    ScenarioProgram p;
    p.id = doc.scenarios[i].id;
    p.objects = all.objects;
    p.scenarios.push_back(all.scenarios[i]);
    for (const auto& h : helpers) p.scenarios.push_back(h);
    out.push_back(std::move(p));
  }
  return out;
}

// Stakeholder requirements a test case traces back to, via the owning tests.
std::vector<std::string> linked_requirements(const model::SystemModel& m,
                                             const std::string& case_id) {
  std::vector<std::string> out;
  for (const auto& test : m.sources(model::Relation::ComposedOf, case_id)) {
    const auto* e = m.find(test);
    if (!e || e->kind != model::ElementKind::Test) continue;
    for (const auto& req : m.targets_of_kind(test, model::Relation::Validates,
                                             model::ElementKind::StakeholderRequirement))
      if (std::find(out.begin(), out.end(), req) == out.end()) out.push_back(req);
  }
  return out;
}

// --- commands --------------------------------------------------------------------

int cmd_ingest(const fs::path& model_path, const fs::path& reqs_path) {
  auto text = read_file(reqs_path);
  if (!text) return fail("cannot read requirements file '" + reqs_path.string() + "'");
  auto parsed = ceg::parse_requirements(*text);
  if (!parsed.diagnostics.empty()) {
    for (const auto& d : parsed.diagnostics)
      std::cerr << dsl::format_diagnostic(reqs_path.string(), d) << "\n";
    return kUsageError;
  }

  ModelLock lock(model_path);
  model::SystemModel m;
  try {
    m = load_or_empty(model_path);
    for (const auto& req : parsed.requirements) {
      if (const auto* existing = m.find(req.id)) {
        if (existing->kind != model::ElementKind::StakeholderRequirement)
          return fail("element '" + req.id + "' already exists as a " +
                      model::kind_name(existing->kind));
        m.set_attribute(req.id, "kind", std::string(ceg::kind_name(req.kind)));
        m.set_attribute(req.id, "text", req.text);
      } else {
        model::ModelElement e;
        e.id = req.id;
        e.kind = model::ElementKind::StakeholderRequirement;
        e.name = req.id;
        e.attributes["kind"] = std::string(ceg::kind_name(req.kind));
        e.attributes["text"] = req.text;
        m.add_element(std::move(e));
      }
    }
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  if (!save_model_file(model_path, m))
    return fail("cannot write model file '" + model_path.string() + "'");

  std::map<ceg::RequirementKind, std::size_t> counts;
  for (const auto& req : parsed.requirements) ++counts[req.kind];
  std::cout << "ingested " << parsed.requirements.size() << " requirements";
  const char* sep = ": ";
  for (auto kind : {ceg::RequirementKind::Functional, ceg::RequirementKind::ArchitecturalQuality,
                    ceg::RequirementKind::Interface}) {
    if (counts[kind] == 0) continue;
    std::cout << sep << counts[kind] << " " << ceg::kind_name(kind);
    sep = ", ";
  }
  std::cout << "\n";
  return kOk;
}

int cmd_gentests(const fs::path& model_path, const std::vector<std::string>& ids, bool all,
                 const fs::path& scenarios_dir) {
  ModelLock lock(model_path);
  model::SystemModel m;
  try {
    m = load_model_file(model_path);
  } catch (const model::ModelError& err) {
    return fail(std::string(err.what()) + " (run ingest first)");
  }

  std::vector<std::string> targets;
  if (all) {
    for (const auto& e : m.elements())
      if (e.kind == model::ElementKind::StakeholderRequirement) targets.push_back(e.id);
  } else {
    for (const auto& id : ids) {
      const auto* e = m.find(id);
      if (!e || e->kind != model::ElementKind::StakeholderRequirement)
        return fail("unknown requirement '" + id + "'");
      targets.push_back(id);
    }
  }

  try {
    for (const auto& id : targets) {
      const auto* e = m.find(id);
      auto text_it = e->attributes.find("text");
      const std::string* text =
          text_it == e->attributes.end() ? nullptr : std::get_if<std::string>(&text_it->second);
      if (!text) return fail("requirement '" + id + "' has no text attribute");

      if (!ceg::classify(*text)) {
        std::cout << "skipped " << id << ": not causal\n";
        continue;
      }

      ceg::RequirementKind kind = ceg::RequirementKind::Functional;
      if (auto kind_it = e->attributes.find("kind"); kind_it != e->attributes.end())
        if (const auto* s = std::get_if<std::string>(&kind_it->second))
          if (auto parsed = ceg::parse_requirement_kind(*s)) kind = *parsed;

      auto graph = ceg::build_graph(id, ceg::extract(*text));
      auto cases = ceg::derive_tests(graph);

      std::string test_id = "TEST_" + id;
      if (!m.find(test_id)) {
        model::ModelElement t;
        t.id = test_id;
        t.kind = model::ElementKind::Test;
        t.name = test_id;
        m.add_element(std::move(t));
      }
      if (!m.has_link(test_id, model::Relation::Validates, id))
        m.add_link({test_id, model::Relation::Validates, id});

      for (const auto& dc : cases) {
        std::string case_id = id + "." + std::to_string(dc.index);
        if (!m.find(case_id)) {
          model::ModelElement c;
          c.id = case_id;
          c.kind = model::ElementKind::TestCase;
          c.name = case_id;
          std::string assignment;
          for (bool b : dc.causes) assignment += b ? '1' : '0';
          c.attributes["assignment"] = assignment;
          c.attributes["effect"] = dc.effect;
          m.add_element(std::move(c));
        }
        if (!m.has_link(test_id, model::Relation::ComposedOf, case_id))
          m.add_link({test_id, model::Relation::ComposedOf, case_id});
      }

      ceg::Requirement req{id, kind, *text};
      fs::path stub = scenarios_dir / (id + ".scn");
      if (!write_file(stub, ceg::emit_test_skeletons(req, graph, cases)))
        return fail("cannot write stub file '" + stub.string() + "'");
      std::cout << id << ": " << cases.size() << " test cases\n";
    }
  } catch (const std::exception& err) {
    return fail(err.what());
  }

  if (!save_model_file(model_path, m))
    return fail("cannot write model file '" + model_path.string() + "'");
  return kOk;
}

int cmd_verify(const fs::path& model_path, const fs::path& spec_path, const fs::path& tests_path,
               std::size_t budget, std::int64_t now_ms) {
  bool reported = false;
  auto spec_doc = parse_doc(spec_path, reported);
  auto tests_doc = parse_doc(tests_path, reported);
  if (reported) return kUsageError;

  ScenarioProgram spec = dsl::lower(*spec_doc);
  auto cases = test_programs(*tests_doc);
  SuiteReport report = run_suite(spec, cases, budget, now_ms);

  ModelLock lock(model_path);
  std::vector<std::string> notes;
  if (!fs::exists(model_path)) {
    notes.push_back("model file '" + model_path.string() + "' not found; results not recorded");
  } else {
    model::SystemModel m;
    try {
      m = load_model_file(model_path);
      SuiteReport recorded;
      for (const auto& run : report.runs) {
        const auto* e = m.find(run.test_id);
        if (e && e->kind == model::ElementKind::TestCase) {
          recorded.runs.push_back(run);
          report.links[run.test_id] = linked_requirements(m, run.test_id);
        } else {
          notes.push_back("no test-case element for '" + run.test_id +
                          "'; result not recorded");
        }
      }
      model::record_test_results(m, recorded);
    } catch (const model::ModelError& err) {
      return fail(err.what());
    }
    if (!save_model_file(model_path, m))
      return fail("cannot write model file '" + model_path.string() + "'");
  }

  std::cout << render_report(report);
  for (const auto& n : notes) std::cout << "note: " << n << "\n";
  return report.all_passed() ? kOk : kVerdictFailure;
}

int cmd_validate(const fs::path& model_path, const std::string& goal_id, const fs::path& spec_path,
                 const fs::path& tests_path, const fs::path& out_dir, std::size_t budget,
                 std::int64_t now_ms, bool force) {
  ModelLock lock(model_path);
  model::SystemModel m;
  try {
    m = load_model_file(model_path);
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }

  const auto* goal = m.find(goal_id);
  if (!goal || goal->kind != model::ElementKind::ValidationGoal)
    return fail("unknown validation goal '" + goal_id + "'");

  auto goal_scenarios = [&m](const std::string& g) {
    std::vector<std::string> out;
    for (const auto& e : m.elements())
      if (e.kind == model::ElementKind::TestScenario &&
          m.has_link(e.id, model::Relation::Validates, g))
        out.push_back(e.id);
    return out;
  };
  auto scenario_cases = [&m](const std::string& ts) {
    return m.targets_of_kind(ts, model::Relation::ComposedOf, model::ElementKind::TestCase);
  };
  // A goal is green when every test case of every scenario validating it has a
  // most recent result with verdict pass.
  auto goal_green = [&](const std::string& g) {
    bool any = false;
    for (const auto& ts : goal_scenarios(g)) {
      for (const auto& c : scenario_cases(ts)) {
        any = true;
        auto results = m.targets(c, model::Relation::ResultsIn);
        if (results.empty()) return false;
        const auto* latest = m.find(results.back());
        auto it = latest->attributes.find("verdict");
        const std::string* verdict =
            it == latest->attributes.end() ? nullptr : std::get_if<std::string>(&it->second);
        if (!verdict || *verdict != "pass") return false;
      }
    }
    return any;
  };

  auto scenarios = goal_scenarios(goal_id);
  if (scenarios.empty())
    return fail("refusing to validate " + goal_id + ": no test scenario validates it");
  if (!force) {
    for (const auto& dep : m.targets(goal_id, model::Relation::DependsOn))
      if (!goal_green(dep))
        return fail("refusing to validate " + goal_id + ": " + dep + " is not green");
  }

  bool reported = false;
  auto spec_doc = parse_doc(spec_path, reported);
  auto tests_doc = parse_doc(tests_path, reported);
  if (reported) return kUsageError;

  ScenarioProgram spec = dsl::lower(*spec_doc);
  std::map<std::string, ScenarioProgram> by_id;
  for (auto& p : test_programs(*tests_doc)) by_id.emplace(p.id, std::move(p));

  SuiteReport report;
  std::size_t diagrams = 0;
  for (const auto& ts : scenarios) {
    for (const auto& case_id : scenario_cases(ts)) {
      auto it = by_id.find(case_id);
      if (it == by_id.end())
        return fail("test scenario '" + case_id + "' not found in '" + tests_path.string() + "'");
      TestRun run = run_test(spec, it->second, budget, now_ms);

      std::string title = goal_id + "." + case_id;
      fs::path out = out_dir / (title + ".seq.txt");
      if (!write_file(out, diagram::render(diagram::trace_to_diagram(run.trace, title))))
        return fail("cannot write diagram file '" + out.string() + "'");
      ++diagrams;

      report.links[case_id] = linked_requirements(m, case_id);
      report.runs.push_back(std::move(run));
    }
  }

  try {
    model::record_test_results(m, report);
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  if (!save_model_file(model_path, m))
    return fail("cannot write model file '" + model_path.string() + "'");

  std::cout << render_report(report);
  std::cout << "wrote " << diagrams << " diagrams to " << out_dir.string() << "\n";
  return report.all_passed() ? kOk : kVerdictFailure;
}

int cmd_view(const fs::path& model_path, const std::string& kind_str, const std::string& focus,
             bool csv) {
  auto kind = model::parse_view_kind(kind_str);
  if (!kind) {
    std::string expected;
    for (const auto& [k, name] : model::view_kind_names()) {
      if (!expected.empty()) expected += ", ";
      expected += name;
    }
    return fail("unknown view kind '" + kind_str + "' (expected one of: " + expected + ")");
  }
  try {
    auto view = model::derive_view(load_model_file(model_path), *kind, focus);
    std::cout << (csv ? model::render_view_csv(view) : model::render_view(view));
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  return kOk;
}

int cmd_check(const fs::path& model_path) {
  std::vector<model::Finding> findings;
  try {
    findings = model::check_consistency(load_model_file(model_path));
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  if (findings.empty()) {
    std::cout << "no findings\n";
    return kOk;
  }
  bool violations = false;
  for (const auto& f : findings) {
    std::cout << model::format_finding(f) << "\n";
    violations |= f.severity == model::Severity::Violation;
  }
  return violations ? kVerdictFailure : kOk;
}

int cmd_add(const fs::path& model_path, const std::string& kind_str, const std::string& id,
            const std::string& name, const std::vector<std::string>& attrs) {
  auto kind = model::parse_element_kind(kind_str);
  if (!kind) return fail("unknown element kind '" + kind_str + "'");

  model::ModelElement e;
  e.id = id;
  e.kind = *kind;
  e.name = name.empty() ? id : name;
  for (const auto& kv : attrs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      return fail("expected --attr key=value, got '" + kv + "'");
    e.attributes[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
  }

  ModelLock lock(model_path);
  try {
    auto m = load_or_empty(model_path);
    m.add_element(std::move(e));
    if (!save_model_file(model_path, m))
      return fail("cannot write model file '" + model_path.string() + "'");
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  std::cout << "added " << kind_str << " " << id << "\n";
  return kOk;
}

int cmd_link(const fs::path& model_path, const std::string& source, const std::string& rel_str,
             const std::string& target) {
  auto relation = model::parse_relation(rel_str);
  if (!relation) return fail("unknown relation '" + rel_str + "'");

  ModelLock lock(model_path);
  try {
    auto m = load_model_file(model_path);
    m.add_link({source, *relation, target});
    if (!save_model_file(model_path, m))
      return fail("cannot write model file '" + model_path.string() + "'");
  } catch (const model::ModelError& err) {
    return fail(err.what());
  }
  std::cout << "linked " << source << " " << rel_str << " " << target << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenario-based requirements verification and validation"};
  app.require_subcommand(1);

  std::string model_path = "./model.json";
  app.add_option("--model", model_path, "system model file")->capture_default_str();

  int rc = kOk;

  auto* ingest = app.add_subcommand("ingest", "read a requirements file into the model");
  std::string reqs_file;
  ingest->add_option("file", reqs_file, "tab-separated requirements file")->required();
  ingest->callback([&] { rc = cmd_ingest(model_path, reqs_file); });

  auto* gentests = app.add_subcommand("gentests", "derive test cases from causal requirements");
  std::vector<std::string> gentests_ids;
  bool gentests_all = false;
  std::string scenarios_dir = "scenarios";
  gentests->add_option("requirement", gentests_ids, "requirement ids");
  gentests->add_flag("--all", gentests_all, "process every stakeholder requirement");
  gentests->add_option("--scenarios", scenarios_dir, "directory for generated stubs")
      ->capture_default_str();
  gentests->callback([&] {
    if (gentests_ids.empty() && !gentests_all) {
      rc = fail("gentests needs requirement ids or --all");
      return;
    }
    rc = cmd_gentests(model_path, gentests_ids, gentests_all, scenarios_dir);
  });

  std::size_t budget = kDefaultStepBudget;
  std::int64_t now_ms = 0;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--budget", budget, "step budget per run")
        ->envname("SCENWEAVE_BUDGET")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--now", now_ms, "engine start time (ms)")->capture_default_str();
  };

  auto* verify = app.add_subcommand("verify", "run a test suite against a specification");
  std::string spec_file;
  std::string tests_file;
  verify->add_option("spec", spec_file, "specification scenario file")->required();
  verify->add_option("tests", tests_file, "test scenario file")->required();
  add_run_options(verify);
  verify->callback([&] { rc = cmd_verify(model_path, spec_file, tests_file, budget, now_ms); });

  auto* validate = app.add_subcommand("validate", "run the test scenarios of a validation goal");
  std::string goal_id;
  std::string out_dir = "diagrams";
  bool force = false;
  validate->add_option("goal", goal_id, "validation goal id")->required();
  validate->add_option("--spec", spec_file, "specification scenario file")->required();
  validate->add_option("--tests", tests_file, "test scenario file")->required();
  validate->add_option("--out", out_dir, "directory for sequence diagrams")
      ->capture_default_str();
  validate->add_flag("--force", force, "ignore depends-on predecessors");
  add_run_options(validate);
  validate->callback([&] {
    rc = cmd_validate(model_path, goal_id, spec_file, tests_file, out_dir, budget, now_ms, force);
  });

  auto* view = app.add_subcommand("view", "render a model projection");
  std::string view_kind;
  std::string focus;
  bool csv = false;
  view->add_option("kind", view_kind, "view kind")->required();
  view->add_option("--focus", focus, "focus element (validation-concern-overview)");
  view->add_flag("--csv", csv, "emit CSV instead of the aligned table");
  view->callback([&] { rc = cmd_view(model_path, view_kind, focus, csv); });

  auto* check = app.add_subcommand("check", "report traceability gaps");
  check->callback([&] { rc = cmd_check(model_path); });

  auto* add = app.add_subcommand("add", "add a model element");
  std::string add_kind;
  std::string add_id;
  std::string add_name;
  std::vector<std::string> add_attrs;
  add->add_option("kind", add_kind, "element kind")->required();
  add->add_option("id", add_id, "element id")->required();
  add->add_option("--name", add_name, "display name (defaults to the id)");
  add->add_option("--attr", add_attrs, "attribute as key=value");
  add->callback([&] { rc = cmd_add(model_path, add_kind, add_id, add_name, add_attrs); });

  auto* link = app.add_subcommand("link", "add a trace link");
  std::string link_source;
  std::string link_relation;
  std::string link_target;
  link->add_option("source", link_source, "source element id")->required();
  link->add_option("relation", link_relation, "relation name")->required();
  link->add_option("target", link_target, "target element id")->required();
  link->callback([&] { rc = cmd_link(model_path, link_source, link_relation, link_target); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  return rc;
}
