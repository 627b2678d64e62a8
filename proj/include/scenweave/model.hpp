#pragma once

// Traceability model: typed elements spanning problem space, product, and
// validation system, connected by relation-typed links drawn from a closed
// adjacency table.  Views are pure projections; consistency checks report
// findings without mutating; persistence is byte-stable JSON.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scenweave/ceg.hpp"
#include "scenweave/harness.hpp"
#include "scenweave/value.hpp"

namespace scenweave::model {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- elements and links ----------------------------------------------------------

enum class ElementKind {
  Stakeholder,
  StakeholderConcern,
  StakeholderRequirement,
  InteractingSystem,
  UseCase,
  ApplicationScenario,
  ValidationConcern,
  ValidationGoal,
  TestScenario,
  Test,
  TestCase,
  TestEnvironment,
  TestEnvironmentObject,
  TestResult,
  SystemRequirement,
  Function,
  LogicalElement,
};

inline const std::vector<std::pair<ElementKind, const char*>>& element_kind_names() {
  static const std::vector<std::pair<ElementKind, const char*>> names = {
      {ElementKind::Stakeholder, "stakeholder"},
      {ElementKind::StakeholderConcern, "stakeholder-concern"},
      {ElementKind::StakeholderRequirement, "stakeholder-requirement"},
      {ElementKind::InteractingSystem, "interacting-system"},
      {ElementKind::UseCase, "use-case"},
      {ElementKind::ApplicationScenario, "application-scenario"},
      {ElementKind::ValidationConcern, "validation-concern"},
      {ElementKind::ValidationGoal, "validation-goal"},
      {ElementKind::TestScenario, "test-scenario"},
      {ElementKind::Test, "test"},
      {ElementKind::TestCase, "test-case"},
      {ElementKind::TestEnvironment, "test-environment"},
      {ElementKind::TestEnvironmentObject, "test-environment-object"},
      {ElementKind::TestResult, "test-result"},
      {ElementKind::SystemRequirement, "system-requirement"},
      {ElementKind::Function, "function"},
      {ElementKind::LogicalElement, "logical-element"},
  };
  return names;
}

inline const char* kind_name(ElementKind k) {
  for (const auto& [kind, name] : element_kind_names())
    if (kind == k) return name;
  return "?";
}

inline std::optional<ElementKind> parse_element_kind(const std::string& s) {
  for (const auto& [kind, name] : element_kind_names())
    if (s == name) return kind;
  return std::nullopt;
}

enum class Relation {
  DerivesFrom,
  Addresses,
  Refines,
  ComposedOf,
  LinkedTo,
  Validates,
  ExecutedOn,
  ResultsIn,
  DependsOn,
};

inline const std::vector<std::pair<Relation, const char*>>& relation_names() {
  static const std::vector<std::pair<Relation, const char*>> names = {
      {Relation::DerivesFrom, "derives-from"}, {Relation::Addresses, "addresses"},
      {Relation::Refines, "refines"},          {Relation::ComposedOf, "composed-of"},
      {Relation::LinkedTo, "linked-to"},       {Relation::Validates, "validates"},
      {Relation::ExecutedOn, "executed-on"},   {Relation::ResultsIn, "results-in"},
      {Relation::DependsOn, "depends-on"},
  };
  return names;
}

inline const char* relation_name(Relation r) {
  for (const auto& [rel, name] : relation_names())
    if (rel == r) return name;
  return "?";
}

inline std::optional<Relation> parse_relation(const std::string& s) {
  for (const auto& [rel, name] : relation_names())
    if (s == name) return rel;
  return std::nullopt;
}

struct ModelElement {
  std::string id;
  ElementKind kind = ElementKind::Stakeholder;
  std::string name;
  std::map<std::string, Value> attributes;
};

struct TraceLink {
  std::string source;
  Relation relation = Relation::DerivesFrom;
  std::string target;

  friend bool operator==(const TraceLink&, const TraceLink&) = default;
};

// The closed admissibility table: anything not listed is rejected.
inline const std::vector<std::tuple<ElementKind, Relation, ElementKind>>& adjacency_table() {
  using K = ElementKind;
  using R = Relation;
  static const std::vector<std::tuple<K, R, K>> table = {
      // problem space
      {K::StakeholderConcern, R::DerivesFrom, K::Stakeholder},
      {K::StakeholderRequirement, R::DerivesFrom, K::StakeholderConcern},
      {K::StakeholderRequirement, R::LinkedTo, K::ApplicationScenario},
      {K::UseCase, R::DerivesFrom, K::Stakeholder},
      {K::UseCase, R::DerivesFrom, K::InteractingSystem},
      {K::ApplicationScenario, R::Refines, K::UseCase},
      // product
      {K::SystemRequirement, R::DerivesFrom, K::StakeholderRequirement},
      {K::Function, R::DerivesFrom, K::SystemRequirement},
      {K::LogicalElement, R::DerivesFrom, K::Function},
      // validation system
      {K::ValidationConcern, R::Addresses, K::ApplicationScenario},
      {K::ValidationConcern, R::Addresses, K::StakeholderRequirement},
      {K::ValidationConcern, R::Addresses, K::SystemRequirement},
      {K::ValidationConcern, R::Addresses, K::Function},
      {K::ValidationGoal, R::DerivesFrom, K::ValidationConcern},
      {K::ValidationGoal, R::DependsOn, K::ValidationGoal},
      {K::TestScenario, R::Validates, K::ValidationGoal},
      {K::TestScenario, R::ComposedOf, K::TestCase},
      {K::Test, R::Validates, K::StakeholderRequirement},
      {K::Test, R::ComposedOf, K::TestEnvironment},
      {K::Test, R::ComposedOf, K::TestCase},
      {K::Test, R::ExecutedOn, K::TestEnvironment},
      {K::TestCase, R::ResultsIn, K::TestResult},
      {K::TestEnvironment, R::ComposedOf, K::TestEnvironmentObject},
      {K::TestEnvironmentObject, R::DerivesFrom, K::LogicalElement},
      {K::TestEnvironmentObject, R::DerivesFrom, K::InteractingSystem},
  };
  return table;
}

inline bool admissible(ElementKind source, Relation relation, ElementKind target) {
  for (const auto& [s, r, t] : adjacency_table())
    if (s == source && r == relation && t == target) return true;
  return false;
}

// --- the model -------------------------------------------------------------------

class SystemModel {
 public:
  const std::vector<ModelElement>& elements() const { return elements_; }
  const std::vector<TraceLink>& links() const { return links_; }

  const ModelElement* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &elements_[it->second];
  }

  // Rejections leave the model unchanged.
  void add_element(ModelElement element) {
    if (element.id.empty()) throw ModelError("element id must not be empty");
    if (index_.count(element.id) != 0)
      throw ModelError("duplicate element id '" + element.id + "'");
    index_.emplace(element.id, elements_.size());
    elements_.push_back(std::move(element));
  }

  // Attributes and names may evolve; id and kind are immutable.
  void set_attribute(const std::string& id, const std::string& key, Value value) {
    mutable_element(id).attributes[key] = std::move(value);
  }

  void set_name(const std::string& id, std::string name) {
    mutable_element(id).name = std::move(name);
  }

  void add_link(TraceLink link) {
    const ModelElement* source = find(link.source);
    const ModelElement* target = find(link.target);
    if (!source) throw ModelError("link source '" + link.source + "' does not exist");
    if (!target) throw ModelError("link target '" + link.target + "' does not exist");
    if (!admissible(source->kind, link.relation, target->kind))
      throw ModelError(std::string("inadmissible link: ") + kind_name(source->kind) + " " +
                       relation_name(link.relation) + " " + kind_name(target->kind));
    if (std::find(links_.begin(), links_.end(), link) != links_.end())
      throw ModelError("duplicate link: " + link.source + " " +
                       relation_name(link.relation) + " " + link.target);
    links_.push_back(std::move(link));
  }

  bool remove_link(const TraceLink& link) {
    auto it = std::find(links_.begin(), links_.end(), link);
    if (it == links_.end()) return false;
    links_.erase(it);
    return true;
  }

  bool has_link(const std::string& source, Relation relation, const std::string& target) const {
    return std::find(links_.begin(), links_.end(), TraceLink{source, relation, target}) !=
           links_.end();
  }

  // Link-insertion order.
  std::vector<std::string> targets(const std::string& source, Relation relation) const {
    std::vector<std::string> out;
    for (const auto& l : links_)
      if (l.source == source && l.relation == relation) out.push_back(l.target);
    return out;
  }

  std::vector<std::string> sources(Relation relation, const std::string& target) const {
    std::vector<std::string> out;
    for (const auto& l : links_)
      if (l.target == target && l.relation == relation) out.push_back(l.source);
    return out;
  }

  std::vector<std::string> targets_of_kind(const std::string& source, Relation relation,
                                           ElementKind kind) const {
    std::vector<std::string> out;
    for (const auto& id : targets(source, relation))
      if (const auto* e = find(id); e && e->kind == kind) out.push_back(id);
    return out;
  }

 private:
  ModelElement& mutable_element(const std::string& id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw ModelError("element '" + id + "' does not exist");
    return elements_[it->second];
  }

  std::vector<ModelElement> elements_;
  std::vector<TraceLink> links_;
  std::map<std::string, std::size_t> index_;
};

// --- persistence -----------------------------------------------------------------

namespace detail {

using json = nlohmann::ordered_json;

inline json value_to_json(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  const auto& ts = std::get<Timestamp>(v);
  json out;
  out["$timestamp"] = ts.ms;
  return out;
}

inline Value value_from_json(const json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.size() == 1 && j.contains("$timestamp") &&
      j["$timestamp"].is_number_integer())
    return Timestamp{j["$timestamp"].get<std::int64_t>()};
  throw ModelError(where + ": unsupported attribute value");
}

}  // namespace detail

// Stable form: top-level `elements` then `links`, insertion order preserved,
// attribute keys sorted, two-space indent, trailing newline.
inline std::string save_model(const SystemModel& model) {
  detail::json root;
  root["elements"] = detail::json::array();
  for (const auto& e : model.elements()) {
    detail::json je;
    je["id"] = e.id;
    je["kind"] = kind_name(e.kind);
    je["name"] = e.name;
    je["attributes"] = detail::json::object();
    for (const auto& [key, value] : e.attributes)
      je["attributes"][key] = detail::value_to_json(value);
    root["elements"].push_back(std::move(je));
  }
  root["links"] = detail::json::array();
  for (const auto& l : model.links()) {
    detail::json jl;
    jl["source"] = l.source;
    jl["relation"] = relation_name(l.relation);
    jl["target"] = l.target;
    root["links"].push_back(std::move(jl));
  }
  return root.dump(2) + "\n";
}

inline SystemModel load_model(const std::string& text) {
  detail::json root;
  try {
    root = detail::json::parse(text);
  } catch (const std::exception& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("elements") || !root.contains("links") ||
      !root["elements"].is_array() || !root["links"].is_array())
    throw ModelError("model file must be an object with `elements` and `links` arrays");

  SystemModel model;
  std::size_t index = 0;
  for (const auto& je : root["elements"]) {
    std::string where = "elements[" + std::to_string(index++) + "]";
    if (!je.is_object() || !je.contains("id") || !je.contains("kind") || !je["id"].is_string() ||
        !je["kind"].is_string())
      throw ModelError(where + ": expected an object with string `id` and `kind`");
    ModelElement e;
    e.id = je["id"].get<std::string>();
    auto kind = parse_element_kind(je["kind"].get<std::string>());
    if (!kind)
      throw ModelError(where + ": unknown element kind '" + je["kind"].get<std::string>() + "'");
    e.kind = *kind;
    if (je.contains("name")) {
      if (!je["name"].is_string()) throw ModelError(where + ": `name` must be a string");
      e.name = je["name"].get<std::string>();
    }
    if (je.contains("attributes")) {
      if (!je["attributes"].is_object())
        throw ModelError(where + ": `attributes` must be an object");
      for (const auto& [key, value] : je["attributes"].items())
        e.attributes[key] = detail::value_from_json(value, where + ".attributes." + key);
    }
    try {
      model.add_element(std::move(e));
    } catch (const ModelError& err) {
      throw ModelError(where + ": " + err.what());
    }
  }
  index = 0;
  for (const auto& jl : root["links"]) {
    std::string where = "links[" + std::to_string(index++) + "]";
    if (!jl.is_object() || !jl.contains("source") || !jl.contains("relation") ||
        !jl.contains("target") || !jl["source"].is_string() || !jl["relation"].is_string() ||
        !jl["target"].is_string())
      throw ModelError(where + ": expected string `source`, `relation`, `target`");
    auto relation = parse_relation(jl["relation"].get<std::string>());
    if (!relation)
      throw ModelError(where + ": unknown relation '" + jl["relation"].get<std::string>() + "'");
    try {
      model.add_link(TraceLink{jl["source"].get<std::string>(), *relation,
                               jl["target"].get<std::string>()});
    } catch (const ModelError& err) {
      throw ModelError(where + ": " + err.what());
    }
  }
  return model;
}

// --- views -----------------------------------------------------------------------

enum class ViewKind {
  ValidationConcernOverview,
  TestCaseSpecification,
  ValidationGoalSpecification,
  RequirementStructure,
  Context,
};

inline const std::vector<std::pair<ViewKind, const char*>>& view_kind_names() {
  static const std::vector<std::pair<ViewKind, const char*>> names = {
      {ViewKind::ValidationConcernOverview, "validation-concern-overview"},
      {ViewKind::TestCaseSpecification, "test-case-specification"},
      {ViewKind::ValidationGoalSpecification, "validation-goal-specification"},
      {ViewKind::RequirementStructure, "requirement-structure"},
      {ViewKind::Context, "context"},
  };
  return names;
}

inline const char* view_kind_name(ViewKind k) {
  for (const auto& [kind, name] : view_kind_names())
    if (kind == k) return name;
  return "?";
}

inline std::optional<ViewKind> parse_view_kind(const std::string& s) {
  for (const auto& [kind, name] : view_kind_names())
    if (s == name) return kind;
  return std::nullopt;
}

enum class Role { None, Addressed, PotentiallyRelevant, Result };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::None: return "";
    case Role::Addressed: return "addressed";
    case Role::PotentiallyRelevant: return "potentially-relevant";
    case Role::Result: return "result";
  }
  return "";
}

struct ViewRow {
  std::vector<std::string> ids;
  Role role = Role::None;

  friend bool operator==(const ViewRow&, const ViewRow&) = default;
};

struct ViewResult {
  ViewKind kind = ViewKind::Context;
  std::string focus;
  std::vector<ViewRow> rows;
};

namespace detail {

inline std::vector<const ModelElement*> elements_of_kind(const SystemModel& m, ElementKind k) {
  std::vector<const ModelElement*> out;
  for (const auto& e : m.elements())
    if (e.kind == k) out.push_back(&e);
  return out;
}

// Goals ordered so that depends-on targets come before their dependents;
// within that constraint, element order.  Cycle members are appended in
// element order (check_consistency reports the cycle itself).
inline std::vector<std::string> goals_in_dependency_order(const SystemModel& m) {
  auto goals = elements_of_kind(m, ElementKind::ValidationGoal);
  std::vector<std::string> order;
  std::set<std::string> placed;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto* g : goals) {
      if (placed.count(g->id) != 0) continue;
      bool ready = true;
      for (const auto& dep : m.targets(g->id, Relation::DependsOn))
        if (m.find(dep) && m.find(dep)->kind == ElementKind::ValidationGoal &&
            placed.count(dep) == 0)
          ready = false;
      if (!ready) continue;
      order.push_back(g->id);
      placed.insert(g->id);
      progress = true;
    }
  }
  for (const auto* g : goals)
    if (placed.count(g->id) == 0) order.push_back(g->id);
  return order;
}

}  // namespace detail

inline ViewResult derive_view(const SystemModel& m, ViewKind kind, const std::string& focus = "") {
  if (!focus.empty() && m.find(focus) == nullptr)
    throw ModelError("unknown focus id '" + focus + "'");

  ViewResult view;
  view.kind = kind;
  view.focus = focus;

  switch (kind) {
    case ViewKind::ValidationConcernOverview: {
      if (focus.empty())
        throw ModelError("validation-concern-overview requires a validation-concern focus");
      const ModelElement* concern = m.find(focus);
      if (concern->kind != ElementKind::ValidationConcern)
        throw ModelError("focus '" + focus + "' is not a validation concern");

      std::vector<std::string> addressed = m.targets(focus, Relation::Addresses);
      std::set<std::string> addressed_set(addressed.begin(), addressed.end());
      for (const auto& id : addressed) view.rows.push_back({{id}, Role::Addressed});

      // Requirements attached to an addressed application scenario but not
      // themselves addressed are potentially relevant.
      std::set<std::string> seen;
      for (const auto& id : addressed) {
        const ModelElement* e = m.find(id);
        if (!e || e->kind != ElementKind::ApplicationScenario) continue;
        for (const auto& req : m.sources(Relation::LinkedTo, id)) {
          if (addressed_set.count(req) != 0 || !seen.insert(req).second) continue;
          view.rows.push_back({{req}, Role::PotentiallyRelevant});
        }
      }

      // Results of earlier iterations: every test result reachable through a
      // test that validates an addressed element.
      std::set<std::string> emitted;
      for (const auto* test : detail::elements_of_kind(m, ElementKind::Test)) {
        bool relevant = false;
        for (const auto& target : m.targets(test->id, Relation::Validates))
          if (addressed_set.count(target) != 0) relevant = true;
        if (!relevant) continue;
        for (const auto& c :
             m.targets_of_kind(test->id, Relation::ComposedOf, ElementKind::TestCase))
          for (const auto& r : m.targets(c, Relation::ResultsIn))
            if (emitted.insert(r).second) view.rows.push_back({{r}, Role::Result});
      }
      break;
    }

    case ViewKind::TestCaseSpecification: {
      for (const auto* sr :
           detail::elements_of_kind(m, ElementKind::StakeholderRequirement)) {
        if (!focus.empty() && sr->id != focus) continue;
        std::vector<std::string> tests;
        for (const auto* t : detail::elements_of_kind(m, ElementKind::Test))
          if (m.has_link(t->id, Relation::Validates, sr->id)) tests.push_back(t->id);
        if (tests.empty()) {
          view.rows.push_back({{sr->id}, Role::None});
          continue;
        }
        for (const auto& t : tests) {
          auto cases = m.targets_of_kind(t, Relation::ComposedOf, ElementKind::TestCase);
          auto envs = m.targets_of_kind(t, Relation::ComposedOf, ElementKind::TestEnvironment);
          if (cases.empty()) {
            view.rows.push_back({{sr->id, t}, Role::None});
            continue;
          }
          for (const auto& c : cases) {
            auto results = m.targets(c, Relation::ResultsIn);
            auto emit = [&](std::vector<std::string> base) {
              if (results.empty()) {
                view.rows.push_back({std::move(base), Role::None});
                return;
              }
              for (const auto& r : results) {
                auto row = base;
                row.push_back(r);
                view.rows.push_back({std::move(row), Role::None});
              }
            };
            if (envs.empty()) {
              // Explicit placeholder so result ids stay in the result column.
              emit({sr->id, t, c, "-"});
            } else {
              for (const auto& env : envs) emit({sr->id, t, c, env});
            }
          }
        }
      }
      break;
    }

    case ViewKind::ValidationGoalSpecification: {
      for (const auto& goal : detail::goals_in_dependency_order(m)) {
        if (!focus.empty() && goal != focus) continue;
        std::vector<std::string> scenarios;
        for (const auto* ts : detail::elements_of_kind(m, ElementKind::TestScenario))
          if (m.has_link(ts->id, Relation::Validates, goal)) scenarios.push_back(ts->id);
        if (scenarios.empty()) {
          view.rows.push_back({{goal}, Role::None});
          continue;
        }
        for (const auto& ts : scenarios) {
          auto cases = m.targets_of_kind(ts, Relation::ComposedOf, ElementKind::TestCase);
          if (cases.empty()) {
            view.rows.push_back({{goal, ts}, Role::None});
            continue;
          }
          for (const auto& c : cases) view.rows.push_back({{goal, ts, c}, Role::None});
        }
      }
      break;
    }

    case ViewKind::RequirementStructure: {
      for (const auto* sr :
           detail::elements_of_kind(m, ElementKind::StakeholderRequirement)) {
        if (!focus.empty() && sr->id != focus) continue;
        auto scenarios = m.targets(sr->id, Relation::LinkedTo);
        if (scenarios.empty())
          view.rows.push_back({{sr->id}, Role::None});
        else
          for (const auto& as : scenarios) view.rows.push_back({{sr->id, as}, Role::None});
      }
      for (const auto* sysr : detail::elements_of_kind(m, ElementKind::SystemRequirement)) {
        if (!focus.empty() && sysr->id != focus) continue;
        auto origins = m.targets(sysr->id, Relation::DerivesFrom);
        if (origins.empty())
          view.rows.push_back({{sysr->id}, Role::None});
        else
          for (const auto& sr : origins) view.rows.push_back({{sysr->id, sr}, Role::None});
      }
      break;
    }

    case ViewKind::Context: {
      for (const auto* s : detail::elements_of_kind(m, ElementKind::Stakeholder)) {
        if (!focus.empty() && s->id != focus) continue;
        view.rows.push_back({{s->id}, Role::None});
      }
      for (const auto* is : detail::elements_of_kind(m, ElementKind::InteractingSystem)) {
        if (!focus.empty() && is->id != focus) continue;
        view.rows.push_back({{is->id}, Role::None});
      }
      for (const auto* uc : detail::elements_of_kind(m, ElementKind::UseCase)) {
        if (!focus.empty() && uc->id != focus) continue;
        auto scenarios = m.sources(Relation::Refines, uc->id);
        if (scenarios.empty())
          view.rows.push_back({{uc->id}, Role::None});
        else
          for (const auto& as : scenarios) view.rows.push_back({{uc->id, as}, Role::None});
      }
      break;
    }
  }
  return view;
}

namespace detail {

inline const std::vector<std::string>& view_columns(ViewKind kind) {
  static const std::vector<std::string> overview = {"element", "role"};
  static const std::vector<std::string> tcs = {"requirement", "test", "test-case",
                                               "environment", "result"};
  static const std::vector<std::string> vgs = {"goal", "test-scenario", "test-case"};
  static const std::vector<std::string> rs = {"requirement", "related"};
  static const std::vector<std::string> ctx = {"element", "refined-by"};
  switch (kind) {
    case ViewKind::ValidationConcernOverview: return overview;
    case ViewKind::TestCaseSpecification: return tcs;
    case ViewKind::ValidationGoalSpecification: return vgs;
    case ViewKind::RequirementStructure: return rs;
    case ViewKind::Context: return ctx;
  }
  return ctx;
}

inline std::vector<std::vector<std::string>> view_cells(const ViewResult& view) {
  const auto& columns = view_columns(view.kind);
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : view.rows) {
    std::vector<std::string> line = row.ids;
    if (view.kind == ViewKind::ValidationConcernOverview) line.push_back(role_name(row.role));
    while (line.size() < columns.size()) line.push_back("-");
    cells.push_back(std::move(line));
  }
  return cells;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

// Aligned-column table, one header line, `-` for absent tail fields.
inline std::string render_view(const ViewResult& view) {
  const auto& columns = detail::view_columns(view.kind);
  auto cells = detail::view_cells(view);

  std::vector<std::size_t> width(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::string out = "view: ";
  out += view_kind_name(view.kind);
  if (!view.focus.empty()) out += " (focus " + view.focus + ")";
  out += "\n";
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += line + "\n";
  };
  emit(columns);
  for (const auto& row : cells) emit(row);
  return out;
}

inline std::string render_view_csv(const ViewResult& view) {
  const auto& columns = detail::view_columns(view.kind);
  auto cells = detail::view_cells(view);
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out += (i ? "," : "") + detail::csv_field(columns[i]);
  out += "\n";
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out += (i ? "," : "") + detail::csv_field(row[i] == "-" ? "" : row[i]);
    out += "\n";
  }
  return out;
}

// --- consistency -----------------------------------------------------------------

enum class Severity { Violation, Warning };

struct Finding {
  Severity severity = Severity::Violation;
  std::string message;
  std::vector<std::string> elements;

  friend bool operator==(const Finding&, const Finding&) = default;
};

inline std::string format_finding(const Finding& f) {
  return std::string(f.severity == Severity::Violation ? "violation: " : "warning: ") +
         f.message;
}

inline std::vector<Finding> check_consistency(const SystemModel& m) {
  std::vector<Finding> findings;
  auto violation = [&](std::string message, std::vector<std::string> ids) {
    findings.push_back(Finding{Severity::Violation, std::move(message), std::move(ids)});
  };

  // Every stakeholder requirement is grounded in an application scenario.
  for (const auto* sr : detail::elements_of_kind(m, ElementKind::StakeholderRequirement)) {
    if (m.targets_of_kind(sr->id, Relation::LinkedTo, ElementKind::ApplicationScenario).empty())
      violation("stakeholder requirement " + sr->id +
                    " is not linked to any application scenario",
                {sr->id});
  }

  // A causal requirement needs at least one concrete test case.
  for (const auto* sr : detail::elements_of_kind(m, ElementKind::StakeholderRequirement)) {
    auto text = sr->attributes.find("text");
    if (text == sr->attributes.end()) continue;
    const auto* body = std::get_if<std::string>(&text->second);
    if (!body || !ceg::classify(*body)) continue;
    bool has_case = false;
    for (const auto& test : m.sources(Relation::Validates, sr->id))
      if (!m.targets_of_kind(test, Relation::ComposedOf, ElementKind::TestCase).empty())
        has_case = true;
    if (!has_case)
      violation("causal stakeholder requirement " + sr->id + " has no test case", {sr->id});
  }

  // A test is a composition of a test environment and test cases.
  for (const auto* test : detail::elements_of_kind(m, ElementKind::Test)) {
    if (m.targets_of_kind(test->id, Relation::ComposedOf, ElementKind::TestEnvironment).empty())
      violation("test " + test->id + " has no test environment", {test->id});
    if (m.targets_of_kind(test->id, Relation::ComposedOf, ElementKind::TestCase).empty())
      violation("test " + test->id + " has no test case", {test->id});
  }

  // Once any results exist, a result-less test case is stale (warning only).
  if (!detail::elements_of_kind(m, ElementKind::TestResult).empty()) {
    for (const auto* c : detail::elements_of_kind(m, ElementKind::TestCase)) {
      if (m.targets(c->id, Relation::ResultsIn).empty())
        findings.push_back(Finding{Severity::Warning,
                                   "test case " + c->id + " has no test result", {c->id}});
    }
  }

  // Goals are validated through test scenarios.
  for (const auto* goal : detail::elements_of_kind(m, ElementKind::ValidationGoal)) {
    if (m.sources(Relation::Validates, goal->id).empty())
      violation("validation goal " + goal->id + " has no test scenario", {goal->id});
  }

  // System requirements trace back to stakeholder requirements.
  for (const auto* sysr : detail::elements_of_kind(m, ElementKind::SystemRequirement)) {
    if (m.targets_of_kind(sysr->id, Relation::DerivesFrom, ElementKind::StakeholderRequirement)
            .empty())
      violation("system requirement " + sysr->id +
                    " does not derive from a stakeholder requirement",
                {sysr->id});
  }

  // Goal ordering must be acyclic: one finding per strongly connected
  // component with a cycle (self-loops included).
  {
    auto goals = detail::elements_of_kind(m, ElementKind::ValidationGoal);
    std::map<std::string, std::vector<std::string>> edges;
    for (const auto* g : goals)
      edges[g->id] = m.targets_of_kind(g->id, Relation::DependsOn, ElementKind::ValidationGoal);

    // Tarjan's algorithm, iterating roots in element order.
    std::map<std::string, int> index, low;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    int counter = 0;
    std::vector<std::vector<std::string>> cycles;
    auto strongconnect = [&](auto&& self, const std::string& v) -> void {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack.insert(v);
      for (const auto& w : edges[v]) {
        if (index.find(w) == index.end()) {
          self(self, w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w) != 0) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<std::string> component;
        while (true) {
          std::string w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          component.push_back(w);
          if (w == v) break;
        }
        bool self_loop = component.size() == 1 &&
                         std::find(edges[v].begin(), edges[v].end(), v) != edges[v].end();
        if (component.size() > 1 || self_loop) {
          std::reverse(component.begin(), component.end());
          cycles.push_back(std::move(component));
        }
      }
    };
    for (const auto* g : goals)
      if (index.find(g->id) == index.end()) strongconnect(strongconnect, g->id);
    for (auto& cycle : cycles) {
      std::string names;
      for (std::size_t i = 0; i < cycle.size(); ++i) names += (i ? ", " : "") + cycle[i];
      violation("validation goals form a depends-on cycle: " + names, std::move(cycle));
    }
  }

  return findings;
}

// --- result recording ------------------------------------------------------------

// One test-result element per run, appended to the history of the matching
// test-case element; ids follow `<case>.result.<k>`.
inline void record_test_results(SystemModel& m, const SuiteReport& report) {
  for (const auto& run : report.runs) {
    const ModelElement* c = m.find(run.test_id);
    if (!c || c->kind != ElementKind::TestCase)
      throw ModelError("no test-case element for test id '" + run.test_id + "'");
  }
  for (const auto& run : report.runs) {
    std::size_t k = m.targets(run.test_id, Relation::ResultsIn).size() + 1;
    std::string id;
    do {
      id = run.test_id + ".result." + std::to_string(k++);
    } while (m.find(id) != nullptr);

    ModelElement result;
    result.id = id;
    result.kind = ElementKind::TestResult;
    result.name = verdict_name(run.verdict.kind);
    result.attributes["verdict"] = std::string(verdict_name(run.verdict.kind));
    result.attributes["steps"] = static_cast<std::int64_t>(run.trace.steps.size());
    result.attributes["program"] = run.spec_program_id;
    if (!run.verdict.detail.empty()) result.attributes["detail"] = run.verdict.detail;
    m.add_element(std::move(result));
    m.add_link(TraceLink{run.test_id, Relation::ResultsIn, id});
  }
}

}  // namespace scenweave::model
