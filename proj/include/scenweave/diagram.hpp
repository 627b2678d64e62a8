#pragma once

// Textual sequence diagrams from execution traces: lifelines appear in order
// of first appearance (sender before receiver), one message per trace step.

#include <algorithm>
#include <string>
#include <vector>

#include "scenweave/engine.hpp"
#include "scenweave/event.hpp"
#include "scenweave/value.hpp"

namespace scenweave::diagram {

struct Message {
  std::string from;
  std::string to;
  std::string label;
  std::string parameters;  // canonically rendered, comma-separated

  friend bool operator==(const Message&, const Message&) = default;
};

struct SequenceDiagram {
  std::string title;
  std::vector<std::string> lifelines;  // qualified object names, first-appearance order
  std::vector<Message> messages;       // one per trace step, in step order

  friend bool operator==(const SequenceDiagram&, const SequenceDiagram&) = default;
};

inline SequenceDiagram trace_to_diagram(const ExecutionTrace& trace, const std::string& title) {
  SequenceDiagram d;
  d.title = title;
  auto note = [&](const std::string& name) {
    if (std::find(d.lifelines.begin(), d.lifelines.end(), name) == d.lifelines.end())
      d.lifelines.push_back(name);
  };
  for (const auto& step : trace.steps) {
    const Event& e = step.event;
    note(e.sender.qualified());
    note(e.receiver.qualified());
    std::string params;
    for (std::size_t i = 0; i < e.parameters.size(); ++i)
      params += (i ? ", " : "") + render_value(e.parameters[i]);
    d.messages.push_back(Message{e.sender.qualified(), e.receiver.qualified(), e.label,
                                 std::move(params)});
  }
  return d;
}

// `@diagram <title>`, one `participant` line per lifeline, one message line
// per step, `@end`.  Byte-identical across runs for equal inputs.
inline std::string render(const SequenceDiagram& d) {
  std::string out = "@diagram " + d.title + "\n";
  for (const auto& lifeline : d.lifelines) out += "participant " + lifeline + "\n";
  for (const auto& m : d.messages)
    out += m.from + " -> " + m.to + " : " + m.label + "(" + m.parameters + ")\n";
  out += "@end\n";
  return out;
}

}  // namespace scenweave::diagram
