#pragma once

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

namespace scenweave {

// Milliseconds since the Unix epoch.  Kept distinct from plain integers so
// arithmetic and comparisons cannot silently mix the two.
struct Timestamp {
  std::int64_t ms = 0;
  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

// The scalar kinds event parameters and model attributes are made of.
using Value = std::variant<bool, std::int64_t, double, std::string, Timestamp>;

enum class ValueKind { Boolean, Integer, Decimal, Text, Timestamp };

inline ValueKind kind_of(const Value& v) {
  return static_cast<ValueKind>(v.index());
}

inline const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Integer: return "integer";
    case ValueKind::Decimal: return "decimal";
    case ValueKind::Text: return "text";
    case ValueKind::Timestamp: return "timestamp";
  }
  return "?";
}

namespace detail {

inline std::string render_decimal(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d < 0 ? "-inf" : "inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string out(buf, ptr);
  // Shortest round trip may drop the fractional part; keep decimals visibly
  // distinct from integers.
  if (out.find('.') == std::string::npos && out.find('e') == std::string::npos)
    out += ".0";
  return out;
}

inline std::string quote_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace detail

// Canonical textual form used by traces, diagrams and the scenario language:
// true | 42 | 1.5 | "text" | @120000
inline std::string render_value(const Value& v) {
  struct Renderer {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return detail::render_decimal(d); }
    std::string operator()(const std::string& s) const { return detail::quote_text(s); }
    std::string operator()(Timestamp t) const { return "@" + std::to_string(t.ms); }
  };
  return std::visit(Renderer{}, v);
}

}  // namespace scenweave
