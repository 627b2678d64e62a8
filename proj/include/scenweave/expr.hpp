#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>

#include "scenweave/event.hpp"
#include "scenweave/value.hpp"

namespace scenweave {

// Raised when an expression cannot be evaluated (unbound name, kind mismatch
// in an ordered comparison, arithmetic on unsupported kinds...).  The engine
// turns this into an assertion failure of the evaluating scenario.
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A span of time.  Durations exist only while evaluating expressions; they
// never occur as event parameters or model attributes.
struct DurationV {
  std::int64_t ms = 0;
  friend constexpr auto operator<=>(const DurationV&, const DurationV&) = default;
};

using EvalValue = std::variant<Value, DurationV>;

enum class BinaryOp { And, Or, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul };
enum class UnaryOp { Not, Neg };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  struct Literal { Value value; };
  struct Duration { DurationV value; };
  struct Now {};                        // activation time of the running program
  struct Name { std::string name; };    // reference to a scenario binding
  struct Unary { UnaryOp op; ExprPtr operand; };
  struct Binary { BinaryOp op; ExprPtr lhs; ExprPtr rhs; };

  std::variant<Literal, Duration, Now, Name, Unary, Binary> node;
};

inline ExprPtr make_literal(Value v) { return std::make_shared<Expr>(Expr{Expr::Literal{std::move(v)}}); }
inline ExprPtr make_duration(std::int64_t ms) { return std::make_shared<Expr>(Expr{Expr::Duration{DurationV{ms}}}); }
inline ExprPtr make_now() { return std::make_shared<Expr>(Expr{Expr::Now{}}); }
inline ExprPtr make_name(std::string n) { return std::make_shared<Expr>(Expr{Expr::Name{std::move(n)}}); }
inline ExprPtr make_unary(UnaryOp op, ExprPtr e) { return std::make_shared<Expr>(Expr{Expr::Unary{op, std::move(e)}}); }
inline ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
  return std::make_shared<Expr>(Expr{Expr::Binary{op, std::move(l), std::move(r)}});
}

struct EvalContext {
  const BindingMap* bindings = nullptr;
  std::int64_t now_ms = 0;
};

namespace detail {

inline std::string describe(const EvalValue& v) {
  if (const auto* d = std::get_if<DurationV>(&v)) return "duration " + std::to_string(d->ms) + "ms";
  return kind_name(kind_of(std::get<Value>(v)));
}

inline bool eval_equal(const EvalValue& l, const EvalValue& r) {
  // Values of different kinds are simply unequal; only like compares like.
  return l == r;
}

template <typename T>
inline bool ordered(BinaryOp op, const T& a, const T& b) {
  switch (op) {
    case BinaryOp::Lt: return a < b;
    case BinaryOp::Le: return a <= b;
    case BinaryOp::Gt: return a > b;
    case BinaryOp::Ge: return a >= b;
    default: throw EvalError("not an ordering operator");
  }
}

inline const char* op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
  }
  return "?";
}

}  // namespace detail

inline EvalValue eval(const ExprPtr& expr, const EvalContext& ctx);

namespace detail {

inline bool eval_bool(const ExprPtr& e, const EvalContext& ctx, const char* where) {
  EvalValue v = eval(e, ctx);
  if (const auto* val = std::get_if<Value>(&v))
    if (const auto* b = std::get_if<bool>(val)) return *b;
  throw EvalError(std::string(where) + " requires a boolean, got " + describe(v));
}

inline EvalValue eval_compare(BinaryOp op, const EvalValue& l, const EvalValue& r) {
  const auto* ld = std::get_if<DurationV>(&l);
  const auto* rd = std::get_if<DurationV>(&r);
  if (ld && rd) return Value{ordered(op, ld->ms, rd->ms)};
  if (ld || rd)
    throw EvalError(std::string("cannot order ") + describe(l) + " against " + describe(r));
  const Value& lv = std::get<Value>(l);
  const Value& rv = std::get<Value>(r);
  if (lv.index() != rv.index())
    throw EvalError(std::string("cannot order ") + describe(l) + " against " + describe(r));
  switch (kind_of(lv)) {
    case ValueKind::Integer: return Value{ordered(op, std::get<std::int64_t>(lv), std::get<std::int64_t>(rv))};
    case ValueKind::Decimal: return Value{ordered(op, std::get<double>(lv), std::get<double>(rv))};
    case ValueKind::Text: return Value{ordered(op, std::get<std::string>(lv), std::get<std::string>(rv))};
    case ValueKind::Timestamp: return Value{ordered(op, std::get<Timestamp>(lv).ms, std::get<Timestamp>(rv).ms)};
    case ValueKind::Boolean: break;
  }
  throw EvalError("booleans have no ordering");
}

inline EvalValue eval_arith(BinaryOp op, const EvalValue& l, const EvalValue& r) {
  const auto* ld = std::get_if<DurationV>(&l);
  const auto* rd = std::get_if<DurationV>(&r);
  const auto* lv = std::get_if<Value>(&l);
  const auto* rv = std::get_if<Value>(&r);

  auto fail = [&]() -> EvalValue {
    throw EvalError(std::string("cannot apply ") + op_text(op) + " to " + describe(l) + " and " +
                    describe(r));
  };

  if (op == BinaryOp::Add) {
    if (ld && rd) return DurationV{ld->ms + rd->ms};
    if (lv && rd && std::holds_alternative<Timestamp>(*lv))
      return Value{Timestamp{std::get<Timestamp>(*lv).ms + rd->ms}};
    if (ld && rv && std::holds_alternative<Timestamp>(*rv))
      return Value{Timestamp{std::get<Timestamp>(*rv).ms + ld->ms}};
    if (lv && rv && lv->index() == rv->index()) {
      if (const auto* a = std::get_if<std::int64_t>(lv)) return Value{*a + std::get<std::int64_t>(*rv)};
      if (const auto* a = std::get_if<double>(lv)) return Value{*a + std::get<double>(*rv)};
    }
    return fail();
  }
  if (op == BinaryOp::Sub) {
    if (ld && rd) return DurationV{ld->ms - rd->ms};
    if (lv && rd && std::holds_alternative<Timestamp>(*lv))
      return Value{Timestamp{std::get<Timestamp>(*lv).ms - rd->ms}};
    if (lv && rv && lv->index() == rv->index()) {
      if (const auto* a = std::get_if<std::int64_t>(lv)) return Value{*a - std::get<std::int64_t>(*rv)};
      if (const auto* a = std::get_if<double>(lv)) return Value{*a - std::get<double>(*rv)};
      if (const auto* a = std::get_if<Timestamp>(lv))
        return DurationV{a->ms - std::get<Timestamp>(*rv).ms};
    }
    return fail();
  }
  // Mul
  if (ld && rv && std::holds_alternative<std::int64_t>(*rv))
    return DurationV{ld->ms * std::get<std::int64_t>(*rv)};
  if (lv && rd && std::holds_alternative<std::int64_t>(*lv))
    return DurationV{std::get<std::int64_t>(*lv) * rd->ms};
  if (lv && rv && lv->index() == rv->index()) {
    if (const auto* a = std::get_if<std::int64_t>(lv)) return Value{*a * std::get<std::int64_t>(*rv)};
    if (const auto* a = std::get_if<double>(lv)) return Value{*a * std::get<double>(*rv)};
  }
  return fail();
}

}  // namespace detail

inline EvalValue eval(const ExprPtr& expr, const EvalContext& ctx) {
  struct Visitor {
    const EvalContext& ctx;

    EvalValue operator()(const Expr::Literal& n) const { return n.value; }
    EvalValue operator()(const Expr::Duration& n) const { return n.value; }
    EvalValue operator()(const Expr::Now&) const { return Value{Timestamp{ctx.now_ms}}; }

    EvalValue operator()(const Expr::Name& n) const {
      if (ctx.bindings)
        if (auto it = ctx.bindings->find(n.name); it != ctx.bindings->end()) return it->second;
      throw EvalError("unbound name '" + n.name + "'");
    }

    EvalValue operator()(const Expr::Unary& n) const {
      if (n.op == UnaryOp::Not)
        return Value{!detail::eval_bool(n.operand, ctx, "'not'")};
      EvalValue v = eval(n.operand, ctx);
      if (const auto* d = std::get_if<DurationV>(&v)) return DurationV{-d->ms};
      const Value& val = std::get<Value>(v);
      if (const auto* i = std::get_if<std::int64_t>(&val)) return Value{-*i};
      if (const auto* f = std::get_if<double>(&val)) return Value{-*f};
      throw EvalError(std::string("cannot negate ") + detail::describe(v));
    }

    EvalValue operator()(const Expr::Binary& n) const {
      switch (n.op) {
        case BinaryOp::And:
          return Value{detail::eval_bool(n.lhs, ctx, "'and'") && detail::eval_bool(n.rhs, ctx, "'and'")};
        case BinaryOp::Or:
          return Value{detail::eval_bool(n.lhs, ctx, "'or'") || detail::eval_bool(n.rhs, ctx, "'or'")};
        case BinaryOp::Eq:
          return Value{detail::eval_equal(eval(n.lhs, ctx), eval(n.rhs, ctx))};
        case BinaryOp::Ne:
          return Value{!detail::eval_equal(eval(n.lhs, ctx), eval(n.rhs, ctx))};
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
          return detail::eval_compare(n.op, eval(n.lhs, ctx), eval(n.rhs, ctx));
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
          return detail::eval_arith(n.op, eval(n.lhs, ctx), eval(n.rhs, ctx));
      }
      throw EvalError("unknown operator");
    }
  };
  return std::visit(Visitor{ctx}, expr->node);
}

// Evaluates to a plain value; durations are transient and may not escape
// into event parameters or assertions.
inline Value eval_to_value(const ExprPtr& expr, const EvalContext& ctx) {
  EvalValue v = eval(expr, ctx);
  if (std::holds_alternative<DurationV>(v))
    throw EvalError("a duration cannot be used as a value here");
  return std::get<Value>(v);
}

inline void collect_names(const ExprPtr& expr, std::set<std::string>& out) {
  struct Visitor {
    std::set<std::string>& out;
    void operator()(const Expr::Literal&) const {}
    void operator()(const Expr::Duration&) const {}
    void operator()(const Expr::Now&) const {}
    void operator()(const Expr::Name& n) const { out.insert(n.name); }
    void operator()(const Expr::Unary& n) const { collect_names(n.operand, out); }
    void operator()(const Expr::Binary& n) const {
      collect_names(n.lhs, out);
      collect_names(n.rhs, out);
    }
  };
  std::visit(Visitor{out}, expr->node);
}

// Renders a duration with the largest unit that divides it exactly.
inline std::string render_duration(DurationV d) {
  std::int64_t ms = d.ms;
  std::string sign;
  if (ms < 0) {
    sign = "-";
    ms = -ms;
  }
  if (ms != 0 && ms % 3'600'000 == 0) return sign + std::to_string(ms / 3'600'000) + "h";
  if (ms != 0 && ms % 60'000 == 0) return sign + std::to_string(ms / 60'000) + "min";
  if (ms != 0 && ms % 1'000 == 0) return sign + std::to_string(ms / 1'000) + "s";
  return sign + std::to_string(ms) + "ms";
}

namespace detail {

// Precedence levels for printing: or < and < not < comparison < additive <
// multiplicative < unary minus < primary.
inline int precedence(const Expr& e) {
  struct Visitor {
    int operator()(const Expr::Literal&) const { return 7; }
    int operator()(const Expr::Duration&) const { return 7; }
    int operator()(const Expr::Now&) const { return 7; }
    int operator()(const Expr::Name&) const { return 7; }
    int operator()(const Expr::Unary& n) const { return n.op == UnaryOp::Not ? 2 : 6; }
    int operator()(const Expr::Binary& n) const {
      switch (n.op) {
        case BinaryOp::Or: return 0;
        case BinaryOp::And: return 1;
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return 3;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 4;
        case BinaryOp::Mul: return 5;
      }
      return 7;
    }
  };
  return std::visit(Visitor{}, e.node);
}

}  // namespace detail

inline std::string pretty_print(const ExprPtr& expr) {
  struct Printer {
    const Expr& e;

    static std::string child(const ExprPtr& c, int parent_prec, bool tighten) {
      std::string s = pretty_print(c);
      int p = detail::precedence(*c);
      if (p < parent_prec || (tighten && p == parent_prec)) return "(" + s + ")";
      return s;
    }

    std::string operator()(const Expr::Literal& n) const { return render_value(n.value); }
    std::string operator()(const Expr::Duration& n) const { return render_duration(n.value); }
    std::string operator()(const Expr::Now&) const { return "now"; }
    std::string operator()(const Expr::Name& n) const { return n.name; }

    std::string operator()(const Expr::Unary& n) const {
      int prec = detail::precedence(e);
      if (n.op == UnaryOp::Not) return "not " + child(n.operand, prec, true);
      return "-" + child(n.operand, prec, true);
    }

    std::string operator()(const Expr::Binary& n) const {
      int prec = detail::precedence(e);
      // Left associative: the right child needs parens at equal precedence.
      return child(n.lhs, prec, false) + " " + detail::op_text(n.op) + " " +
             child(n.rhs, prec, true);
    }
  };
  return std::visit(Printer{*expr}, expr->node);
}

}  // namespace scenweave
