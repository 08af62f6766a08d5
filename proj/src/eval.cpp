#include "ftmpst/eval.hpp"

#include <optional>

namespace ftmpst {

Nat roll(const Nat& sum) { return sum + (sum * 7 + 3) % 6 + 1; }

Nat best(const Value& vec) {
  std::optional<Nat> m;
  for (auto& v : vec.items)
    if (v.kind == Value::Kind::Nat && (!m || v.n < *m)) m = v.n;
  if (!m) throw AllBottom();
  return *m;
}

Nat count_ack(const Value& vec) {
  Nat c = 0;
  for (auto& v : vec.items)
    if (v.kind == Value::Kind::Bool && v.b) ++c;
  return c;
}

Nat known(const Value& vec) {
  Nat c = 0;
  for (auto& v : vec.items)
    if (v.kind != Value::Kind::Bot) ++c;
  return c;
}

namespace {

const Nat& as_nat(const Value& v, const char* what) {
  if (v.kind != Value::Kind::Nat) throw EvalError(std::string(what) + " expects a number, got " + to_string(v));
  return v.n;
}

bool as_bool(const Value& v, const char* what) {
  if (v.kind != Value::Kind::Bool) throw EvalError(std::string(what) + " expects a boolean, got " + to_string(v));
  return v.b;
}

const Value& as_vec(const Value& v, const char* what) {
  if (v.kind != Value::Kind::Tuple) throw EvalError(std::string(what) + " expects a vector, got " + to_string(v));
  return v;
}

size_t index_of(const Value& vec, const Value& i, const char* what) {
  const Nat& n = as_nat(i, what);
  if (n < 1 || n > vec.items.size()) throw EvalError(std::string(what) + ": index out of range");
  return static_cast<size_t>(n) - 1;
}

Value call(const std::string& fn, const std::vector<Value>& a) {
  auto arity = [&](size_t k) {
    if (a.size() != k) throw EvalError(fn + " expects " + std::to_string(k) + " arguments");
  };
  if (fn == "roll") {
    arity(1);
    return Value::nat(roll(as_nat(a[0], "roll")));
  }
  if (fn == "best") {
    arity(1);
    return Value::nat(best(as_vec(a[0], "best")));
  }
  if (fn == "count_ack") {
    arity(1);
    return Value::nat(count_ack(as_vec(a[0], "count_ack")));
  }
  if (fn == "size") {
    arity(1);
    return Value::nat(known(as_vec(a[0], "size")));
  }
  if (fn == "get") {
    arity(2);
    const Value& v = as_vec(a[0], "get");
    return v.items[index_of(v, a[1], "get")];
  }
  if (fn == "update") {
    arity(3);
    Value v = as_vec(a[0], "update");
    size_t i = index_of(v, a[1], "update");
    if (a[2].kind != Value::Kind::Bot) v.items[i] = a[2];
    return v;
  }
  if (fn == "vec") {
    arity(2);
    const Nat& n = as_nat(a[0], "vec");
    if (n > 4096) throw EvalError("vec: size too large");
    return Value::tuple(std::vector<Value>(static_cast<size_t>(n), a[1]));
  }
  throw EvalError("unknown function " + fn);
}

}  // namespace

Value eval_expr(const Expr& e) {
  switch (e->kind) {
    case ExprKind::Const: return e->value;
    case ExprKind::Name: throw OpenExpression(e->name);
    case ExprKind::Not: return Value::boolean(!as_bool(eval_expr(e->args[0]), "!"));
    case ExprKind::Tuple: {
      std::vector<Value> items;
      for (auto& a : e->args) items.push_back(eval_expr(a));
      return Value::tuple(std::move(items));
    }
    case ExprKind::Call: {
      std::vector<Value> args;
      for (auto& a : e->args) args.push_back(eval_expr(a));
      return call(e->name, args);
    }
    case ExprKind::Binary: break;
  }
  switch (e->op) {
    case BinOp::And: {
      // short-circuit keeps guards like `x != bot && f(x)` total
      if (!as_bool(eval_expr(e->args[0]), "&&")) return Value::boolean(false);
      return Value::boolean(as_bool(eval_expr(e->args[1]), "&&"));
    }
    case BinOp::Or: {
      if (as_bool(eval_expr(e->args[0]), "||")) return Value::boolean(true);
      return Value::boolean(as_bool(eval_expr(e->args[1]), "||"));
    }
    default: break;
  }
  Value l = eval_expr(e->args[0]);
  Value r = eval_expr(e->args[1]);
  switch (e->op) {
    case BinOp::Eq: return Value::boolean(l == r);
    case BinOp::Ne: return Value::boolean(!(l == r));
    default: break;
  }
  std::string sym = to_string(e->op);
  const Nat& a = as_nat(l, sym.c_str());
  const Nat& b = as_nat(r, sym.c_str());
  switch (e->op) {
    case BinOp::Add: return Value::nat(a + b);
    case BinOp::Sub: return Value::nat(a > b ? Nat(a - b) : Nat(0));
    case BinOp::Mul: return Value::nat(a * b);
    case BinOp::Div: return Value::nat(b == 0 ? Nat(0) : Nat(a / b));
    case BinOp::Mod: return Value::nat(b == 0 ? Nat(0) : Nat(a % b));
    case BinOp::Le: return Value::boolean(a <= b);
    case BinOp::Lt: return Value::boolean(a < b);
    case BinOp::Ge: return Value::boolean(a >= b);
    case BinOp::Gt: return Value::boolean(a > b);
    default: break;
  }
  throw EvalError("unsupported operator");
}

}  // namespace ftmpst
