#pragma once

#include "ftmpst/ast.hpp"

#include <stdexcept>
#include <string>

namespace ftmpst {

struct OpenExpression : std::runtime_error {
  std::string name;
  explicit OpenExpression(const std::string& n) : std::runtime_error("open expression: unbound name " + n), name(n) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllBottom : EvalError {
  AllBottom() : EvalError("best() of a vector without any belief") {}
};

Value eval_expr(const Expr& e);

// Builtins available as calls in expressions.
Nat roll(const Nat& sum);
Nat best(const Value& vec);
Nat count_ack(const Value& vec);
Nat known(const Value& vec);  // number of non-bottom entries

}  // namespace ftmpst
