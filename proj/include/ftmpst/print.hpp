#pragma once

#include "ftmpst/ast.hpp"

#include <string>

namespace ftmpst {

// Canonical DSL text; parse(print(x)) reproduces x.
std::string to_string(const Expr& e);
std::string to_string(const Global& g);
std::string to_string(const Local& l);
std::string to_string(const Process& p);

}  // namespace ftmpst
