#pragma once

#include "ftmpst/ast.hpp"

#include <string_view>

namespace ftmpst {

// All parsers throw SyntaxError with a 1-based line/column.
Expr parse_expr(std::string_view text);
Global parse_global(std::string_view text);
Local parse_local(std::string_view text);
Process parse_process(std::string_view text);

}  // namespace ftmpst
