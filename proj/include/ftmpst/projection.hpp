#pragma once

#include "ftmpst/ast.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace ftmpst {

// Carries the deepest pair of local types that could not be unified.
struct MergeUndefined : std::runtime_error {
  std::string path;
  Local left;
  Local right;
  std::string reason;
  MergeUndefined(std::string path, Local left, Local right, std::string reason);
};

struct NotProjectable : std::runtime_error {
  Role role;
  std::string path;
  std::string cause;  // "merge-failure" or "par-both-sides"
  std::string detail;
  NotProjectable(Role role, std::string path, std::string cause, std::string detail);
};

Local merge(const Local& a, const Local& b);
Local project(const Global& g, Role p);
std::map<Role, Local> project_all(const Global& g);

}  // namespace ftmpst
