#pragma once

#include "ftmpst/ast.hpp"

#include <string>
#include <vector>

namespace ftmpst {

struct WfViolation {
  std::string path;  // e.g. "/rec t/branch play/cont"
  int condition = 0;
  std::string message;
};

struct WfReport {
  bool ok = true;
  std::vector<WfViolation> violations;

  void add(std::string path, int condition, std::string message);
};

// Global conditions: 1 closed and guarded, 2 dense roles, 3 no self-communication,
// 4 branching sanity, 5 disjoint parallel roles.
WfReport check_global_wf(const Global& g);
// Local conditions: 1 closed and guarded, 2 default present and labels distinct.
WfReport check_local_wf(const Local& l);

std::string to_string(const WfReport& r);

}  // namespace ftmpst
