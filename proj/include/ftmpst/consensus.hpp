#pragma once

#include "ftmpst/ast.hpp"
#include "ftmpst/verifier.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftmpst {

struct InvalidSize : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Phase labels and the decision branches of the rotating coordinator protocol.
inline const Label kPhase1{"p1"}, kPhase2{"p2"}, kPhase3{"p3"}, kZero{"Zero"}, kOne{"One"}, kNextRound{"d"};

int quorum(int n);  // ceil((n - 1) / 2)

Global build_grc(int n);
// Role n requests the session on shared channel `shared`, roles 1..n-1 accept it.
Process build_rc_system(int n, const std::map<Role, int>& beliefs, const std::string& shared = "a");
std::string rc_system_text(int n, const std::map<Role, int>& beliefs, const std::string& shared = "a");

struct ConsensusVerdict {
  bool termination = false;
  bool agreement = false;
  bool validity = false;
  bool single_origin = false;  // all decisions stem from one weak broadcast
  std::map<Role, std::optional<int>> decisions;
  std::set<Role> correct;

  bool ok() const { return termination && agreement && validity && single_origin; }
};

ConsensusVerdict verify_consensus(const Trace& trace, int n, const std::map<Role, int>& beliefs);

std::string to_string(const ConsensusVerdict& v);

}  // namespace ftmpst
