#pragma once

#include "ftmpst/ast.hpp"

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftmpst {

struct MsgType {
  enum class Kind { R, U, BR, BW, Deleg };
  Kind kind = Kind::R;
  Sort sort = Sort::Nat;
  Label label;
  std::string channel;
  Role role = 0;

  static MsgType r(Sort s);
  static MsgType u(Label l, Sort s);
  static MsgType br(Label l);
  static MsgType bw(Label l);
  static MsgType deleg(std::string channel, Role role);

  bool operator==(const MsgType&) const = default;
};

std::string to_string(const MsgType& m);

struct QueueKey {
  std::string session;
  Role from = 0;
  Role to = 0;
  auto operator<=>(const QueueKey&) const = default;
};

struct LinearityViolation : std::runtime_error {
  std::string key;
  explicit LinearityViolation(const std::string& k) : std::runtime_error("linearity violation on " + k), key(k) {}
};

struct SessionEnv {
  std::map<Actor, Local> actors;
  std::map<QueueKey, std::vector<MsgType>> queues;

  bool empty() const { return actors.empty() && queues.empty(); }
  // Assignments restricted to one session.
  SessionEnv restrict_to(const std::string& session) const;
  std::set<std::string> sessions() const;
};

// Adds an assignment; End assignments are absorbed.
SessionEnv env_compose(SessionEnv env, const Actor& a, const Local& t);
SessionEnv env_compose(SessionEnv env, const QueueKey& q, std::vector<MsgType> contents);
SessionEnv env_compose(SessionEnv env, const SessionEnv& other);

// No queues and only unreliable prefixes.
bool un(const SessionEnv& env);
std::string to_string(const SessionEnv& env);
// Canonical key; recursion heads are unfolded so equal environments compare equal.
std::string env_key(const SessionEnv& env);
// Bisimilarity of local types up to unfolding, with branches as unordered maps.
bool type_equiv(const Local& a, const Local& b);
bool env_equiv(const SessionEnv& a, const SessionEnv& b);

struct ProcVarType {
  SessionEnv env;
  std::vector<Sort> params;
};

struct GlobalEnv {
  std::map<std::string, Sort> values;
  std::map<std::string, Global> shared;
  std::vector<std::pair<Label, Sort>> labels;
  std::map<std::string, ProcVarType> procvars;

  // Each insertion rejects a clash with LinearityViolation.
  void add_value(const std::string& x, Sort s);
  void add_shared(const std::string& a, const Global& g);  // also records the unreliable label sorts of g
  void add_label(const Label& l, Sort s);
  std::optional<Sort> label_sort(const Label& l) const;
};

struct UnsortedName : std::runtime_error {
  std::string name;
  explicit UnsortedName(const std::string& n) : std::runtime_error("unsorted name " + n), name(n) {}
};

struct SortMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Sort expr_sort(const GlobalEnv& gamma, const Expr& e);

struct TypeRejection {
  std::string rule;
  std::string path;
  std::string expected;
  std::string found;
  std::string message;
  std::string subject;  // the offending term, abbreviated
};

struct DerivationStep {
  std::string rule;
  std::string path;
};

struct TypeResult {
  bool ok = false;
  std::vector<DerivationStep> derivation;
  std::optional<TypeRejection> rejection;
};

std::string to_string(const TypeRejection& r);

struct TypecheckOptions {
  // Environment for a restricted session, bypassing the reachability search.
  std::map<std::string, SessionEnv> session_hints;
  int unfold_bound = 2;
  int max_states = 20000;
};

TypeResult typecheck(const GlobalEnv& gamma, const Process& p, const SessionEnv& delta,
                     const TypecheckOptions& opts = {});

// Successors under the session-environment reduction rules touching `session`.
struct EnvStep {
  std::string rule;
  Actor subject;
  std::string detail;
  SessionEnv env;
};
std::vector<EnvStep> env_step_rules(const SessionEnv& delta, const std::string& session);
std::vector<SessionEnv> env_step(const SessionEnv& delta, const std::string& session);

SessionEnv initial_env(const Global& g, const std::string& session);

struct DepthExceeded : std::runtime_error {
  DepthExceeded() : std::runtime_error("coherence search exceeded its state budget") {}
};

// Reachable session environments of `session` from the projections of g, unfolding each
// recursion at most `unfold_bound` times per actor.
std::vector<SessionEnv> reachable_envs(const Global& g, const std::string& session, int unfold_bound = 2,
                                       int max_states = 20000);
bool coherence_witness(const GlobalEnv& gamma, const SessionEnv& delta, int unfold_bound = 2,
                       int max_states = 20000);

}  // namespace ftmpst
