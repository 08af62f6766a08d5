#pragma once

#include "ftmpst/ast.hpp"
#include "ftmpst/oracle.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftmpst {

enum class Rule {
  Init, RSend, RGet, USend, UGet, USkip, ML, RSel, RBran, WSel, WBran, WSkip, Crash, IfT, IfF, Deleg, SRecv, Rec
};

std::string to_string(Rule r);
std::optional<Rule> rule_from_name(const std::string& name);
const std::vector<Rule>& all_rules();
bool is_failure_rule(Rule r);  // ML, USkip, WSkip, Crash

// A closed system in normal form: top-level restrictions around a sorted soup of components.
struct SystemState {
  std::vector<std::string> restricted;
  std::vector<Process> components;
  std::vector<std::string> texts;  // canonical text of each component
  std::uint64_t fresh = 1;         // suffix of the next generated name
  std::int64_t next_message = 1;   // id attached to the label of the next sent message

  Process process() const;
  std::string text() const;
  std::uint64_t digest() const;
};

SystemState make_state(const Process& p);
// Drops inactive units, flattens and sorts parallel components, floats restrictions outwards,
// drops unused restrictions and evaluates head `let` bindings.
Process congruent_normal_form(const Process& p);

struct Redex {
  Rule rule = Rule::Init;
  std::vector<std::size_t> components;  // subject components in the origin state
  std::optional<std::string> session;
  std::vector<Role> roles;              // acting role first, then partners
  std::vector<Actor> actors;            // actors removed by Crash
  std::optional<Label> label;
  std::optional<Value> value;
  std::uint64_t origin = 0;             // digest of the state it was enumerated from
};

std::string to_string(const Redex& r);

struct StaleRedex : std::runtime_error {
  StaleRedex() : std::runtime_error("redex does not belong to this state") {}
};

std::vector<Redex> enabled_redexes(const SystemState& state, const FailureOracle& oracle);
SystemState apply_redex(const SystemState& state, const Redex& r);

// Whether some component still contains an action prefix.
bool has_action_prefixes(const SystemState& state);

}  // namespace ftmpst
