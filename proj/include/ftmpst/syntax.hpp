#pragma once

#include "ftmpst/ast.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ftmpst {

std::set<Role> roles_of(const Global& g);
std::set<Role> roles_of(const Local& l);

bool unreliable_only(const Global& g);
bool unreliable_only(const Local& l);
bool unreliable_only(const Process& p);

std::set<std::string> free_names(const Expr& e);
std::set<std::string> free_names(const Process& p);
// Every name occurring in p, bound or free.
std::set<std::string> all_names(const Process& p);
std::set<std::string> free_type_vars(const Global& g);
std::set<std::string> free_type_vars(const Local& l);
// Process variables occurring free in p.
std::set<std::string> free_proc_vars(const Process& p);

// Actors of all action prefixes on free session names, guarded or not.
std::set<Actor> actors_of(const Process& p);
// Actors of prefixes in head position, with multiplicity.
std::vector<Actor> unguarded_actors(const Process& p);

Expr subst(const Expr& e, const std::map<std::string, Expr>& m);

// Capture-avoiding simultaneous substitution of names; renamed binders get a `'k` suffix.
Process subst_names(const Process& p, const std::map<std::string, Expr>& m);
Process subst_value(const Process& p, const std::string& x, const Value& v);
Process rename(const Process& p, const std::string& from, const std::string& to);
// P{proc/X}: every X<args> becomes mu X(params = args) . body.
Process subst_proc_var(const Process& p, const std::string& var, const std::vector<std::string>& params,
                       const Process& body);
// Replaces the first role of prefixes on `chan` that equals `from`.
Process subst_role(const Process& p, const std::string& chan, Role from, Role to);

Local subst_type_var(const Local& l, const std::string& var, const Local& replacement);
Global subst_type_var(const Global& g, const std::string& var, const Global& replacement);
// One unfolding of a top-level recursion; other terms are returned as is.
Local unfold(const Local& l);
Global unfold(const Global& g);
// Unfolds until the head is not a recursion (bounded, guarded types terminate at once).
Local unfold_all(const Local& l);

}  // namespace ftmpst
