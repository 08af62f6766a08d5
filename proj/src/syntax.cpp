#include "ftmpst/syntax.hpp"

#include <functional>
#include <type_traits>

namespace ftmpst {

// ---------------------------------------------------------------- roles

namespace {

void collect_roles(const Local& l, std::set<Role>& out);

void collect_roles(const Global& g, std::set<Role>& out) {
  switch (g->kind) {
    case GKind::ComR:
    case GKind::ComU:
      out.insert(g->from);
      out.insert(g->to);
      collect_roles(g->cont, out);
      return;
    case GKind::BranR:
      out.insert(g->from);
      out.insert(g->to);
      for (auto& [l, b] : g->branches) collect_roles(b, out);
      return;
    case GKind::BranW:
      out.insert(g->from);
      out.insert(g->receivers.begin(), g->receivers.end());
      for (auto& [l, b] : g->branches) collect_roles(b, out);
      return;
    case GKind::Par:
      collect_roles(g->cont, out);
      collect_roles(g->right, out);
      return;
    case GKind::Rec: collect_roles(g->cont, out); return;
    case GKind::Var:
    case GKind::End: return;
    case GKind::Deleg:
      out.insert(g->from);
      out.insert(g->to);
      collect_roles(g->cont, out);
      return;
  }
}

void collect_roles(const Local& l, std::set<Role>& out) {
  switch (l->kind) {
    case LKind::SelW:
      out.insert(l->receivers.begin(), l->receivers.end());
      for (auto& [x, b] : l->branches) collect_roles(b, out);
      return;
    case LKind::SelR:
    case LKind::BranR:
    case LKind::BranW:
      out.insert(l->peer);
      for (auto& [x, b] : l->branches) collect_roles(b, out);
      return;
    case LKind::Rec: collect_roles(l->cont, out); return;
    case LKind::Var:
    case LKind::End: return;
    default:
      out.insert(l->peer);
      collect_roles(l->cont, out);
      return;
  }
}

}  // namespace

std::set<Role> roles_of(const Global& g) {
  std::set<Role> out;
  collect_roles(g, out);
  return out;
}

std::set<Role> roles_of(const Local& l) {
  std::set<Role> out;
  collect_roles(l, out);
  return out;
}

// ---------------------------------------------------------------- unreliable_only

bool unreliable_only(const Global& g) {
  switch (g->kind) {
    case GKind::ComR:
    case GKind::BranR:
    case GKind::Deleg: return false;
    case GKind::ComU:
    case GKind::Rec: return unreliable_only(g->cont);
    case GKind::BranW:
      for (auto& [l, b] : g->branches)
        if (!unreliable_only(b)) return false;
      return true;
    case GKind::Par: return unreliable_only(g->cont) && unreliable_only(g->right);
    case GKind::Var:
    case GKind::End: return true;
  }
  return true;
}

bool unreliable_only(const Local& l) {
  switch (l->kind) {
    case LKind::SendR:
    case LKind::GetR:
    case LKind::SelR:
    case LKind::BranR:
    case LKind::DelegOut:
    case LKind::DelegIn: return false;
    case LKind::SendU:
    case LKind::GetU:
    case LKind::Rec: return unreliable_only(l->cont);
    case LKind::SelW:
    case LKind::BranW:
      for (auto& [x, b] : l->branches)
        if (!unreliable_only(b)) return false;
      return true;
    case LKind::Var:
    case LKind::End: return true;
  }
  return true;
}

bool unreliable_only(const Process& p) {
  switch (p->kind) {
    case PKind::SendR:
    case PKind::GetR:
    case PKind::SelR:
    case PKind::BranR:
    case PKind::DelegOut:
    case PKind::DelegIn:
    case PKind::Queue: return false;
    case PKind::SelW:
    case PKind::BranW:
      for (auto& [x, b] : p->branches)
        if (!unreliable_only(b)) return false;
      return !p->cont || unreliable_only(p->cont);
    case PKind::Par:
    case PKind::If: return unreliable_only(p->cont) && unreliable_only(p->alt);
    case PKind::Var:
    case PKind::End:
    case PKind::Crash: return true;
    default: return unreliable_only(p->cont);
  }
}

// ---------------------------------------------------------------- names

namespace {

void expr_names(const Expr& e, std::set<std::string>& out) {
  if (e->kind == ExprKind::Name) out.insert(e->name);
  for (auto& a : e->args) expr_names(a, out);
}

bool is_prefix(PKind k) {
  switch (k) {
    case PKind::SendR:
    case PKind::GetR:
    case PKind::SendU:
    case PKind::GetU:
    case PKind::SelR:
    case PKind::BranR:
    case PKind::SelW:
    case PKind::BranW:
    case PKind::DelegOut:
    case PKind::DelegIn: return true;
    default: return false;
  }
}

// Collects the free names of a process, or every name when include_bound is set.
struct NameWalker {
  bool include_bound = false;
  std::set<std::string> out;

  void name(const std::string& n, const std::set<std::string>& bound) {
    if (n.empty()) return;
    if (include_bound || !bound.count(n)) out.insert(n);
  }

  void expr(const Expr& e, const std::set<std::string>& bound) {
    if (!e) return;
    std::set<std::string> ns;
    expr_names(e, ns);
    for (auto& n : ns) name(n, bound);
  }

  void walk(const Process& p, std::set<std::string> bound) {
    const PNode& n = *p;
    auto bind = [&](const std::string& b) {
      if (include_bound) out.insert(b);
      bound.insert(b);
    };
    switch (n.kind) {
      case PKind::Req:
      case PKind::Acc:
        name(n.shared, bound);
        bind(n.chan);
        walk(n.cont, bound);
        return;
      case PKind::Par:
      case PKind::If:
        expr(n.expr, bound);
        walk(n.cont, bound);
        walk(n.alt, bound);
        return;
      case PKind::Rec:
        for (auto& a : n.args) expr(a, bound);
        for (auto& x : n.params) bind(x);
        walk(n.cont, bound);
        return;
      case PKind::Var:
        for (auto& a : n.args) expr(a, bound);
        return;
      case PKind::End:
      case PKind::Crash: return;
      case PKind::Restrict:
        bind(n.binder);
        walk(n.cont, bound);
        return;
      case PKind::Let:
        expr(n.expr, bound);
        bind(n.binder);
        walk(n.cont, bound);
        return;
      case PKind::Queue:
        name(n.chan, bound);
        for (auto& m : n.queue)
          if (m.kind == Message::Kind::Deleg) name(m.channel, bound);
        return;
      default: break;
    }
    // action prefixes
    name(n.chan, bound);
    name(n.dchan, bound);
    expr(n.expr, bound);
    for (auto& [l, b] : n.branches) walk(b, bound);
    if (n.kind == PKind::GetR || n.kind == PKind::GetU || n.kind == PKind::DelegIn) bind(n.binder);
    if (n.cont) walk(n.cont, bound);
  }
};

}  // namespace

std::set<std::string> free_names(const Expr& e) {
  std::set<std::string> out;
  expr_names(e, out);
  return out;
}

std::set<std::string> free_names(const Process& p) {
  NameWalker w;
  w.walk(p, {});
  return std::move(w.out);
}

std::set<std::string> all_names(const Process& p) {
  NameWalker w;
  w.include_bound = true;
  w.walk(p, {});
  return std::move(w.out);
}

namespace {

void ftv(const Global& g, std::set<std::string> bound, std::set<std::string>& out) {
  switch (g->kind) {
    case GKind::Var:
      if (!bound.count(g->var)) out.insert(g->var);
      return;
    case GKind::Rec:
      bound.insert(g->var);
      ftv(g->cont, bound, out);
      return;
    case GKind::End: return;
    case GKind::Par:
      ftv(g->cont, bound, out);
      ftv(g->right, bound, out);
      return;
    case GKind::BranR:
    case GKind::BranW:
      for (auto& [l, b] : g->branches) ftv(b, bound, out);
      return;
    default: ftv(g->cont, bound, out); return;
  }
}

void ftv(const Local& l, std::set<std::string> bound, std::set<std::string>& out) {
  switch (l->kind) {
    case LKind::Var:
      if (!bound.count(l->var)) out.insert(l->var);
      return;
    case LKind::Rec:
      bound.insert(l->var);
      ftv(l->cont, bound, out);
      return;
    case LKind::End: return;
    case LKind::SelR:
    case LKind::BranR:
    case LKind::SelW:
    case LKind::BranW:
      for (auto& [x, b] : l->branches) ftv(b, bound, out);
      return;
    default: ftv(l->cont, bound, out); return;
  }
}

void fpv(const Process& p, std::set<std::string> bound, std::set<std::string>& out) {
  switch (p->kind) {
    case PKind::Var:
      if (!bound.count(p->var)) out.insert(p->var);
      return;
    case PKind::Rec: bound.insert(p->var); break;
    default: break;
  }
  for (auto& [l, b] : p->branches) fpv(b, bound, out);
  if (p->cont) fpv(p->cont, bound, out);
  if (p->alt) fpv(p->alt, bound, out);
}

}  // namespace

std::set<std::string> free_type_vars(const Global& g) {
  std::set<std::string> out;
  ftv(g, {}, out);
  return out;
}

std::set<std::string> free_type_vars(const Local& l) {
  std::set<std::string> out;
  ftv(l, {}, out);
  return out;
}

std::set<std::string> free_proc_vars(const Process& p) {
  std::set<std::string> out;
  fpv(p, {}, out);
  return out;
}

// ---------------------------------------------------------------- actors

namespace {

void collect_actors(const Process& p, std::set<std::string> bound, std::set<Actor>& out) {
  const PNode& n = *p;
  if (is_prefix(n.kind) && !bound.count(n.chan)) out.insert({n.chan, n.role});
  switch (n.kind) {
    case PKind::Req:
    case PKind::Acc:
    case PKind::Restrict: bound.insert(n.kind == PKind::Restrict ? n.binder : n.chan); break;
    case PKind::DelegIn: bound.insert(n.binder); break;
    default: break;
  }
  for (auto& [l, b] : n.branches) collect_actors(b, bound, out);
  if (n.cont) collect_actors(n.cont, bound, out);
  if (n.alt) collect_actors(n.alt, bound, out);
}

void head_actors(const Process& p, std::vector<Actor>& out) {
  switch (p->kind) {
    case PKind::Par:
      head_actors(p->cont, out);
      head_actors(p->alt, out);
      return;
    case PKind::Restrict: head_actors(p->cont, out); return;
    default:
      if (is_prefix(p->kind)) out.push_back({p->chan, p->role});
  }
}

}  // namespace

std::set<Actor> actors_of(const Process& p) {
  std::set<Actor> out;
  collect_actors(p, {}, out);
  return out;
}

std::vector<Actor> unguarded_actors(const Process& p) {
  std::vector<Actor> out;
  head_actors(p, out);
  return out;
}

// ---------------------------------------------------------------- substitution

Expr subst(const Expr& e, const std::map<std::string, Expr>& m) {
  if (m.empty()) return e;
  switch (e->kind) {
    case ExprKind::Const: return e;
    case ExprKind::Name: {
      auto it = m.find(e->name);
      return it == m.end() ? e : it->second;
    }
    default: break;
  }
  std::vector<Expr> args;
  bool changed = false;
  for (auto& a : e->args) {
    args.push_back(subst(a, m));
    changed |= args.back() != a;
  }
  if (!changed) return e;
  ExprNode n = *e;
  n.args = std::move(args);
  return std::make_shared<const ExprNode>(std::move(n));
}

namespace {

std::string fresh_variant(const std::string& base, const std::set<std::string>& avoid) {
  for (int k = 1;; ++k) {
    std::string c = base + "'" + std::to_string(k);
    if (!avoid.count(c)) return c;
  }
}

struct ProcSubst {
  std::map<std::string, Expr> names;
  std::string var;  // empty: no process-variable substitution
  const std::vector<std::string>* params = nullptr;
  Process body;
  std::set<std::string> protect;  // free names of the replacements

  bool empty() const { return names.empty() && var.empty(); }
};

Process apply_subst(const Process& p, const ProcSubst& s);

std::string mapped(const std::string& n, const ProcSubst& s) {
  auto it = s.names.find(n);
  if (it != s.names.end() && it->second->kind == ExprKind::Name) return it->second->name;
  return n;
}

bool relevant(const Process& scope, const ProcSubst& s) {
  if (!s.var.empty() && free_proc_vars(scope).count(s.var)) return true;
  if (s.names.empty()) return false;
  auto fn = free_names(scope);
  for (auto& [k, v] : s.names)
    if (fn.count(k)) return true;
  return false;
}

// Enters the scope of binder b: drops b from the substitution and renames b if it would capture.
void enter_binder(std::string& b, std::vector<Process*> scopes, ProcSubst& s) {
  s.names.erase(b);
  if (!s.protect.count(b)) return;
  bool needed = false;
  for (auto* sc : scopes) needed |= relevant(*sc, s);
  if (!needed) return;
  std::set<std::string> avoid = s.protect;
  for (auto* sc : scopes) {
    auto an = all_names(*sc);
    avoid.insert(an.begin(), an.end());
  }
  for (auto& [k, v] : s.names) avoid.insert(k);
  std::string nb = fresh_variant(b, avoid);
  ProcSubst r;
  r.names[b] = e_name(nb);
  r.protect = {nb};
  for (auto* sc : scopes) *sc = apply_subst(*sc, r);
  b = nb;
}

Process apply_subst(const Process& p, const ProcSubst& s) {
  if (s.empty()) return p;
  PNode n = *p;
  auto sub_expr = [&](Expr& e) {
    if (e) e = subst(e, s.names);
  };
  switch (n.kind) {
    case PKind::End:
    case PKind::Crash: return p;
    case PKind::Req:
    case PKind::Acc: {
      n.shared = mapped(n.shared, s);
      ProcSubst inner = s;
      enter_binder(n.chan, {&n.cont}, inner);
      n.cont = apply_subst(n.cont, inner);
      break;
    }
    case PKind::Par:
    case PKind::If:
      sub_expr(n.expr);
      n.cont = apply_subst(n.cont, s);
      n.alt = apply_subst(n.alt, s);
      break;
    case PKind::Rec: {
      for (auto& a : n.args) sub_expr(a);
      ProcSubst inner = s;
      if (inner.var == n.var) inner.var.clear();
      for (auto& x : n.params) enter_binder(x, {&n.cont}, inner);
      n.cont = apply_subst(n.cont, inner);
      break;
    }
    case PKind::Var: {
      for (auto& a : n.args) sub_expr(a);
      if (!s.var.empty() && n.var == s.var) return p_rec(n.var, *s.params, n.args, s.body);
      break;
    }
    case PKind::Restrict: {
      ProcSubst inner = s;
      enter_binder(n.binder, {&n.cont}, inner);
      n.cont = apply_subst(n.cont, inner);
      break;
    }
    case PKind::Let: {
      sub_expr(n.expr);
      ProcSubst inner = s;
      enter_binder(n.binder, {&n.cont}, inner);
      n.cont = apply_subst(n.cont, inner);
      break;
    }
    case PKind::Queue:
      n.chan = mapped(n.chan, s);
      for (auto& m : n.queue)
        if (m.kind == Message::Kind::Deleg) m.channel = mapped(m.channel, s);
      break;
    default: {
      n.chan = mapped(n.chan, s);
      if (!n.dchan.empty()) n.dchan = mapped(n.dchan, s);
      sub_expr(n.expr);
      for (auto& [l, b] : n.branches) b = apply_subst(b, s);
      if (n.kind == PKind::GetR || n.kind == PKind::GetU || n.kind == PKind::DelegIn) {
        ProcSubst inner = s;
        enter_binder(n.binder, {&n.cont}, inner);
        n.cont = apply_subst(n.cont, inner);
      } else if (n.cont) {
        n.cont = apply_subst(n.cont, s);
      }
      break;
    }
  }
  return std::make_shared<const PNode>(std::move(n));
}

}  // namespace

Process subst_names(const Process& p, const std::map<std::string, Expr>& m) {
  ProcSubst s;
  s.names = m;
  for (auto& [k, v] : m) {
    auto fn = free_names(v);
    s.protect.insert(fn.begin(), fn.end());
  }
  return apply_subst(p, s);
}

Process subst_value(const Process& p, const std::string& x, const Value& v) {
  return subst_names(p, {{x, e_const(v)}});
}

Process rename(const Process& p, const std::string& from, const std::string& to) {
  if (from == to) return p;
  return subst_names(p, {{from, e_name(to)}});
}

Process subst_proc_var(const Process& p, const std::string& var, const std::vector<std::string>& params,
                       const Process& body) {
  ProcSubst s;
  s.var = var;
  s.params = &params;
  s.body = body;
  s.protect = free_names(body);
  for (auto& x : params) s.protect.erase(x);
  return apply_subst(p, s);
}

Process subst_role(const Process& p, const std::string& chan, Role from, Role to) {
  if (from == to) return p;
  PNode n = *p;
  if (is_prefix(n.kind) && n.chan == chan && n.role == from) n.role = to;
  // rebinding the channel ends the scope
  bool shadow = ((n.kind == PKind::Req || n.kind == PKind::Acc) && n.chan == chan) ||
                ((n.kind == PKind::Restrict || n.kind == PKind::DelegIn) && n.binder == chan);
  if (shadow) return std::make_shared<const PNode>(std::move(n));
  for (auto& [l, b] : n.branches) b = subst_role(b, chan, from, to);
  if (n.cont) n.cont = subst_role(n.cont, chan, from, to);
  if (n.alt) n.alt = subst_role(n.alt, chan, from, to);
  return std::make_shared<const PNode>(std::move(n));
}

// ---------------------------------------------------------------- type variables

namespace {

std::set<std::string> type_vars_in(const Local& l) {
  std::set<std::string> out;
  std::function<void(const Local&)> go = [&](const Local& x) {
    if (x->kind == LKind::Var || x->kind == LKind::Rec) out.insert(x->var);
    for (auto& [k, b] : x->branches) go(b);
    if (x->cont) go(x->cont);
  };
  go(l);
  return out;
}

std::set<std::string> type_vars_in(const Global& g) {
  std::set<std::string> out;
  std::function<void(const Global&)> go = [&](const Global& x) {
    if (x->kind == GKind::Var || x->kind == GKind::Rec) out.insert(x->var);
    for (auto& [k, b] : x->branches) go(b);
    if (x->cont) go(x->cont);
    if (x->right) go(x->right);
  };
  go(g);
  return out;
}

template <class T, class Node, class Kind>
T subst_tv(const T& t, const std::string& var, const T& rep, const std::set<std::string>& rep_fv, Kind var_kind,
           Kind rec_kind) {
  if (t->kind == var_kind) return t->var == var ? rep : t;
  Node n = *t;
  if (t->kind == rec_kind) {
    if (n.var == var) return t;
    if (rep_fv.count(n.var)) {
      auto avoid = type_vars_in(t);
      avoid.insert(rep_fv.begin(), rep_fv.end());
      avoid.insert(var);
      std::string nv = fresh_variant(n.var, avoid);
      T renamed_var = std::make_shared<const Node>([&] {
        Node v;
        v.kind = var_kind;
        v.var = nv;
        return v;
      }());
      n.cont = subst_tv<T, Node, Kind>(n.cont, n.var, renamed_var, {nv}, var_kind, rec_kind);
      n.var = nv;
    }
  }
  for (auto& [k, b] : n.branches) b = subst_tv<T, Node, Kind>(b, var, rep, rep_fv, var_kind, rec_kind);
  if (n.cont) n.cont = subst_tv<T, Node, Kind>(n.cont, var, rep, rep_fv, var_kind, rec_kind);
  if constexpr (std::is_same_v<Node, GNode>) {
    if (n.right) n.right = subst_tv<T, Node, Kind>(n.right, var, rep, rep_fv, var_kind, rec_kind);
  }
  return std::make_shared<const Node>(std::move(n));
}

}  // namespace

Local subst_type_var(const Local& l, const std::string& var, const Local& replacement) {
  return subst_tv<Local, LNode, LKind>(l, var, replacement, free_type_vars(replacement), LKind::Var, LKind::Rec);
}

Global subst_type_var(const Global& g, const std::string& var, const Global& replacement) {
  return subst_tv<Global, GNode, GKind>(g, var, replacement, free_type_vars(replacement), GKind::Var, GKind::Rec);
}

Local unfold(const Local& l) {
  if (l->kind != LKind::Rec) return l;
  return subst_type_var(l->cont, l->var, l);
}

Global unfold(const Global& g) {
  if (g->kind != GKind::Rec) return g;
  return subst_type_var(g->cont, g->var, g);
}

Local unfold_all(const Local& l) {
  Local cur = l;
  for (int i = 0; i < 64 && cur->kind == LKind::Rec; ++i) cur = unfold(cur);
  return cur;
}

}  // namespace ftmpst
