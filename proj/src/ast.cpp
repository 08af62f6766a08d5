#include "ftmpst/ast.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace ftmpst {

bool labels_compatible(const Label& a, const Label& b) { return a.base == b.base; }

std::string to_string(const Label& l) {
  if (!l.meta) return l.base;
  return l.base + "@" + std::to_string(*l.meta);
}

std::string to_string(Sort s) {
  switch (s) {
    case Sort::Bool: return "bool";
    case Sort::Nat: return "nat";
    case Sort::Bel: return "bel";
    case Sort::Ack: return "ack";
    case Sort::Vec: return "vec";
    case Sort::Bot: return "bot";
  }
  return "?";
}

std::optional<Sort> sort_from_name(const std::string& name) {
  std::string k;
  for (char c : name) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "bool" || k == "b") return Sort::Bool;
  if (k == "nat" || k == "n") return Sort::Nat;
  if (k == "bel") return Sort::Bel;
  if (k == "ack") return Sort::Ack;
  if (k == "vec") return Sort::Vec;
  return std::nullopt;
}

bool sort_fits(Sort expected, Sort actual) {
  if (expected == actual) return true;
  if (expected == Sort::Nat && actual == Sort::Bel) return true;
  auto boolish = [](Sort s) { return s == Sort::Bool || s == Sort::Ack; };
  if (boolish(expected) && boolish(actual)) return true;
  if (actual == Sort::Bot && (expected == Sort::Bel || expected == Sort::Ack)) return true;
  return false;
}

Value Value::boolean(bool v) {
  Value r;
  r.kind = Kind::Bool;
  r.b = v;
  return r;
}

Value Value::nat(Nat v) {
  Value r;
  r.kind = Kind::Nat;
  r.n = std::move(v);
  return r;
}

Value Value::bot() { return Value{}; }

Value Value::tuple(std::vector<Value> v) {
  Value r;
  r.kind = Kind::Tuple;
  r.items = std::move(v);
  return r;
}

bool Value::operator==(const Value& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Bool: return b == o.b;
    case Kind::Nat: return n == o.n;
    case Kind::Bot: return true;
    case Kind::Tuple: return items == o.items;
  }
  return false;
}

std::string to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return v.b ? "true" : "false";
    case Value::Kind::Nat: return v.n.str();
    case Value::Kind::Bot: return "bot";
    case Value::Kind::Tuple: {
      std::string s = "[";
      for (size_t i = 0; i < v.items.size(); ++i) {
        if (i) s += ", ";
        s += to_string(v.items[i]);
      }
      return s + "]";
    }
  }
  return "?";
}

Sort sort_of(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return Sort::Bool;
    case Value::Kind::Nat: return (v.n == 0 || v.n == 1) ? Sort::Bel : Sort::Nat;
    case Value::Kind::Bot: return Sort::Bot;
    case Value::Kind::Tuple: return Sort::Vec;
  }
  return Sort::Bot;
}

// ---------------------------------------------------------------- expressions

namespace {
Expr mk(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }
}  // namespace

Expr e_const(Value v) {
  ExprNode n;
  n.kind = ExprKind::Const;
  n.value = std::move(v);
  return mk(std::move(n));
}
Expr e_bool(bool b) { return e_const(Value::boolean(b)); }
Expr e_nat(long long v) { return e_const(Value::nat(Nat(v))); }
Expr e_bot() { return e_const(Value::bot()); }
Expr e_name(std::string s) {
  ExprNode n;
  n.kind = ExprKind::Name;
  n.name = std::move(s);
  return mk(std::move(n));
}
Expr e_not(Expr a) {
  ExprNode n;
  n.kind = ExprKind::Not;
  n.args = {std::move(a)};
  return mk(std::move(n));
}
Expr e_bin(BinOp op, Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::Binary;
  n.op = op;
  n.args = {std::move(a), std::move(b)};
  return mk(std::move(n));
}
Expr e_tuple(std::vector<Expr> items) {
  if (std::all_of(items.begin(), items.end(), [](const Expr& x) { return x->kind == ExprKind::Const; })) {
    std::vector<Value> vs;
    for (auto& x : items) vs.push_back(x->value);
    return e_const(Value::tuple(std::move(vs)));
  }
  ExprNode n;
  n.kind = ExprKind::Tuple;
  n.args = std::move(items);
  return mk(std::move(n));
}
Expr e_call(std::string fn, std::vector<Expr> args) {
  ExprNode n;
  n.kind = ExprKind::Call;
  n.name = std::move(fn);
  n.args = std::move(args);
  return mk(std::move(n));
}

std::string to_string(BinOp op) {
  switch (op) {
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Le: return "<=";
    case BinOp::Lt: return "<";
    case BinOp::Ge: return ">=";
    case BinOp::Gt: return ">";
  }
  return "?";
}

// ---------------------------------------------------------------- types

namespace {
Global mk(GNode n) { return std::make_shared<const GNode>(std::move(n)); }
Local mk(LNode n) { return std::make_shared<const LNode>(std::move(n)); }
}  // namespace

Global g_comr(Role from, Role to, Sort s, Global cont) {
  GNode n;
  n.kind = GKind::ComR;
  n.from = from;
  n.to = to;
  n.sort = s;
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Global g_comu(Role from, Role to, Label l, Sort s, Global cont) {
  GNode n;
  n.kind = GKind::ComU;
  n.from = from;
  n.to = to;
  n.label = std::move(l);
  n.sort = s;
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Global g_branr(Role from, Role to, Branches<Global> bs) {
  GNode n;
  n.kind = GKind::BranR;
  n.from = from;
  n.to = to;
  n.branches = std::move(bs);
  return mk(std::move(n));
}
Global g_branw(Role from, std::vector<Role> receivers, Branches<Global> bs, Label dflt) {
  GNode n;
  n.kind = GKind::BranW;
  n.from = from;
  n.receivers = std::move(receivers);
  n.branches = std::move(bs);
  n.dflt = std::move(dflt);
  return mk(std::move(n));
}
Global g_par(Global a, Global b) {
  GNode n;
  n.kind = GKind::Par;
  n.cont = std::move(a);
  n.right = std::move(b);
  return mk(std::move(n));
}
Global g_rec(std::string var, Global body) {
  GNode n;
  n.kind = GKind::Rec;
  n.var = std::move(var);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Global g_var(std::string var) {
  GNode n;
  n.kind = GKind::Var;
  n.var = std::move(var);
  return mk(std::move(n));
}
Global g_end() {
  static const Global e = mk(GNode{});
  return e;
}
Global g_deleg(Role from, Role to, std::string channel, Role role, Local carried, Global cont) {
  GNode n;
  n.kind = GKind::Deleg;
  n.from = from;
  n.to = to;
  n.channel = std::move(channel);
  n.drole = role;
  n.carried = std::move(carried);
  n.cont = std::move(cont);
  return mk(std::move(n));
}

namespace {
Local l_com(LKind k, Role peer, Label l, Sort s, Local cont) {
  LNode n;
  n.kind = k;
  n.peer = peer;
  n.label = std::move(l);
  n.sort = s;
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Local l_bran(LKind k, Role peer, Branches<Local> bs) {
  LNode n;
  n.kind = k;
  n.peer = peer;
  n.branches = std::move(bs);
  return mk(std::move(n));
}
Local l_del(LKind k, Role peer, std::string channel, Role role, Local carried, Local cont) {
  LNode n;
  n.kind = k;
  n.peer = peer;
  n.channel = std::move(channel);
  n.drole = role;
  n.carried = std::move(carried);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
}  // namespace

Local l_sendr(Role peer, Sort s, Local cont) { return l_com(LKind::SendR, peer, {}, s, std::move(cont)); }
Local l_getr(Role peer, Sort s, Local cont) { return l_com(LKind::GetR, peer, {}, s, std::move(cont)); }
Local l_sendu(Role peer, Label l, Sort s, Local cont) {
  return l_com(LKind::SendU, peer, std::move(l), s, std::move(cont));
}
Local l_getu(Role peer, Label l, Sort s, Local cont) {
  return l_com(LKind::GetU, peer, std::move(l), s, std::move(cont));
}
Local l_selr(Role peer, Branches<Local> bs) { return l_bran(LKind::SelR, peer, std::move(bs)); }
Local l_branr(Role peer, Branches<Local> bs) { return l_bran(LKind::BranR, peer, std::move(bs)); }
Local l_selw(std::vector<Role> receivers, Branches<Local> bs) {
  LNode n;
  n.kind = LKind::SelW;
  n.receivers = std::move(receivers);
  n.branches = std::move(bs);
  return mk(std::move(n));
}
Local l_branw(Role peer, Branches<Local> bs, Label dflt) {
  LNode n;
  n.kind = LKind::BranW;
  n.peer = peer;
  n.branches = std::move(bs);
  n.dflt = std::move(dflt);
  return mk(std::move(n));
}
Local l_delegout(Role peer, std::string channel, Role role, Local carried, Local cont) {
  return l_del(LKind::DelegOut, peer, std::move(channel), role, std::move(carried), std::move(cont));
}
Local l_delegin(Role peer, std::string channel, Role role, Local carried, Local cont) {
  return l_del(LKind::DelegIn, peer, std::move(channel), role, std::move(carried), std::move(cont));
}
Local l_rec(std::string var, Local body) {
  LNode n;
  n.kind = LKind::Rec;
  n.var = std::move(var);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Local l_var(std::string var) {
  LNode n;
  n.kind = LKind::Var;
  n.var = std::move(var);
  return mk(std::move(n));
}
Local l_end() {
  static const Local e = mk(LNode{});
  return e;
}

template <class T, class Eq>
static bool branches_equal(const Branches<T>& a, const Branches<T>& b, Eq eq) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!(a[i].first == b[i].first) || !eq(a[i].second, b[i].second)) return false;
  return true;
}

bool equal(const Global& a, const Global& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case GKind::ComR:
      return a->from == b->from && a->to == b->to && a->sort == b->sort && equal(a->cont, b->cont);
    case GKind::ComU:
      return a->from == b->from && a->to == b->to && a->label == b->label && a->sort == b->sort &&
             equal(a->cont, b->cont);
    case GKind::BranR:
      return a->from == b->from && a->to == b->to &&
             branches_equal(a->branches, b->branches, [](auto& x, auto& y) { return equal(x, y); });
    case GKind::BranW:
      return a->from == b->from && a->receivers == b->receivers && a->dflt == b->dflt &&
             branches_equal(a->branches, b->branches, [](auto& x, auto& y) { return equal(x, y); });
    case GKind::Par: return equal(a->cont, b->cont) && equal(a->right, b->right);
    case GKind::Rec: return a->var == b->var && equal(a->cont, b->cont);
    case GKind::Var: return a->var == b->var;
    case GKind::End: return true;
    case GKind::Deleg:
      return a->from == b->from && a->to == b->to && a->channel == b->channel && a->drole == b->drole &&
             equal(a->carried, b->carried) && equal(a->cont, b->cont);
  }
  return false;
}

namespace {

using VarMap = std::vector<std::pair<std::string, std::string>>;

bool vars_match(const VarMap& env, const std::string& x, const std::string& y) {
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (it->first == x || it->second == y) return it->first == x && it->second == y;
  }
  return x == y;
}

bool local_eq(const Local& a, const Local& b, VarMap& env, bool alpha, bool unordered = false) {
  if (a == b && env.empty()) return true;
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  auto brs = [&](const Branches<Local>& x, const Branches<Local>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      size_t j = i;
      if (unordered) {
        j = 0;
        while (j < y.size() && !(y[j].first == x[i].first)) ++j;
        if (j == y.size()) return false;
      }
      if (!(x[i].first == y[j].first) || !local_eq(x[i].second, y[j].second, env, alpha, unordered)) return false;
    }
    return true;
  };
  switch (a->kind) {
    case LKind::SendR:
    case LKind::GetR:
      return a->peer == b->peer && a->sort == b->sort && local_eq(a->cont, b->cont, env, alpha, unordered);
    case LKind::SendU:
    case LKind::GetU:
      return a->peer == b->peer && a->label == b->label && a->sort == b->sort &&
             local_eq(a->cont, b->cont, env, alpha, unordered);
    case LKind::SelR:
    case LKind::BranR: return a->peer == b->peer && brs(a->branches, b->branches);
    case LKind::SelW: return a->receivers == b->receivers && brs(a->branches, b->branches);
    case LKind::BranW: return a->peer == b->peer && a->dflt == b->dflt && brs(a->branches, b->branches);
    case LKind::DelegOut:
    case LKind::DelegIn: {
      if (a->peer != b->peer || a->channel != b->channel || a->drole != b->drole) return false;
      VarMap fresh;
      if (!local_eq(a->carried, b->carried, fresh, alpha, unordered)) return false;
      return local_eq(a->cont, b->cont, env, alpha, unordered);
    }
    case LKind::Rec: {
      if (!alpha) return a->var == b->var && local_eq(a->cont, b->cont, env, alpha, unordered);
      env.emplace_back(a->var, b->var);
      bool r = local_eq(a->cont, b->cont, env, alpha, unordered);
      env.pop_back();
      return r;
    }
    case LKind::Var: return alpha ? vars_match(env, a->var, b->var) : a->var == b->var;
    case LKind::End: return true;
  }
  return false;
}

}  // namespace

bool equal(const Local& a, const Local& b) {
  VarMap env;
  return local_eq(a, b, env, false);
}

bool alpha_equal(const Local& a, const Local& b) {
  VarMap env;
  return local_eq(a, b, env, true);
}

bool equivalent(const Local& a, const Local& b) {
  VarMap env;
  return local_eq(a, b, env, true, true);
}

// ---------------------------------------------------------------- processes

Message Message::r(Value v) {
  Message m;
  m.kind = Kind::R;
  m.value = std::move(v);
  return m;
}
Message Message::u(Label l, Value v) {
  Message m;
  m.kind = Kind::U;
  m.label = std::move(l);
  m.value = std::move(v);
  return m;
}
Message Message::br(Label l) {
  Message m;
  m.kind = Kind::BR;
  m.label = std::move(l);
  return m;
}
Message Message::bw(Label l) {
  Message m;
  m.kind = Kind::BW;
  m.label = std::move(l);
  return m;
}
Message Message::deleg(std::string channel, Role role) {
  Message m;
  m.kind = Kind::Deleg;
  m.channel = std::move(channel);
  m.role = role;
  return m;
}

std::string to_string(const Message& m) {
  switch (m.kind) {
    case Message::Kind::R: return "r<" + to_string(m.value) + ">";
    case Message::Kind::U: return "u " + to_string(m.label) + "<" + to_string(m.value) + ">";
    case Message::Kind::BR: return "br " + to_string(m.label);
    case Message::Kind::BW: return "bw " + to_string(m.label);
    case Message::Kind::Deleg: return "dg " + m.channel + "@" + std::to_string(m.role);
  }
  return "?";
}

namespace {
Process mk(PNode n) { return std::make_shared<const PNode>(std::move(n)); }

PNode prefix(PKind k, std::string s, Role r1, Role r2) {
  PNode n;
  n.kind = k;
  n.chan = std::move(s);
  n.role = r1;
  n.peer = r2;
  return n;
}
}  // namespace

Process p_req(std::string shared, Role n_roles, std::string s, Process body) {
  PNode n;
  n.kind = PKind::Req;
  n.shared = std::move(shared);
  n.role = n_roles;
  n.chan = std::move(s);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Process p_acc(std::string shared, Role r, std::string s, Process body) {
  PNode n;
  n.kind = PKind::Acc;
  n.shared = std::move(shared);
  n.role = r;
  n.chan = std::move(s);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Process p_sendr(std::string s, Role r1, Role r2, Expr e, Process cont) {
  PNode n = prefix(PKind::SendR, std::move(s), r1, r2);
  n.expr = std::move(e);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_getr(std::string s, Role r1, Role r2, std::string x, Process cont) {
  PNode n = prefix(PKind::GetR, std::move(s), r1, r2);
  n.binder = std::move(x);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_sendu(std::string s, Role r1, Role r2, Label l, Expr e, Process cont) {
  PNode n = prefix(PKind::SendU, std::move(s), r1, r2);
  n.label = std::move(l);
  n.expr = std::move(e);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_getu(std::string s, Role r1, Role r2, Label l, Expr dv, std::string x, Process cont) {
  PNode n = prefix(PKind::GetU, std::move(s), r1, r2);
  n.label = std::move(l);
  n.expr = std::move(dv);
  n.binder = std::move(x);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_selr(std::string s, Role r1, Role r2, Label l, Process cont) {
  PNode n = prefix(PKind::SelR, std::move(s), r1, r2);
  n.label = std::move(l);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_branr(std::string s, Role r1, Role r2, Branches<Process> bs) {
  PNode n = prefix(PKind::BranR, std::move(s), r1, r2);
  n.branches = std::move(bs);
  return mk(std::move(n));
}
Process p_selw(std::string s, Role r, std::vector<Role> receivers, Label l, Process cont) {
  PNode n = prefix(PKind::SelW, std::move(s), r, 0);
  n.receivers = std::move(receivers);
  n.label = std::move(l);
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_branw(std::string s, Role r1, Role r2, Branches<Process> bs, Label dflt) {
  PNode n = prefix(PKind::BranW, std::move(s), r1, r2);
  n.branches = std::move(bs);
  n.dflt = std::move(dflt);
  return mk(std::move(n));
}
Process p_delegout(std::string s, Role r1, Role r2, std::string c, Role r, Process cont) {
  PNode n = prefix(PKind::DelegOut, std::move(s), r1, r2);
  n.dchan = std::move(c);
  n.drole = r;
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_delegin(std::string s, Role r1, Role r2, std::string c, Role r, Process cont) {
  PNode n = prefix(PKind::DelegIn, std::move(s), r1, r2);
  n.binder = std::move(c);
  n.drole = r;
  n.cont = std::move(cont);
  return mk(std::move(n));
}
Process p_par(Process a, Process b) {
  PNode n;
  n.kind = PKind::Par;
  n.cont = std::move(a);
  n.alt = std::move(b);
  return mk(std::move(n));
}
Process p_par(const std::vector<Process>& ps) {
  if (ps.empty()) return p_end();
  Process acc = ps.back();
  for (size_t i = ps.size() - 1; i-- > 0;) acc = p_par(ps[i], acc);
  return acc;
}
Process p_rec(std::string var, Process body) { return p_rec(std::move(var), {}, {}, std::move(body)); }
Process p_rec(std::string var, std::vector<std::string> params, std::vector<Expr> init, Process body) {
  PNode n;
  n.kind = PKind::Rec;
  n.var = std::move(var);
  n.params = std::move(params);
  n.args = std::move(init);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Process p_var(std::string var, std::vector<Expr> args) {
  PNode n;
  n.kind = PKind::Var;
  n.var = std::move(var);
  n.args = std::move(args);
  return mk(std::move(n));
}
Process p_end() {
  static const Process e = mk(PNode{});
  return e;
}
Process p_crash() {
  static const Process c = [] {
    PNode n;
    n.kind = PKind::Crash;
    return mk(std::move(n));
  }();
  return c;
}
Process p_if(Expr c, Process t, Process f) {
  PNode n;
  n.kind = PKind::If;
  n.expr = std::move(c);
  n.cont = std::move(t);
  n.alt = std::move(f);
  return mk(std::move(n));
}
Process p_new(std::string x, Process body) {
  PNode n;
  n.kind = PKind::Restrict;
  n.binder = std::move(x);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Process p_let(std::string x, Expr e, Process body) {
  PNode n;
  n.kind = PKind::Let;
  n.binder = std::move(x);
  n.expr = std::move(e);
  n.cont = std::move(body);
  return mk(std::move(n));
}
Process p_queue(std::string s, Role from, Role to, std::vector<Message> msgs) {
  PNode n;
  n.kind = PKind::Queue;
  n.chan = std::move(s);
  n.role = from;
  n.peer = to;
  n.queue = std::move(msgs);
  return mk(std::move(n));
}

bool equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
  switch (a->kind) {
    case ExprKind::Const:
      if (!(a->value == b->value)) return false;
      break;
    case ExprKind::Name:
    case ExprKind::Call:
      if (a->name != b->name) return false;
      break;
    case ExprKind::Binary:
      if (a->op != b->op) return false;
      break;
    default: break;
  }
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

bool equal(const Process& a, const Process& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  const PNode& x = *a;
  const PNode& y = *b;
  if (x.kind != y.kind) return false;
  if (x.shared != y.shared || x.chan != y.chan || x.role != y.role || x.peer != y.peer ||
      x.receivers != y.receivers || !(x.label == y.label) || x.binder != y.binder || !(x.dflt == y.dflt) ||
      x.var != y.var || x.params != y.params || x.dchan != y.dchan || x.drole != y.drole || x.queue != y.queue)
    return false;
  if (!equal(x.expr, y.expr)) return false;
  if (x.args.size() != y.args.size()) return false;
  for (size_t i = 0; i < x.args.size(); ++i)
    if (!equal(x.args[i], y.args[i])) return false;
  if (x.branches.size() != y.branches.size()) return false;
  for (size_t i = 0; i < x.branches.size(); ++i)
    if (!(x.branches[i].first == y.branches[i].first) || !equal(x.branches[i].second, y.branches[i].second))
      return false;
  return equal(x.cont, y.cont) && equal(x.alt, y.alt);
}

std::string to_string(const Actor& a) { return a.session + "[" + std::to_string(a.role) + "]"; }

SyntaxError::SyntaxError(const std::string& msg, int l, int c)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), column(c) {}

}  // namespace ftmpst
