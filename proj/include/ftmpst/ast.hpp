#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ftmpst {

using Nat = boost::multiprecision::cpp_int;
using Role = int;

// Base identifier plus an opaque runtime annotation. Compatibility ignores meta.
struct Label {
  std::string base;
  std::optional<std::int64_t> meta;

  Label() = default;
  Label(std::string b) : base(std::move(b)) {}
  Label(const char* b) : base(b) {}
  Label(std::string b, std::int64_t m) : base(std::move(b)), meta(m) {}

  bool operator==(const Label&) const = default;
};

bool labels_compatible(const Label& a, const Label& b);
std::string to_string(const Label& l);

// Vec is the sort of knowledge vectors; it never travels in messages.
enum class Sort { Bool, Nat, Bel, Ack, Vec, Bot };

std::string to_string(Sort s);
std::optional<Sort> sort_from_name(const std::string& name);
// Whether a value or expression of sort `actual` may stand where `expected` is required.
bool sort_fits(Sort expected, Sort actual);

struct Value {
  enum class Kind { Bool, Nat, Bot, Tuple };
  Kind kind = Kind::Bot;
  bool b = false;
  Nat n;
  std::vector<Value> items;

  static Value boolean(bool v);
  static Value nat(Nat v);
  static Value bot();
  static Value tuple(std::vector<Value> v);

  bool operator==(const Value& o) const;
};

std::string to_string(const Value& v);
Sort sort_of(const Value& v);

// ---------------------------------------------------------------- expressions

enum class ExprKind { Const, Name, Not, Binary, Tuple, Call };
enum class BinOp { And, Or, Add, Sub, Mul, Div, Mod, Eq, Ne, Le, Lt, Ge, Gt };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind = ExprKind::Const;
  Value value;
  std::string name;  // Name, Call
  BinOp op = BinOp::And;
  std::vector<Expr> args;
};

Expr e_const(Value v);
Expr e_bool(bool b);
Expr e_nat(long long n);
Expr e_bot();
Expr e_name(std::string n);
Expr e_not(Expr a);
Expr e_bin(BinOp op, Expr a, Expr b);
Expr e_tuple(std::vector<Expr> items);  // literal items fold into a constant
Expr e_call(std::string fn, std::vector<Expr> args);

std::string to_string(BinOp op);

// ---------------------------------------------------------------- types

template <class T>
using Branches = std::vector<std::pair<Label, T>>;

struct LNode;
using Local = std::shared_ptr<const LNode>;
struct GNode;
using Global = std::shared_ptr<const GNode>;

enum class GKind { ComR, ComU, BranR, BranW, Par, Rec, Var, End, Deleg };

struct GNode {
  GKind kind = GKind::End;
  Role from = 0;
  Role to = 0;
  std::vector<Role> receivers;  // BranW
  Label label;                  // ComU
  Sort sort = Sort::Nat;        // ComR, ComU
  Branches<Global> branches;    // BranR, BranW
  Label dflt;                   // BranW
  Global cont;                  // continuation, Rec body, Par left
  Global right;                 // Par right
  std::string var;              // Rec, Var
  std::string channel;          // Deleg
  Role drole = 0;               // Deleg
  Local carried;                // Deleg
};

enum class LKind { SendR, GetR, SendU, GetU, SelR, BranR, SelW, BranW, DelegOut, DelegIn, Rec, Var, End };

struct LNode {
  LKind kind = LKind::End;
  Role peer = 0;
  std::vector<Role> receivers;  // SelW
  Label label;
  Sort sort = Sort::Nat;
  Branches<Local> branches;
  Label dflt;  // BranW
  Local cont;  // continuation, Rec body
  std::string var;
  std::string channel;
  Role drole = 0;
  Local carried;
};

Global g_comr(Role from, Role to, Sort s, Global cont);
Global g_comu(Role from, Role to, Label l, Sort s, Global cont);
Global g_branr(Role from, Role to, Branches<Global> bs);
Global g_branw(Role from, std::vector<Role> receivers, Branches<Global> bs, Label dflt);
Global g_par(Global a, Global b);
Global g_rec(std::string var, Global body);
Global g_var(std::string var);
Global g_end();
Global g_deleg(Role from, Role to, std::string channel, Role role, Local carried, Global cont);

Local l_sendr(Role peer, Sort s, Local cont);
Local l_getr(Role peer, Sort s, Local cont);
Local l_sendu(Role peer, Label l, Sort s, Local cont);
Local l_getu(Role peer, Label l, Sort s, Local cont);
Local l_selr(Role peer, Branches<Local> bs);
Local l_branr(Role peer, Branches<Local> bs);
Local l_selw(std::vector<Role> receivers, Branches<Local> bs);
Local l_branw(Role peer, Branches<Local> bs, Label dflt);
Local l_delegout(Role peer, std::string channel, Role role, Local carried, Local cont);
Local l_delegin(Role peer, std::string channel, Role role, Local carried, Local cont);
Local l_rec(std::string var, Local body);
Local l_var(std::string var);
Local l_end();

bool equal(const Global& a, const Global& b);
bool equal(const Local& a, const Local& b);
// Equality up to consistent renaming of recursion variables.
bool alpha_equal(const Local& a, const Local& b);
// Alpha equality that also treats branches as an unordered label map.
bool equivalent(const Local& a, const Local& b);

// ---------------------------------------------------------------- processes

struct Message {
  enum class Kind { R, U, BR, BW, Deleg };
  Kind kind = Kind::R;
  Value value;
  Label label;
  std::string channel;
  Role role = 0;

  static Message r(Value v);
  static Message u(Label l, Value v);
  static Message br(Label l);
  static Message bw(Label l);
  static Message deleg(std::string channel, Role role);

  bool operator==(const Message&) const = default;
};

std::string to_string(const Message& m);

struct PNode;
using Process = std::shared_ptr<const PNode>;

enum class PKind {
  Req, Acc, SendR, GetR, SendU, GetU, SelR, BranR, SelW, BranW, DelegOut, DelegIn,
  Par, Rec, Var, End, Crash, If, Restrict, Let, Queue
};

struct PNode {
  PKind kind = PKind::End;
  std::string shared;           // Req, Acc
  std::string chan;             // session of a prefix, binder of Req/Acc, session of a Queue
  Role role = 0;                // acting role; Req: session size; Queue: sender
  Role peer = 0;                // partner role; Queue: receiver
  std::vector<Role> receivers;  // SelW
  Label label;                  // SendU, GetU, SelR, SelW
  Expr expr;                    // payload, default value, condition, let value
  std::string binder;           // GetR, GetU, Let, Restrict, DelegIn channel binder
  Branches<Process> branches;   // BranR, BranW
  Label dflt;                   // BranW
  Process cont;                 // continuation, then-branch, Par left, Rec body
  Process alt;                  // else-branch, Par right
  std::string var;              // Rec, Var
  std::vector<std::string> params;  // Rec
  std::vector<Expr> args;           // Rec initial values, Var arguments
  std::string dchan;            // DelegOut delegated channel
  Role drole = 0;               // DelegOut, DelegIn delegated role
  std::vector<Message> queue;   // Queue
};

Process p_req(std::string shared, Role n, std::string s, Process body);
Process p_acc(std::string shared, Role r, std::string s, Process body);
Process p_sendr(std::string s, Role r1, Role r2, Expr e, Process cont);
Process p_getr(std::string s, Role r1, Role r2, std::string x, Process cont);
Process p_sendu(std::string s, Role r1, Role r2, Label l, Expr e, Process cont);
Process p_getu(std::string s, Role r1, Role r2, Label l, Expr dv, std::string x, Process cont);
Process p_selr(std::string s, Role r1, Role r2, Label l, Process cont);
Process p_branr(std::string s, Role r1, Role r2, Branches<Process> bs);
Process p_selw(std::string s, Role r, std::vector<Role> receivers, Label l, Process cont);
Process p_branw(std::string s, Role r1, Role r2, Branches<Process> bs, Label dflt);
Process p_delegout(std::string s, Role r1, Role r2, std::string c, Role r, Process cont);
Process p_delegin(std::string s, Role r1, Role r2, std::string c, Role r, Process cont);
Process p_par(Process a, Process b);
Process p_par(const std::vector<Process>& ps);
Process p_rec(std::string var, Process body);
Process p_rec(std::string var, std::vector<std::string> params, std::vector<Expr> init, Process body);
Process p_var(std::string var, std::vector<Expr> args = {});
Process p_end();
Process p_crash();
Process p_if(Expr c, Process t, Process f);
Process p_new(std::string x, Process body);
Process p_let(std::string x, Expr e, Process body);
Process p_queue(std::string s, Role from, Role to, std::vector<Message> msgs);

bool equal(const Expr& a, const Expr& b);
bool equal(const Process& a, const Process& b);

struct Actor {
  std::string session;
  Role role = 0;
  auto operator<=>(const Actor&) const = default;
};

std::string to_string(const Actor& a);

struct SyntaxError : std::runtime_error {
  int line;
  int column;
  SyntaxError(const std::string& msg, int l, int c);
};

}  // namespace ftmpst
