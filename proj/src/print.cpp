#include "ftmpst/print.hpp"

namespace ftmpst {

namespace {

int precedence(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Le:
    case BinOp::Lt:
    case BinOp::Ge:
    case BinOp::Gt: return 3;
    case BinOp::Add:
    case BinOp::Sub: return 4;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 5;
  }
  return 0;
}

void print_expr(std::string& out, const Expr& e, int ctx) {
  switch (e->kind) {
    case ExprKind::Const: out += to_string(e->value); return;
    case ExprKind::Name: out += e->name; return;
    case ExprKind::Not:
      out += "!";
      print_expr(out, e->args[0], 6);
      return;
    case ExprKind::Tuple:
    case ExprKind::Call: {
      if (e->kind == ExprKind::Call) out += e->name + "(";
      else out += "[";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) out += ", ";
        print_expr(out, e->args[i], 0);
      }
      out += e->kind == ExprKind::Call ? ")" : "]";
      return;
    }
    case ExprKind::Binary: {
      int p = precedence(e->op);
      // '>' would close an angle-bracketed payload, so those comparisons are always wrapped.
      bool wrap = p < ctx || e->op == BinOp::Gt || e->op == BinOp::Ge;
      if (wrap) out += "(";
      print_expr(out, e->args[0], p);
      out += " " + to_string(e->op) + " ";
      print_expr(out, e->args[1], p + 1);
      if (wrap) out += ")";
      return;
    }
  }
}

std::string roles_text(const std::vector<Role>& rs) {
  std::string s = "{";
  for (size_t i = 0; i < rs.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(rs[i]);
  }
  return s + "}";
}

template <class T, class F>
std::string branches_text(const Branches<T>& bs, const Label* dflt, F&& show) {
  std::string s = "{";
  for (size_t i = 0; i < bs.size(); ++i) {
    if (i) s += ", ";
    if (dflt && labels_compatible(bs[i].first, *dflt)) s += "default ";
    s += to_string(bs[i].first) + ": " + show(bs[i].second);
  }
  return s + "}";
}

std::string gtext(const Global& g);

std::string gatom(const Global& g) {
  if (g->kind == GKind::Par) return "(" + gtext(g) + ")";
  return gtext(g);
}

std::string gtext(const Global& g) {
  switch (g->kind) {
    case GKind::ComR:
      return std::to_string(g->from) + " ->r " + std::to_string(g->to) + " : <" + to_string(g->sort) + "> . " +
             gatom(g->cont);
    case GKind::ComU:
      return std::to_string(g->from) + " ->u " + std::to_string(g->to) + " : " + to_string(g->label) + "<" +
             to_string(g->sort) + "> . " + gatom(g->cont);
    case GKind::BranR:
      return std::to_string(g->from) + " ->r " + std::to_string(g->to) + " : " +
             branches_text(g->branches, nullptr, gtext);
    case GKind::BranW:
      return std::to_string(g->from) + " ->w " + roles_text(g->receivers) + " : " +
             branches_text(g->branches, &g->dflt, gtext);
    case GKind::Par: return gatom(g->cont) + " | " + gatom(g->right);
    case GKind::Rec: return "rec " + g->var + " . " + gatom(g->cont);
    case GKind::Var: return g->var;
    case GKind::End: return "end";
    case GKind::Deleg:
      return std::to_string(g->from) + " ->r " + std::to_string(g->to) + " : <<" + g->channel + "@" +
             std::to_string(g->drole) + " : " + to_string(g->carried) + ">> . " + gatom(g->cont);
  }
  return "?";
}

std::string ltext(const Local& l) {
  auto peer = "[" + std::to_string(l->peer) + "]";
  switch (l->kind) {
    case LKind::SendR: return peer + "!r<" + to_string(l->sort) + "> . " + ltext(l->cont);
    case LKind::GetR: return peer + "?r<" + to_string(l->sort) + "> . " + ltext(l->cont);
    case LKind::SendU:
      return peer + "!u " + to_string(l->label) + "<" + to_string(l->sort) + "> . " + ltext(l->cont);
    case LKind::GetU:
      return peer + "?u " + to_string(l->label) + "<" + to_string(l->sort) + "> . " + ltext(l->cont);
    case LKind::SelR: return peer + "!r" + branches_text(l->branches, nullptr, ltext);
    case LKind::BranR: return peer + "?r" + branches_text(l->branches, nullptr, ltext);
    case LKind::SelW: return "[" + roles_text(l->receivers) + "]!w" + branches_text(l->branches, nullptr, ltext);
    case LKind::BranW: return peer + "?w" + branches_text(l->branches, &l->dflt, ltext);
    case LKind::DelegOut:
    case LKind::DelegIn:
      return peer + (l->kind == LKind::DelegOut ? "!<<" : "?<<") + l->channel + "@" + std::to_string(l->drole) +
             " : " + ltext(l->carried) + ">> . " + ltext(l->cont);
    case LKind::Rec: return "rec " + l->var + " . " + ltext(l->cont);
    case LKind::Var: return l->var;
    case LKind::End: return "end";
  }
  return "?";
}

std::string ptext(const Process& p, bool top);

std::string patom(const Process& p) { return ptext(p, false); }

std::string actor_head(const PNode& n) {
  return n.chan + "[" + std::to_string(n.role) + "," + std::to_string(n.peer) + "]";
}

std::string ptext(const Process& p, bool top) {
  const PNode& n = *p;
  switch (n.kind) {
    case PKind::Req:
      return "req " + n.shared + "[" + std::to_string(n.role) + "](" + n.chan + ") . " + patom(n.cont);
    case PKind::Acc:
      return "acc " + n.shared + "[" + std::to_string(n.role) + "](" + n.chan + ") . " + patom(n.cont);
    case PKind::SendR: return actor_head(n) + "!<" + to_string(n.expr) + "> . " + patom(n.cont);
    case PKind::GetR: return actor_head(n) + "?(" + n.binder + ") . " + patom(n.cont);
    case PKind::SendU:
      return actor_head(n) + "!u " + to_string(n.label) + "<" + to_string(n.expr) + "> . " + patom(n.cont);
    case PKind::GetU:
      return actor_head(n) + "?u " + to_string(n.label) + "(" + to_string(n.expr) + " -> " + n.binder + ") . " +
             patom(n.cont);
    case PKind::SelR: return actor_head(n) + "!r " + to_string(n.label) + " . " + patom(n.cont);
    case PKind::BranR: return actor_head(n) + "?r" + branches_text(n.branches, nullptr, [](auto& q) {
                                 return ptext(q, true);
                               });
    case PKind::SelW:
      return n.chan + "[" + std::to_string(n.role) + "," + roles_text(n.receivers) + "]!w " + to_string(n.label) +
             " . " + patom(n.cont);
    case PKind::BranW: return actor_head(n) + "?w" + branches_text(n.branches, &n.dflt, [](auto& q) {
                                 return ptext(q, true);
                               });
    case PKind::DelegOut:
      return actor_head(n) + "!<<" + n.dchan + "@" + std::to_string(n.drole) + ">> . " + patom(n.cont);
    case PKind::DelegIn:
      return actor_head(n) + "?<<" + n.binder + "@" + std::to_string(n.drole) + ">> . " + patom(n.cont);
    case PKind::Par: {
      std::string s = ptext(n.cont, false) + " | " + ptext(n.alt, n.alt->kind == PKind::Par);
      return top ? s : "(" + s + ")";
    }
    case PKind::Rec: {
      std::string s = "mu " + n.var;
      if (!n.params.empty()) {
        s += "(";
        for (size_t i = 0; i < n.params.size(); ++i) {
          if (i) s += ", ";
          s += n.params[i] + " = " + to_string(n.args[i]);
        }
        s += ")";
      }
      return s + " . " + patom(n.cont);
    }
    case PKind::Var: {
      std::string s = n.var;
      if (!n.args.empty()) {
        s += "<";
        for (size_t i = 0; i < n.args.size(); ++i) {
          if (i) s += ", ";
          s += to_string(n.args[i]);
        }
        s += ">";
      }
      return s;
    }
    case PKind::End: return "0";
    case PKind::Crash: return "crash";
    case PKind::If: return "if " + to_string(n.expr) + " then " + patom(n.cont) + " else " + patom(n.alt);
    case PKind::Restrict: return "new " + n.binder + " . " + patom(n.cont);
    case PKind::Let: return "let " + n.binder + " = " + to_string(n.expr) + " . " + patom(n.cont);
    case PKind::Queue: {
      std::string s = n.chan + ":" + std::to_string(n.role) + "->" + std::to_string(n.peer) + "[";
      for (size_t i = 0; i < n.queue.size(); ++i) {
        if (i) s += ", ";
        s += to_string(n.queue[i]);
      }
      return s + "]";
    }
  }
  return "?";
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string s;
  print_expr(s, e, 0);
  return s;
}

std::string to_string(const Global& g) { return gtext(g); }
std::string to_string(const Local& l) { return ltext(l); }
std::string to_string(const Process& p) { return ptext(p, true); }

}  // namespace ftmpst
