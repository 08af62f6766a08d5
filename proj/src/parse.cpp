#include "ftmpst/parse.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <tuple>
#include <set>

namespace ftmpst {

namespace {

enum class Tok { Ident, Number, Sym, Eof };

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int line = 1;
  int col = 1;
};

const char* const kSymbols[] = {"<<", ">>", "->", "<=", ">=", "==", "!=", "&&", "||", ".", ":", ",", "{", "}", "[",
                                "]",  "(",  ")",  "<",  ">",  "!",  "?",  "|",  "+",  "-", "*", "/", "%", "@", "="};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#' || c == '\'';
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (ident_start(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      bool found = false;
      for (const char* s : kSymbols) {
        std::string_view sv(s);
        if (src.substr(i, sv.size()) == sv) {
          t.kind = Tok::Sym;
          t.text = std::string(sv);
          advance(sv.size());
          found = true;
          break;
        }
      }
      if (!found) throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back(std::move(t));
  }
  Token eof;
  eof.line = line;
  eof.col = col;
  out.push_back(eof);
  return out;
}

const std::set<std::string> kKeywords = {"end",  "rec", "mu",  "default", "req",   "acc",  "if",   "then", "else",
                                         "new",  "let", "crash", "true",  "false", "bot", "not"};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  void finish() {
    if (cur().kind != Tok::Eof) fail("unexpected '" + cur().text + "' after end of term");
  }

  // ------------------------------------------------------------ expressions

  Expr expr(bool no_gt = false) { return binary(1, no_gt); }

  // ------------------------------------------------------------ global types

  Global global() {
    Global g = gatom();
    while (is_sym("|")) {
      next();
      g = g_par(g, gatom());
    }
    return g;
  }

  // ------------------------------------------------------------ local types

  Local local() {
    if (is_sym("(")) {
      next();
      Local l = local();
      expect_sym(")");
      return l;
    }
    if (is_word("end")) {
      next();
      return l_end();
    }
    if (is_word("rec") || is_word("mu")) {
      next();
      std::string v = ident("recursion variable");
      expect_sym(".");
      return l_rec(v, local());
    }
    if (is_sym("[")) {
      next();
      std::vector<Role> receivers;
      bool set_form = false;
      if (is_sym("{")) {
        receivers = role_set();
        set_form = true;
      } else {
        receivers.push_back(role());
      }
      expect_sym("]");
      Role peer = receivers.front();
      if (is_sym("!")) {
        next();
        if (is_sym("<<")) {
          next();
          auto [c, r, carried] = deleg_type();
          expect_sym(".");
          return l_delegout(peer, c, r, carried, local());
        }
        std::string k = reliability();
        if (k == "w") {
          expect_sym("{");
          auto [bs, dflt] = branches<Local>([this] { return local(); }, false);
          expect_sym("}");
          return l_selw(receivers, bs);
        }
        if (set_form) fail("a set of receivers is only allowed for weak selection");
        if (k == "r") {
          if (is_sym("{")) {
            next();
            auto [bs, d] = branches<Local>([this] { return local(); }, false);
            expect_sym("}");
            return l_selr(peer, bs);
          }
          Sort s = angle_sort();
          expect_sym(".");
          return l_sendr(peer, s, local());
        }
        Label l = label();
        Sort s = angle_sort();
        expect_sym(".");
        return l_sendu(peer, l, s, local());
      }
      expect_sym("?");
      if (set_form) fail("a set of roles is only allowed for weak selection");
      if (is_sym("<<")) {
        next();
        auto [c, r, carried] = deleg_type();
        expect_sym(".");
        return l_delegin(peer, c, r, carried, local());
      }
      std::string k = reliability();
      if (k == "w") {
        expect_sym("{");
        auto [bs, dflt] = branches<Local>([this] { return local(); }, true);
        expect_sym("}");
        return l_branw(peer, bs, dflt);
      }
      if (k == "r") {
        if (is_sym("{")) {
          next();
          auto [bs, d] = branches<Local>([this] { return local(); }, false);
          expect_sym("}");
          return l_branr(peer, bs);
        }
        Sort s = angle_sort();
        expect_sym(".");
        return l_getr(peer, s, local());
      }
      Label l = label();
      Sort s = angle_sort();
      expect_sym(".");
      return l_getu(peer, l, s, local());
    }
    if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) return l_var(next().text);
    fail("expected a local type");
  }

  // ------------------------------------------------------------ processes

  Process process() {
    Process p = patom();
    std::vector<Process> parts{p};
    while (is_sym("|")) {
      next();
      parts.push_back(patom());
    }
    return parts.size() == 1 ? p : p_par(parts);
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(size_t k = 1) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = cur();
    std::string where = t.kind == Tok::Eof ? " at end of input" : "";
    throw SyntaxError(msg + where, t.line, t.col);
  }

  bool is_sym(const char* s) const { return cur().kind == Tok::Sym && cur().text == s; }
  bool is_word(const char* s) const { return cur().kind == Tok::Ident && cur().text == s; }

  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'" + found());
    next();
  }
  void expect_word(const char* s) {
    if (!is_word(s)) fail(std::string("expected '") + s + "'" + found());
    next();
  }
  std::string found() const {
    if (cur().kind == Tok::Eof) return "";
    return ", found '" + cur().text + "'";
  }

  std::string ident(const char* what) {
    if (cur().kind != Tok::Ident || kKeywords.count(cur().text)) fail(std::string("expected ") + what + found());
    return next().text;
  }

  Role role() {
    if (cur().kind != Tok::Number) fail("expected a role number" + found());
    Token t = next();
    if (t.text.size() > 9) throw SyntaxError("role number too large", t.line, t.col);
    int r = std::stoi(t.text);
    if (r < 1) throw SyntaxError("roles start at 1", t.line, t.col);
    return r;
  }

  std::vector<Role> role_set() {
    expect_sym("{");
    std::vector<Role> rs{role()};
    while (is_sym(",")) {
      next();
      rs.push_back(role());
    }
    expect_sym("}");
    return rs;
  }

  Label label() {
    if (cur().kind != Tok::Ident) fail("expected a label" + found());
    Label l(next().text);
    if (is_sym("@")) {
      next();
      if (cur().kind != Tok::Number) fail("expected label annotation" + found());
      l.meta = std::stoll(next().text);
    }
    return l;
  }

  std::string reliability() {
    if (cur().kind == Tok::Ident && (cur().text == "r" || cur().text == "u" || cur().text == "w")) return next().text;
    fail("expected one of r, u, w" + found());
  }

  Sort sort_name() {
    if (cur().kind != Tok::Ident) fail("expected a sort" + found());
    Token t = next();
    auto s = sort_from_name(t.text);
    if (!s) throw SyntaxError("unknown sort '" + t.text + "'", t.line, t.col);
    return *s;
  }

  Sort angle_sort() {
    expect_sym("<");
    Sort s = sort_name();
    expect_sym(">");
    return s;
  }

  std::tuple<std::string, Role, Local> deleg_type() {
    std::string c = ident("channel name");
    expect_sym("@");
    Role r = role();
    expect_sym(":");
    Local l = local();
    expect_sym(">>");
    return {c, r, l};
  }

  // `with_default`: the default is either marked by the keyword or is the last branch.
  template <class T, class F>
  std::pair<Branches<T>, Label> branches(F&& body, bool with_default) {
    Branches<T> bs;
    std::optional<Label> dflt;
    do {
      if (!bs.empty()) next();
      if (is_word("default") && peek().kind == Tok::Ident) {
        if (!with_default) fail("default branch not allowed here");
        if (dflt) fail("more than one default branch");
        next();
        dflt = label();
        bs.emplace_back(*dflt, T{});
      } else {
        bs.emplace_back(label(), T{});
      }
      expect_sym(":");
      bs.back().second = body();
    } while (is_sym(","));
    Label d = dflt ? *dflt : bs.back().first;
    return {std::move(bs), d};
  }

  Expr binary(int level, bool no_gt) {
    if (level > 5) return unary(no_gt);
    Expr lhs = binary(level + 1, no_gt);
    while (true) {
      auto op = binop_at(level, no_gt);
      if (!op) return lhs;
      next();
      Expr rhs = binary(level + 1, no_gt);
      lhs = e_bin(*op, lhs, rhs);
    }
  }

  std::optional<BinOp> binop_at(int level, bool no_gt) const {
    if (cur().kind != Tok::Sym) return std::nullopt;
    const std::string& t = cur().text;
    switch (level) {
      case 1:
        if (t == "||") return BinOp::Or;
        break;
      case 2:
        if (t == "&&") return BinOp::And;
        break;
      case 3:
        if (t == "==") return BinOp::Eq;
        if (t == "!=") return BinOp::Ne;
        if (t == "<=") return BinOp::Le;
        if (t == "<") return BinOp::Lt;
        if (!no_gt && t == ">=") return BinOp::Ge;
        if (!no_gt && t == ">") return BinOp::Gt;
        break;
      case 4:
        if (t == "+") return BinOp::Add;
        if (t == "-") return BinOp::Sub;
        break;
      case 5:
        if (t == "*") return BinOp::Mul;
        if (t == "/") return BinOp::Div;
        if (t == "%") return BinOp::Mod;
        break;
    }
    return std::nullopt;
  }

  Expr unary(bool no_gt) {
    if (is_sym("!") || is_word("not")) {
      next();
      return e_not(unary(no_gt));
    }
    return primary();
  }

  std::vector<Expr> expr_list(const char* close) {
    std::vector<Expr> xs;
    if (is_sym(close)) {
      next();
      return xs;
    }
    xs.push_back(expr());
    while (is_sym(",")) {
      next();
      xs.push_back(expr());
    }
    expect_sym(close);
    return xs;
  }

  Expr primary() {
    const Token& t = cur();
    if (t.kind == Tok::Number) return e_const(Value::nat(Nat(next().text)));
    if (is_sym("(")) {
      next();
      Expr e = expr();
      expect_sym(")");
      return e;
    }
    if (is_sym("[")) {
      next();
      auto items = expr_list("]");
      return e_tuple(std::move(items));
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "false") return e_bool(next().text == "true");
      if (t.text == "bot") {
        next();
        return e_bot();
      }
      if (kKeywords.count(t.text)) fail("unexpected keyword '" + t.text + "' in expression");
      std::string name = next().text;
      if (is_sym("(")) {
        next();
        return e_call(name, expr_list(")"));
      }
      return e_name(name);
    }
    fail("expected an expression" + found());
  }

  Global gatom() {
    if (is_sym("(")) {
      next();
      Global g = global();
      expect_sym(")");
      return g;
    }
    if (is_word("end")) {
      next();
      return g_end();
    }
    if (is_word("rec") || is_word("mu")) {
      next();
      std::string v = ident("recursion variable");
      expect_sym(".");
      return g_rec(v, gatom());
    }
    if (cur().kind == Tok::Number) {
      Role from = role();
      expect_sym("->");
      std::string k = reliability();
      if (k == "w") {
        std::vector<Role> rs = is_sym("{") ? role_set() : std::vector<Role>{role()};
        expect_sym(":");
        expect_sym("{");
        auto [bs, dflt] = branches<Global>([this] { return global(); }, true);
        expect_sym("}");
        return g_branw(from, rs, bs, dflt);
      }
      Role to = role();
      expect_sym(":");
      if (k == "u") {
        Label l = label();
        Sort s = angle_sort();
        expect_sym(".");
        return g_comu(from, to, l, s, gatom());
      }
      if (is_sym("{")) {
        next();
        auto [bs, d] = branches<Global>([this] { return global(); }, false);
        expect_sym("}");
        return g_branr(from, to, bs);
      }
      if (is_sym("<<")) {
        next();
        auto [c, r, carried] = deleg_type();
        expect_sym(".");
        return g_deleg(from, to, c, r, carried, gatom());
      }
      Sort s = angle_sort();
      expect_sym(".");
      return g_comr(from, to, s, gatom());
    }
    if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) return g_var(next().text);
    fail("expected a global type" + found());
  }

  Process patom() {
    if (is_sym("(")) {
      next();
      Process p = process();
      expect_sym(")");
      return p;
    }
    if (cur().kind == Tok::Number && cur().text == "0") {
      next();
      return p_end();
    }
    if (is_word("crash")) {
      next();
      return p_crash();
    }
    if (is_word("req") || is_word("acc")) {
      bool req = next().text == "req";
      std::string a = ident("shared channel");
      expect_sym("[");
      Role r = role();
      expect_sym("]");
      expect_sym("(");
      std::string s = ident("session binder");
      expect_sym(")");
      expect_sym(".");
      Process body = patom();
      return req ? p_req(a, r, s, body) : p_acc(a, r, s, body);
    }
    if (is_word("if")) {
      next();
      Expr c = expr();
      expect_word("then");
      Process t = patom();
      expect_word("else");
      return p_if(c, t, patom());
    }
    if (is_word("mu") || is_word("rec")) {
      next();
      std::string v = ident("process variable");
      std::vector<std::string> params;
      std::vector<Expr> init;
      if (is_sym("(")) {
        next();
        do {
          if (!params.empty()) next();
          params.push_back(ident("parameter"));
          expect_sym("=");
          init.push_back(expr());
        } while (is_sym(","));
        expect_sym(")");
      }
      expect_sym(".");
      return p_rec(v, params, init, patom());
    }
    if (is_word("new")) {
      next();
      std::string x = ident("name");
      expect_sym(".");
      return p_new(x, patom());
    }
    if (is_word("let")) {
      next();
      std::string x = ident("name");
      expect_sym("=");
      Expr e = expr();
      expect_sym(".");
      return p_let(x, e, patom());
    }
    if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) {
      std::string name = next().text;
      if (is_sym("[")) return prefix(name);
      if (is_sym(":")) return queue(name);
      std::vector<Expr> args;
      if (is_sym("<")) {
        next();
        args.push_back(expr(true));
        while (is_sym(",")) {
          next();
          args.push_back(expr(true));
        }
        expect_sym(">");
      }
      return p_var(name, args);
    }
    fail("expected a process" + found());
  }

  Process prefix(const std::string& s) {
    expect_sym("[");
    Role r1 = role();
    expect_sym(",");
    std::vector<Role> receivers;
    bool set_form = false;
    if (is_sym("{")) {
      receivers = role_set();
      set_form = true;
    } else {
      receivers.push_back(role());
    }
    expect_sym("]");
    Role r2 = receivers.front();
    auto cont = [this] {
      expect_sym(".");
      return patom();
    };
    if (is_sym("!")) {
      next();
      if (is_sym("<<")) {
        next();
        std::string c = ident("channel");
        expect_sym("@");
        Role r = role();
        expect_sym(">>");
        return p_delegout(s, r1, r2, c, r, cont());
      }
      if (is_sym("<")) {
        next();
        Expr e = expr(true);
        expect_sym(">");
        return p_sendr(s, r1, r2, e, cont());
      }
      std::string k = reliability();
      if (k == "w") {
        Label l = label();
        return p_selw(s, r1, receivers, l, cont());
      }
      if (set_form) fail("a set of receivers is only allowed for weak selection");
      Label l = label();
      if (k == "r") return p_selr(s, r1, r2, l, cont());
      expect_sym("<");
      Expr e = expr(true);
      expect_sym(">");
      return p_sendu(s, r1, r2, l, e, cont());
    }
    expect_sym("?");
    if (set_form) fail("a set of roles is only allowed for weak selection");
    if (is_sym("<<")) {
      next();
      std::string c = ident("channel binder");
      expect_sym("@");
      Role r = role();
      expect_sym(">>");
      return p_delegin(s, r1, r2, c, r, cont());
    }
    if (is_sym("(")) {
      next();
      std::string x = ident("binder");
      expect_sym(")");
      return p_getr(s, r1, r2, x, cont());
    }
    std::string k = reliability();
    if (k == "u") {
      Label l = label();
      expect_sym("(");
      Expr dv = expr();
      expect_sym("->");
      std::string x = ident("binder");
      expect_sym(")");
      return p_getu(s, r1, r2, l, dv, x, cont());
    }
    expect_sym("{");
    auto [bs, dflt] = branches<Process>([this] { return process(); }, k == "w");
    expect_sym("}");
    if (k == "w") return p_branw(s, r1, r2, bs, dflt);
    return p_branr(s, r1, r2, bs);
  }

  Value closed_value() {
    const Token& t = cur();
    int line = t.line, col = t.col;
    Expr e = expr(true);
    if (e->kind != ExprKind::Const) throw SyntaxError("queued values must be literals", line, col);
    return e->value;
  }

  Process queue(const std::string& s) {
    expect_sym(":");
    Role from = role();
    expect_sym("->");
    Role to = role();
    expect_sym("[");
    std::vector<Message> msgs;
    while (!is_sym("]")) {
      if (!msgs.empty()) expect_sym(",");
      std::string k = cur().kind == Tok::Ident ? next().text : "";
      if (k == "r") {
        expect_sym("<");
        Value v = closed_value();
        expect_sym(">");
        msgs.push_back(Message::r(v));
      } else if (k == "u") {
        Label l = label();
        expect_sym("<");
        Value v = closed_value();
        expect_sym(">");
        msgs.push_back(Message::u(l, v));
      } else if (k == "br") {
        msgs.push_back(Message::br(label()));
      } else if (k == "bw") {
        msgs.push_back(Message::bw(label()));
      } else if (k == "dg") {
        std::string c = ident("channel");
        expect_sym("@");
        msgs.push_back(Message::deleg(c, role()));
      } else {
        fail("expected a message (r, u, br, bw, dg)");
      }
    }
    next();
    return p_queue(s, from, to, msgs);
  }
};

}  // namespace

Expr parse_expr(std::string_view text) {
  Parser p(text);
  Expr e = p.expr();
  p.finish();
  return e;
}

Global parse_global(std::string_view text) {
  Parser p(text);
  Global g = p.global();
  p.finish();
  return g;
}

Local parse_local(std::string_view text) {
  Parser p(text);
  Local l = p.local();
  p.finish();
  return l;
}

Process parse_process(std::string_view text) {
  Parser p(text);
  Process q = p.process();
  p.finish();
  return q;
}

}  // namespace ftmpst
