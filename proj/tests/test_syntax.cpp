#include "support.hpp"

#include "ftmpst/eval.hpp"
#include "ftmpst/print.hpp"
#include "ftmpst/syntax.hpp"

#include <doctest.h>

using namespace ftmpst;
using testing::Gen;

TEST_CASE("labels compare by base only") {
  CHECK(labels_compatible(Label("roll", 3), Label("roll", 9)));
  CHECK(labels_compatible(Label("roll"), Label("roll", 1)));
  CHECK_FALSE(labels_compatible(Label("roll"), Label("win")));
  CHECK(to_string(Label("p1", 4)) == "p1@4");
}

TEST_CASE("label compatibility is reflexive, symmetric and unambiguous") {
  Gen g(11);
  std::vector<Label> pool;
  for (int i = 0; i < 40; ++i) {
    Label l = g.label();
    if (g.coin()) l.meta = g.pick(5);
    pool.push_back(l);
  }
  for (auto& a : pool) {
    CHECK(labels_compatible(a, a));
    for (auto& b : pool) {
      CHECK(labels_compatible(a, b) == labels_compatible(b, a));
      for (auto& c : pool)
        if (labels_compatible(a, b) && labels_compatible(a, c)) CHECK(labels_compatible(b, c));
    }
  }
}

TEST_CASE("global types survive printing and parsing") {
  Gen g(1);
  for (int i = 0; i < 300; ++i) {
    Global t = g.global(5);
    Global back = parse_global(to_string(t));
    INFO(to_string(t));
    CHECK(equal(t, back));
  }
}

TEST_CASE("local types survive printing and parsing") {
  Gen g(2);
  for (int i = 0; i < 300; ++i) {
    Local t = g.local(5);
    INFO(to_string(t));
    CHECK(equal(t, parse_local(to_string(t))));
  }
}

TEST_CASE("processes and expressions survive printing and parsing") {
  Gen g(3);
  for (int i = 0; i < 300; ++i) {
    Process p = g.process(4);
    INFO(to_string(p));
    CHECK(equal(p, parse_process(to_string(p))));
    Expr e = g.expr(4);
    INFO(to_string(e));
    CHECK(equal(e, parse_expr(to_string(e))));
  }
}

TEST_CASE("the data files parse") {
  for (auto* f : {"dice.gt", "dice_w.gt", "dice_u.gt", "dice_once.gt", "dice_single_inform.gt",
                  "dice_subsequent_inform.gt", "deleg_a.gt", "deleg_b.gt"})
    CHECK_NOTHROW(testing::data_global(f));
  for (auto* f : {"dice.proc", "dice_u.proc", "dice_r.proc", "dice_once.proc", "deleg.proc", "dice_r_bad_payload.proc"})
    CHECK_NOTHROW(testing::data_process(f));
}

TEST_CASE("syntax errors carry a position") {
  try {
    parse_global("3 ->r 1 : <nat> .\n  3 ->r : <nat> . end");
    FAIL("accepted");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 2);
    CHECK(e.column > 1);
  }
  CHECK_THROWS_AS(parse_process("s[1,2]!<1> . "), SyntaxError);
  CHECK_THROWS_AS(parse_local("[2]?w{a: end,}"), SyntaxError);
  CHECK(parse_local("[2]?w{a: end, b: end}")->dflt == Label("b"));  // the last branch is the default
}

TEST_CASE("actors and free names") {
  CHECK(actors_of(parse_process("s[1,2]!<1> . 0")) == std::set<Actor>{{"s", 1}});
  CHECK(actors_of(p_end()).empty());
  CHECK(actors_of(parse_process("acc a[2](s) . s[2,1]?(x) . 0")).empty());
  auto fn = free_names(parse_process("new x . s[1,2]!<x> . 0"));
  CHECK(fn.count("x") == 0);
  CHECK(fn.count("s") == 1);
  CHECK(free_names(parse_process("s[1,2]?(y) . t[1,2]!<y> . 0")) == std::set<std::string>{"s", "t"});
}

TEST_CASE("substituting a name that is not free changes nothing") {
  Gen g(4);
  for (int i = 0; i < 200; ++i) {
    Process p = g.process(4);
    for (const char* target : {"q", "x", "y", "z", "s"}) {
      if (free_names(p).count(target)) continue;
      CHECK(equal(subst_names(p, {{target, e_nat(7)}}), p));
    }
  }
}

TEST_CASE("unreliable_only distributes over parallel composition") {
  Gen g(5);
  for (int i = 0; i < 200; ++i) {
    Process a = g.process(3), b = g.process(3);
    CHECK(unreliable_only(p_par(a, b)) == (unreliable_only(a) && unreliable_only(b)));
  }
}

TEST_CASE("expression evaluation") {
  auto ev = [](const char* s) { return eval_expr(parse_expr(s)); };
  CHECK(ev("1 + 2 * 3") == Value::nat(7));
  CHECK(ev("roll(0)") == Value::nat(4));
  CHECK(ev("best([bot, 1, 0])") == Value::nat(0));
  CHECK(ev("count_ack([true, false, true, bot])") == Value::nat(2));
  CHECK(ev("size([bot, 1, bot])") == Value::nat(1));
  CHECK(ev("get([4, 5], 2)") == Value::nat(5));
  CHECK(ev("update([4, 5], 1, 9)") == ev("[9, 5]"));
  CHECK(ev("update([4, 5], 1, bot)") == ev("[4, 5]"));
  CHECK(ev("vec(3, bot)") == ev("[bot, bot, bot]"));
  CHECK(ev("bot != bot") == Value::boolean(false));
  CHECK(ev("99999999999999999999 + 1") == Value::nat(Nat("100000000000000000000")));
  CHECK_THROWS_AS(ev("x + 1"), OpenExpression);
  CHECK_THROWS_AS(ev("best([bot, bot])"), AllBottom);
}

TEST_CASE("evaluation is deterministic") {
  Gen g(6);
  for (int i = 0; i < 300; ++i) {
    Expr e = subst(g.expr(3), {{"x", e_nat(1)}, {"y", e_bool(true)}, {"z", e_bot()}});
    std::optional<Value> first;
    try {
      first = eval_expr(e);
    } catch (const EvalError&) {
      CHECK_THROWS_AS(eval_expr(e), EvalError);
      continue;
    }
    CHECK(eval_expr(e) == *first);
  }
}
