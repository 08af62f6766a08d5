#include "support.hpp"

#include "ftmpst/print.hpp"
#include "ftmpst/semantics.hpp"
#include "ftmpst/syntax.hpp"

#include <doctest.h>

using namespace ftmpst;
using testing::env_with;
using testing::data_process;

namespace {

SessionEnv single(const std::string& s, Role r, const std::string& local) {
  SessionEnv d;
  d.actors[{s, r}] = parse_local(local);
  return d;
}

std::string rejected_rule(const TypeResult& r) { return r.rejection ? r.rejection->rule : ""; }

}  // namespace

TEST_CASE("the dice implementations are well-typed") {
  CHECK(typecheck(env_with("dice_w.gt"), data_process("dice.proc"), {}).ok);
  CHECK(typecheck(env_with("dice_u.gt"), data_process("dice_u.proc"), {}).ok);
  CHECK(typecheck(env_with("dice.gt"), data_process("dice_r.proc"), {}).ok);
  CHECK(typecheck(env_with("dice_once.gt"), data_process("dice_once.proc"), {}).ok);
}

TEST_CASE("delegation across two shared channels is well-typed") {
  GlobalEnv g;
  g.add_shared("a", testing::data_global("deleg_a.gt"));
  g.add_shared("b", testing::data_global("deleg_b.gt"));
  CHECK(typecheck(g, data_process("deleg.proc"), {}).ok);
}

TEST_CASE("a mistyped payload is rejected by the sending rule") {
  auto r = typecheck(env_with("dice.gt"), data_process("dice_r_bad_payload.proc"), {});
  REQUIRE_FALSE(r.ok);
  CHECK(r.rejection->rule == "RSend");
  CHECK(r.rejection->expected == "nat");
  CHECK(r.rejection->found == "bool");
}

TEST_CASE("the dice process does not fit the other dice protocols") {
  CHECK_FALSE(typecheck(env_with("dice.gt"), data_process("dice.proc"), {}).ok);
  CHECK_FALSE(typecheck(env_with("dice_u.gt"), data_process("dice.proc"), {}).ok);
}

TEST_CASE("a crashed process may only own unreliable obligations") {
  GlobalEnv g;
  auto bad = typecheck(g, p_crash(), single("s", 1, "[2]!r<nat> . end"));
  CHECK(rejected_rule(bad) == "Crash");
  CHECK(typecheck(g, p_crash(), single("s", 1, "[2]!u l<nat> . end")).ok);
  CHECK(typecheck(g, p_crash(), {}).ok);
}

TEST_CASE("prefix rules") {
  GlobalEnv g;
  CHECK(typecheck(g, parse_process("s[1,2]!<3> . 0"), single("s", 1, "[2]!r<nat> . end")).ok);
  CHECK(rejected_rule(typecheck(g, parse_process("s[1,2]!<3> . 0"), single("s", 1, "[3]!r<nat> . end"))) == "RSend");
  CHECK(typecheck(g, parse_process("s[2,1]?(x) . s[2,1]!<x + 1> . 0"),
                  single("s", 2, "[1]?r<nat> . [1]!r<nat> . end"))
            .ok);
  CHECK(typecheck(g, parse_process("s[1,2]?r{a: 0, b: s[1,2]!<1> . 0}"),
                  single("s", 1, "[2]?r{a: end, b: [2]!r<nat> . end}"))
            .ok);
  CHECK_FALSE(typecheck(g, parse_process("s[1,2]?r{a: 0}"), single("s", 1, "[2]?r{a: end, b: end}")).ok);
}

TEST_CASE("unreliable labels must be bound once with their sort") {
  GlobalEnv g;
  g.add_label(Label("roll"), Sort::Nat);
  CHECK(typecheck(g, parse_process("s[3,1]!u roll<4> . 0"), single("s", 3, "[1]!u roll<nat> . end")).ok);
  GlobalEnv unbound;
  CHECK_FALSE(typecheck(unbound, parse_process("s[3,1]!u roll<4> . 0"), single("s", 3, "[1]!u roll<nat> . end")).ok);
  CHECK_FALSE(typecheck(g, parse_process("s[3,1]!u roll<true> . 0"), single("s", 3, "[1]!u roll<nat> . end")).ok);
}

TEST_CASE("both branches of a conditional check against the same environment") {
  GlobalEnv g;
  auto d = single("s", 1, "[2]!r<nat> . end");
  CHECK(typecheck(g, parse_process("if 1 <= 2 then s[1,2]!<1> . 0 else s[1,2]!<2> . 0"), d).ok);
  CHECK_FALSE(typecheck(g, parse_process("if 1 <= 2 then s[1,2]!<1> . 0 else 0"), d).ok);
  CHECK_FALSE(typecheck(g, parse_process("if 1 then s[1,2]!<1> . 0 else s[1,2]!<1> . 0"), d).ok);
}

TEST_CASE("global environments are linear") {
  GlobalEnv g;
  g.add_value("x", Sort::Nat);
  CHECK_THROWS_AS(g.add_value("x", Sort::Bool), LinearityViolation);
  g.add_shared("a", testing::data_global("dice_w.gt"));
  CHECK_THROWS_AS(g.add_shared("a", testing::data_global("dice_w.gt")), LinearityViolation);
  CHECK(g.label_sort(Label("roll", 5)) == Sort::Nat);
  CHECK_THROWS_AS(g.add_label(Label("roll"), Sort::Bool), LinearityViolation);
  CHECK_NOTHROW(g.add_label(Label("roll", 2), Sort::Nat));
}

TEST_CASE("session environments are linear and absorb end") {
  SessionEnv d = env_compose({}, Actor{"s", 1}, parse_local("[2]!r<nat> . end"));
  CHECK_THROWS_AS(env_compose(d, Actor{"s", 1}, parse_local("[2]!r<nat> . end")), LinearityViolation);
  CHECK(env_compose(d, Actor{"s", 2}, l_end()).actors.size() == 1);
  SessionEnv q = env_compose(d, QueueKey{"s", 1, 2}, {MsgType::r(Sort::Nat)});
  CHECK_THROWS_AS(env_compose(q, QueueKey{"s", 1, 2}, {}), LinearityViolation);
  CHECK_THROWS_AS(env_compose(q, q), LinearityViolation);
}

TEST_CASE("coherence of session environments") {
  GlobalEnv g;
  Global dice = testing::data_global("dice.gt");
  g.add_shared("a", dice);
  SessionEnv init = initial_env(dice, "s");
  CHECK(init.actors.size() == 3);
  CHECK(coherence_witness(g, init));
  auto steps = env_step_rules(init, "s");
  auto send = std::find_if(steps.begin(), steps.end(), [](const EnvStep& e) { return e.rule == "RSend"; });
  REQUIRE(send != steps.end());
  CHECK(send->subject == Actor{"s", 3});
  CHECK(send->env.queues.at({"s", 3, 1}) == std::vector<MsgType>{MsgType::r(Sort::Nat)});
  for (auto& e : steps) CHECK(coherence_witness(g, e.env));
  SessionEnv foreign = init;
  foreign.queues[{"s", 3, 1}] = {MsgType::r(Sort::Bool)};
  CHECK_FALSE(coherence_witness(g, foreign));
}

TEST_CASE("typing is preserved by structural congruence") {
  struct Case {
    const char* gt;
    const char* proc;
  };
  for (auto c : {Case{"dice_w.gt", "dice.proc"}, Case{"dice_u.gt", "dice_u.proc"}, Case{"dice.gt", "dice_r.proc"}}) {
    GlobalEnv g = env_with(c.gt);
    Process p = data_process(c.proc);
    REQUIRE(typecheck(g, p, {}).ok);
    CHECK(typecheck(g, congruent_normal_form(p), {}).ok);
    CHECK(typecheck(g, p_par(p, p_end()), {}).ok);
    CHECK(typecheck(g, p_par(p->alt, p->cont), {}).ok);
    CHECK(typecheck(g, p_new("unused", p), {}).ok);
    // after session initiation as well
    SystemState st = make_state(p);
    auto o = reliable_oracle();
    SystemState started = apply_redex(st, enabled_redexes(st, *o).front());
    Process q = started.process();
    std::string s = started.restricted.front();
    auto monitor_env = initial_env(g.shared.at("a"), s);
    for (int r = 1; r <= 3; ++r)
      for (int t = 1; t <= 3; ++t)
        if (r != t) monitor_env.queues[{s, r, t}] = {};
    TypecheckOptions opts;
    opts.session_hints[s] = monitor_env;
    CHECK(typecheck(g, q, {}, opts).ok);
    CHECK(typecheck(g, congruent_normal_form(q), {}, opts).ok);
  }
}

TEST_CASE("substituting a value of the declared sort preserves typing") {
  GlobalEnv g;
  g.add_value("c", Sort::Nat);
  auto d = single("s", 1, "[2]!r<nat> . [2]!r<bool> . end");
  Process q = parse_process("s[1,2]!<c + 1> . s[1,2]!<c <= 3> . 0");
  REQUIRE(typecheck(g, q, d).ok);
  for (int v : {0, 3, 100}) CHECK(typecheck(GlobalEnv{}, subst_value(q, "c", Value::nat(v)), d).ok);
  CHECK_FALSE(typecheck(GlobalEnv{}, subst_value(q, "c", Value::boolean(true)), d).ok);
}
