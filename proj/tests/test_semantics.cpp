#include "support.hpp"

#include "ftmpst/print.hpp"
#include "ftmpst/semantics.hpp"

#include <doctest.h>

#include <map>

using namespace ftmpst;
using testing::data_process;

namespace {

std::vector<Redex> of_rule(const std::vector<Redex>& rs, Rule r) {
  std::vector<Redex> out;
  for (auto& x : rs)
    if (x.rule == r) out.push_back(x);
  return out;
}

std::map<std::tuple<std::string, Role, Role>, std::vector<Message>> queues(const SystemState& st) {
  std::map<std::tuple<std::string, Role, Role>, std::vector<Message>> out;
  for (auto& c : st.components)
    if (c->kind == PKind::Queue) out[{c->chan, c->role, c->peer}] = c->queue;
  return out;
}

}  // namespace

TEST_CASE("initialisation creates a fresh session with all queues") {
  SystemState st = make_state(data_process("dice.proc"));
  auto o = reliable_oracle();
  auto rs = enabled_redexes(st, *o);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].rule == Rule::Init);
  SystemState next = apply_redex(st, rs[0]);
  REQUIRE(next.restricted.size() == 1);
  CHECK(queues(next).size() == 6);
  CHECK(next.components.size() == 9);
  for (auto& [key, q] : queues(next)) {
    CHECK(std::get<0>(key) == next.restricted.front());
    CHECK(q.empty());
  }
}

TEST_CASE("reception rules") {
  auto chaos = chaotic_oracle(0);
  SystemState st = make_state(parse_process("s:3->1[u roll@1<4>, u roll@2<6>] | s[1,3]?u roll(9 -> x) . t[1,2]!<x> . 0"));
  auto rs = enabled_redexes(st, *chaos);

  auto get = of_rule(rs, Rule::UGet);
  REQUIRE(get.size() == 1);
  CHECK(get[0].value == Value::nat(4));
  CHECK(apply_redex(st, get[0]).text() == "s:3->1[u roll@2<6>] | t[1,2]!<4> . 0");

  auto skip = of_rule(rs, Rule::USkip);
  REQUIRE(skip.size() == 1);
  CHECK(apply_redex(st, skip[0]).text() == "s:3->1[u roll@1<4>, u roll@2<6>] | t[1,2]!<9> . 0");

  auto drop = of_rule(rs, Rule::ML);
  REQUIRE(drop.size() == 1);
  CHECK(queues(apply_redex(st, drop[0])).begin()->second == std::vector<Message>{Message::u(Label("roll", 2), Value::nat(6))});
}

TEST_CASE("conditionals and recursion") {
  auto o = reliable_oracle();
  SystemState st = make_state(parse_process("if 1 <= 2 then s[1,2]!<1> . 0 else s[1,2]!<2> . 0"));
  auto rs = enabled_redexes(st, *o);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].rule == Rule::IfT);
  CHECK(apply_redex(st, rs[0]).text() == "s[1,2]!<1> . 0");

  st = make_state(parse_process("mu X(n = 0) . s[1,2]!<n> . X<n + 1>"));
  rs = enabled_redexes(st, *o);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].rule == Rule::Rec);
  CHECK(apply_redex(st, rs[0]).text() == "s[1,2]!<0> . mu X(n = 0 + 1) . s[1,2]!<n> . X<n + 1>");
}

TEST_CASE("weak selection fills every receiver queue at once") {
  auto o = reliable_oracle();
  SystemState st = make_state(parse_process("s:3->1[] | s:3->2[] | s[3,{1,2}]!w play . 0"));
  auto rs = enabled_redexes(st, *o);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].rule == Rule::WSel);
  auto q = queues(apply_redex(st, rs[0]));
  CHECK(q.at({"s", 3, 1}).size() == 1);
  CHECK(q.at({"s", 3, 2}).size() == 1);
  CHECK(labels_compatible(q.at({"s", 3, 1}).front().label, Label("play")));
}

TEST_CASE("a redex only applies to the state it came from") {
  auto o = reliable_oracle();
  SystemState a = make_state(parse_process("if true then 0 else 0"));
  SystemState b = make_state(parse_process("if false then 0 else 0"));
  auto rs = enabled_redexes(a, *o);
  REQUIRE_FALSE(rs.empty());
  CHECK_THROWS_AS(apply_redex(b, rs[0]), StaleRedex);
}

namespace {

// Random walk checking the per-step invariants of the reduction relation.
void walk(const Process& p, std::uint64_t seed, std::size_t steps) {
  Cond1Params params;
  params.seed = seed;
  params.skip_rate = 0.3;
  params.crash_rate = 0.05;
  auto oracle = condition1_oracle(params);
  std::mt19937_64 rng(seed);
  SystemState st = make_state(p);
  std::vector<Redex> taken;
  std::vector<std::uint64_t> digests;
  std::map<std::tuple<std::string, Role, Role>, std::int64_t> last_removed;
  for (std::size_t i = 0; i < steps; ++i) {
    auto rs = enabled_redexes(st, *oracle);
    if (rs.empty()) break;
    for (auto& r : rs) {
      if (r.rule != Rule::UGet) continue;
      const Process& receiver = st.components.at(r.components.at(0));
      CHECK(labels_compatible(receiver->label, *r.label));
    }
    Redex r = rs[rng() % rs.size()];
    SystemState next;
    REQUIRE_NOTHROW(next = apply_redex(st, r));
    oracle->observe(r, next);

    auto before = queues(st), after = queues(next);
    int changed = 0;
    for (auto& [key, q] : before) {
      auto it = after.find(key);
      if (it == after.end() || it->second == q) continue;
      ++changed;
      CHECK(std::get<0>(key) == r.session.value_or(""));
    }
    if (r.rule != Rule::WSel) CHECK(changed <= 1);

    // FIFO: heads leave every queue in the order they were sent.
    if (r.rule == Rule::UGet || r.rule == Rule::RGet || r.rule == Rule::ML || r.rule == Rule::USkip) {
      if (r.rule != Rule::USkip && r.label && r.label->meta) {
        Role from = r.rule == Rule::ML ? r.roles[0] : r.roles[1];
        Role to = r.rule == Rule::ML ? r.roles[1] : r.roles[0];
        auto& last = last_removed[{*r.session, from, to}];
        CHECK(*r.label->meta > last);
        last = *r.label->meta;
      }
    }
    taken.push_back(r);
    digests.push_back(next.digest());
    st = std::move(next);
  }

  SystemState again = make_state(p);
  for (std::size_t i = 0; i < taken.size(); ++i) {
    again = apply_redex(again, taken[i]);
    REQUIRE(again.digest() == digests[i]);
  }
}

}  // namespace

TEST_CASE("reduction invariants along random runs") {
  for (auto* f : {"dice.proc", "dice_u.proc", "dice_r.proc", "dice_once.proc", "deleg.proc"})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      INFO(f, " seed ", seed);
      walk(data_process(f), seed, 400);
    }
}

TEST_CASE("crashes only hit components without reliable obligations") {
  auto chaos = chaotic_oracle(0);
  SystemState st = make_state(parse_process("s[1,2]!u l<1> . 0 | s[2,1]!<1> . 0 | s:1->2[]"));
  auto crashes = of_rule(enabled_redexes(st, *chaos), Rule::Crash);
  REQUIRE(crashes.size() == 1);
  CHECK(crashes[0].actors == std::vector<Actor>{{"s", 1}});
}

TEST_CASE("structural congruence normal form") {
  Process p = parse_process("0 | (new x . s[1,2]!<1> . 0) | 0 | t[1,2]!<2> . 0");
  CHECK(to_string(congruent_normal_form(p)) == to_string(congruent_normal_form(p_par(p->alt, p->cont))));
  CHECK(to_string(congruent_normal_form(p_par(p_end(), p_end()))) == "0");
}
