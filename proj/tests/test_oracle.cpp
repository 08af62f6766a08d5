#include "support.hpp"

#include "ftmpst/semantics.hpp"
#include "ftmpst/consensus.hpp"
#include "ftmpst/syntax.hpp"

#include <doctest.h>

using namespace ftmpst;
using testing::data_process;

namespace {

Redex init_redex(const std::string& s, int n) {
  Redex r;
  r.rule = Rule::Init;
  r.session = s;
  for (Role i = 1; i <= n; ++i) r.roles.push_back(i);
  return r;
}

Redex crash_redex(const std::string& s, Role role) {
  Redex r;
  r.rule = Rule::Crash;
  r.session = s;
  r.roles = {role};
  r.actors = {{s, role}};
  return r;
}

// A step that changes nothing the oracles track.
Redex tick() {
  Redex r;
  r.rule = Rule::Rec;
  return r;
}

struct Query {
  std::string s;
  Role r1, r2;
  Label l;
};

// Every unreliable query that makes sense for the roles and labels of a session.
std::vector<Query> queries(const std::string& s, int n, const std::vector<std::string>& labels) {
  std::vector<Query> out;
  for (Role a = 1; a <= n; ++a)
    for (Role b = 1; b <= n; ++b)
      if (a != b)
        for (auto& l : labels) out.push_back({s, a, b, Label(l)});
  return out;
}

bool queue_empty(const SystemState& st, const std::string& s, Role from, Role to) {
  for (auto& c : st.components)
    if (c->kind == PKind::Queue && c->chan == s && c->role == from && c->peer == to) return c->queue.empty();
  return true;
}

bool has_actor(const SystemState& st, const Actor& a) {
  for (auto& c : st.components)
    if (c->kind != PKind::Queue && actors_of(c).count(a)) return true;
  return false;
}

// Runs p and checks the six items of the failure-pattern condition on every visited state.
void check_condition(const Process& p, FailureOracle& oracle, std::uint64_t seed, std::size_t steps,
                     const std::vector<std::string>& labels) {
  std::mt19937_64 rng(seed);
  SystemState st = make_state(p);
  std::set<Actor> crashed;
  for (std::size_t i = 0; i < steps; ++i) {
    auto rs = enabled_redexes(st, oracle);
    for (auto& r : rs)
      if (r.rule == Rule::Crash) CHECK(unreliable_only(st.components.at(r.components.at(0))));
    for (auto& s : st.restricted) {
      int n = oracle.run_state().session_size.count(s) ? oracle.run_state().session_size.at(s) : 0;
      for (auto& q : queries(s, n, labels)) {
        CHECK(oracle.fp_uget(q.s, q.r1, q.r2, q.l));
        CHECK(oracle.fp_ml(q.s, q.r1, q.r2, q.l) == oracle.fp_uskip(q.s, q.r2, q.r1, q.l));
        bool empty = queue_empty(st, q.s, q.r2, q.r1);
        if (oracle.fp_wskip(q.s, q.r1, q.r2, empty)) {
          CHECK_FALSE(has_actor(st, {q.s, q.r2}));
          CHECK(empty);
        }
        if (crashed.count({q.s, q.r2})) {
          CHECK(oracle.fp_uskip(q.s, q.r1, q.r2, q.l));
          CHECK(oracle.fp_wskip(q.s, q.r1, q.r2, true));
        }
        if (crashed.count({q.s, q.r1})) CHECK(oracle.fp_ml(q.s, q.r2, q.r1, q.l));
      }
    }
    if (rs.empty()) break;
    Redex r = rs[rng() % rs.size()];
    SystemState next = apply_redex(st, r);
    oracle.observe(r, next);
    if (r.rule == Rule::Crash) crashed.insert(r.actors.begin(), r.actors.end());
    st = std::move(next);
  }
}

}  // namespace

TEST_CASE("the reliable oracle allows no failure") {
  auto o = reliable_oracle();
  o->observe(init_redex("s", 3), {});
  CHECK(o->fp_uget("s", 1, 3, Label("roll")));
  CHECK_FALSE(o->fp_uskip("s", 1, 3, Label("roll")));
  CHECK_FALSE(o->fp_ml("s", 3, 1, Label("roll")));
  CHECK_FALSE(o->fp_wskip("s", 1, 3, true));
  CHECK_FALSE(o->fp_crash(p_end(), {{"s", 1}}));
}

TEST_CASE("the chaotic oracle allows every failure") {
  auto o = chaotic_oracle(1);
  CHECK(o->fp_uskip("s", 1, 3, Label("roll")));
  CHECK(o->fp_ml("s", 3, 1, Label("roll")));
  CHECK(o->fp_wskip("s", 1, 3, false));
  CHECK(o->fp_crash(p_end(), {{"s", 1}}));
}

TEST_CASE("the cond1 oracle satisfies the failure-pattern condition") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Cond1Params p;
    p.seed = seed;
    p.crash_rate = 0.1;
    p.skip_rate = 0.2;
    auto o = condition1_oracle(p);
    INFO("seed ", seed);
    check_condition(data_process(seed % 2 ? "dice.proc" : "dice_u.proc"), *o, seed, 300, {"roll", "win"});
  }
}

TEST_CASE("the diamond-s oracle satisfies the failure-pattern condition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DiamondSParams p;
    p.seed = seed;
    p.crash_rate = 0.05;
    p.gst = 40;
    auto o = diamond_s_oracle(p);
    INFO("seed ", seed);
    check_condition(build_rc_system(3, {{1, 0}, {2, 1}, {3, 1}}), *o, seed, 200, {"p1", "p2", "p3"});
  }
}

TEST_CASE("weak skips wait for the crash of the sender") {
  Cond1Params p;
  auto o = condition1_oracle(p);
  o->observe(init_redex("s", 3), {});
  CHECK_FALSE(o->fp_wskip("s", 1, 3, true));
  o->observe(crash_redex("s", 3), {});
  CHECK_FALSE(o->fp_wskip("s", 1, 3, false));
  CHECK(o->fp_wskip("s", 1, 3, true));
  CHECK(o->fp_uskip("s", 1, 3, Label("roll")));
  CHECK(o->fp_ml("s", 1, 3, Label("roll")));
}

TEST_CASE("the cond1 oracle keeps a live participant in every session") {
  Cond1Params p;
  p.crash_budget = 5;
  p.crash_rate = 1.0;
  auto o = condition1_oracle(p);
  o->observe(init_redex("s", 2), {});
  CHECK(o->fp_crash(p_end(), {{"s", 1}}));
  o->observe(crash_redex("s", 1), {});
  CHECK_FALSE(o->fp_crash(p_end(), {{"s", 2}}));
}

TEST_CASE("forced crashes happen from their step on and only for the listed roles") {
  Cond1Params p;
  p.forced_crashes[3] = 4;
  auto o = condition1_oracle(p);
  o->observe(init_redex("s", 3), {});
  CHECK_FALSE(o->fp_crash(p_end(), {{"s", 3}}));
  for (int i = 0; i < 3; ++i) o->observe(tick(), {});
  CHECK(o->fp_crash(p_end(), {{"s", 3}}));
  CHECK_FALSE(o->fp_crash(p_end(), {{"s", 1}}));
}

TEST_CASE("diamond-s suspicion stops at stabilisation") {
  DiamondSParams p;
  p.suspect_rate = 1.0;
  p.gst = 5;
  auto o = diamond_s_oracle(p);
  o->observe(init_redex("s", 3), {});
  CHECK(o->fp_uskip("s", 2, 1, Label("p2")));  // false suspicion before stabilisation
  for (int i = 0; i < 5; ++i) o->observe(tick(), {});
  CHECK_FALSE(o->fp_uskip("s", 2, 1, Label("p2")));
  CHECK_FALSE(o->fp_ml("s", 1, 2, Label("p2")));
  o->observe(crash_redex("s", 1), {});
  CHECK(o->fp_uskip("s", 2, 1, Label("p2")));
}

TEST_CASE("diamond-s skips phase-1 and phase-3 messages only after a quorum arrived") {
  DiamondSParams p;
  p.skip_rate = 1.0;
  auto o = diamond_s_oracle(p);
  o->observe(init_redex("s", 5), {});
  CHECK_FALSE(o->fp_uskip("s", 1, 2, Label("p1")));
  for (Role from : {2, 3}) {
    Redex r;
    r.rule = Rule::UGet;
    r.session = "s";
    r.roles = {1, from};
    r.label = Label("p1");
    o->observe(r, {});
  }
  CHECK(o->fp_uskip("s", 1, 4, Label("p1")));
  CHECK_FALSE(o->fp_uskip("s", 1, 4, Label("p3")));
}

TEST_CASE("diamond-s keeps a majority alive") {
  DiamondSParams p;
  p.crash_budget = 5;
  p.crash_rate = 1.0;
  auto o = diamond_s_oracle(p);
  o->observe(init_redex("s", 5), {});
  CHECK(o->fp_crash(p_end(), {{"s", 1}}));
  o->observe(crash_redex("s", 1), {});
  CHECK(o->fp_crash(p_end(), {{"s", 2}}));
  o->observe(crash_redex("s", 2), {});
  CHECK(o->run_state().alive.at("s") == 3);
  CHECK_FALSE(o->fp_crash(p_end(), {{"s", 3}}));
}

TEST_CASE("oracles are deterministic in seed, history and query") {
  auto a = condition1_oracle({}), b = condition1_oracle({});
  for (auto* o : {a.get(), b.get()}) o->observe(init_redex("s", 3), {});
  for (int step = 0; step < 200; ++step) {
    for (auto& q : queries("s", 3, {"roll", "win"})) {
      CHECK(a->fp_uskip(q.s, q.r1, q.r2, q.l) == b->fp_uskip(q.s, q.r1, q.r2, q.l));
    }
    CHECK(a->fp_crash(p_end(), {{"s", 1}}) == b->fp_crash(p_end(), {{"s", 1}}));
    a->observe(tick(), {});
    b->observe(tick(), {});
  }
  CHECK(oracle_draw(3, "k") == oracle_draw(3, "k"));
  CHECK(oracle_draw(3, "k") != oracle_draw(4, "k"));
}
