#include "support.hpp"

#include "ftmpst/consensus.hpp"
#include "ftmpst/projection.hpp"
#include "ftmpst/wellformed.hpp"

#include <doctest.h>

using namespace ftmpst;

namespace {

std::map<Role, int> beliefs(std::initializer_list<int> bs) {
  std::map<Role, int> out;
  Role r = 1;
  for (int b : bs) out[r++] = b;
  return out;
}

GlobalEnv grc_env(int n) {
  GlobalEnv g;
  g.add_shared("a", build_grc(n));
  return g;
}

TraceEvent decision(Rule rule, Role subject, const char* label, std::int64_t id) {
  TraceEvent e;
  e.rule = rule;
  e.session = "s";
  e.subject = {subject};
  e.label = Label(label, id);
  return e;
}

}  // namespace

TEST_CASE("sizes below two are rejected") {
  CHECK_THROWS_AS(build_grc(1), InvalidSize);
  CHECK_THROWS_AS(build_rc_system(1, beliefs({0})), InvalidSize);
  CHECK_THROWS_AS(build_rc_system(3, beliefs({0, 1})), InvalidSize);
}

TEST_CASE("quorum") {
  CHECK(quorum(2) == 1);
  CHECK(quorum(3) == 1);
  CHECK(quorum(4) == 2);
  CHECK(quorum(5) == 2);
}

TEST_CASE("the protocol family is well-typed") {
  for (int n = 2; n <= 5; ++n) {
    INFO("n = ", n);
    std::map<Role, int> b;
    for (Role r = 1; r <= n; ++r) b[r] = r % 2;
    CHECK(typecheck(grc_env(n), build_rc_system(n, b), {}).ok);
  }
}

TEST_CASE("unanimous processes decide their belief without failures") {
  for (int b : {0, 1}) {
    auto o = reliable_oracle();
    RunOptions ro;
    ro.seed = 5;
    RunResult r = run(build_rc_system(3, beliefs({b, b, b})), grc_env(3), *o, ro);
    CHECK(r.passed());
    ConsensusVerdict v = verify_consensus(r.trace, 3, beliefs({b, b, b}));
    CHECK(v.ok());
    for (auto& [role, d] : v.decisions) CHECK(d == b);
  }
}

TEST_CASE("a coordinator crashing before its broadcast is overcome in a later round") {
  auto bs = beliefs({1, 0, 0});
  DiamondSParams p;
  p.forced_crashes[1] = 0;
  auto o = diamond_s_oracle(p);
  RunOptions ro;
  ro.prefer_crash = true;
  RunResult r = run(build_rc_system(3, bs), grc_env(3), *o, ro);
  CHECK(r.passed());
  bool crashed = false;
  for (auto& e : r.trace.events) {
    if (e.rule == Rule::Crash) {
      CHECK(e.subject == std::vector<Role>{1});
      crashed = true;
    }
    if (e.rule == Rule::WSel) {
      CHECK(e.subject.front() != 1);
    }
  }
  CHECK(crashed);
  ConsensusVerdict v = verify_consensus(r.trace, 3, bs);
  CHECK(v.ok());
  CHECK(v.correct == std::set<Role>{2, 3});
  CHECK_FALSE(v.decisions[1].has_value());
}

TEST_CASE("a run cut short reports no termination") {
  auto bs = beliefs({0, 1, 1});
  auto o = reliable_oracle();
  RunOptions ro;
  ro.max_steps = 5;
  RunResult r = run(build_rc_system(3, bs), grc_env(3), *o, ro);
  ConsensusVerdict v = verify_consensus(r.trace, 3, bs);
  CHECK_FALSE(v.termination);
  CHECK(v.agreement);
  CHECK(v.validity);
}

TEST_CASE("agreement and validity on hand-made traces") {
  auto bs = beliefs({0, 1, 1});
  Trace t;
  CHECK(verify_consensus(t, 3, bs).agreement);
  t.events = {decision(Rule::WSel, 1, "Zero", 7), decision(Rule::WBran, 2, "Zero", 7),
              decision(Rule::WBran, 3, "Zero", 7)};
  CHECK(verify_consensus(t, 3, bs).ok());
  t.events.push_back(decision(Rule::WSel, 2, "One", 9));
  auto v = verify_consensus(t, 3, bs);
  CHECK_FALSE(v.agreement);
  CHECK_FALSE(v.single_origin);
  Trace w;
  w.events = {decision(Rule::WSel, 1, "One", 3), decision(Rule::WBran, 2, "One", 3), decision(Rule::WBran, 3, "One", 3)};
  CHECK_FALSE(verify_consensus(w, 3, beliefs({0, 0, 0})).validity);
  w.events[2].label->meta = 4;
  CHECK_FALSE(verify_consensus(w, 3, beliefs({1, 1, 1})).single_origin);
}

TEST_CASE("consensus properties hold under the eventually-strong detector") {
  for (int n : {3, 4}) {
    std::map<Role, int> bs;
    for (Role r = 1; r <= n; ++r) bs[r] = (r * 7) % 3 == 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      DiamondSParams p;
      p.seed = seed;
      p.crash_budget = (n - 1) / 2;
      p.crash_rate = 0.05;
      auto o = diamond_s_oracle(p);
      RunOptions ro;
      ro.seed = seed;
      ro.check = seed < 5;
      ro.max_steps = 20000;
      RunResult r = run(build_rc_system(n, bs), grc_env(n), *o, ro);
      INFO("n = ", n, " seed ", seed);
      CHECK(r.passed());
      ConsensusVerdict v = verify_consensus(r.trace, n, bs);
      INFO(to_string(v));
      CHECK(v.ok());
    }
  }
}
