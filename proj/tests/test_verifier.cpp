#include "support.hpp"

#include "ftmpst/verifier.hpp"

#include <doctest.h>

using namespace ftmpst;
using testing::data_process;
using testing::env_with;

namespace {

SystemState state_of(const char* text) { return make_state(parse_process(text)); }

OracleFactory cond1() {
  return [](std::uint64_t s) {
    Cond1Params p;
    p.seed = s;
    return condition1_oracle(p);
  };
}

FuzzOptions seeds(std::size_t n, std::size_t max_steps = 2000) {
  FuzzOptions o;
  for (std::size_t i = 0; i < n; ++i) o.seeds.push_back(i);
  o.max_steps = max_steps;
  return o;
}

}  // namespace

TEST_CASE("error freedom on hand-built states") {
  CHECK(check_error_freedom(state_of("s:1->2[r<4>] | s[2,1]?(x) . 0")).status == Status::Pass);
  CHECK(check_error_freedom(state_of("s:1->2[r<4>] | s[1,3]!<1> . 0 | s[3,1]?(y) . 0")).failed());
  CHECK(check_error_freedom(state_of("s[2,1]?(x) . 0 | s:1->2[]")).failed());
  CHECK(check_error_freedom(state_of("s[2,1]?(x) . 0 | s[1,2]!<3> . 0 | s:1->2[]")).status == Status::Pass);
  // The broadcast reached player 2 whose actor is gone: only player 1 must be able to branch.
  CHECK(check_error_freedom(state_of("s:3->1[bw play@1] | s:3->2[bw play@1] | s[1,3]?w{play: 0, default end: 0}"))
            .status == Status::Pass);
  CHECK(check_error_freedom(state_of("s:1->2[br left] | s[3,1]!<1> . 0 | s[1,3]?(x) . 0")).failed());
  CHECK(check_error_freedom(state_of("s[2,1]?r{a: 0} | s[1,2]!r a . 0 | s:1->2[]")).status == Status::Pass);
}

TEST_CASE("linearity of states") {
  CHECK(check_linearity(state_of("s:1->2[] | s[1,2]!<1> . 0")).status == Status::Pass);
  CHECK(check_linearity(state_of("s:1->2[] | s:1->2[r<1>]")).failed());
  CHECK(check_linearity(state_of("s[1,2]!<1> . 0 | s[1,2]!<2> . 0")).failed());
}

TEST_CASE("progress on states") {
  auto o = reliable_oracle();
  SystemState done = state_of("0 | crash | s:1->2[]");
  CHECK(detect_stuck(done, enabled_redexes(done, *o)).status == Status::Pass);
  SystemState blocked = state_of("s[2,1]?(x) . 0 | s:1->2[]");
  CHECK(detect_stuck(blocked, enabled_redexes(blocked, *o)).failed());
  SystemState orphan = state_of("acc a[1](s) . s[1,2]!<1> . 0");
  CHECK_THROWS_AS(detect_stuck(orphan, enabled_redexes(orphan, *o)), PreconditionUnmet);
  SystemState partial = state_of("req a[3](s) . s[3,1]!<1> . 0 | acc a[1](s) . s[1,3]?(x) . 0");
  CHECK_THROWS_AS(detect_stuck(partial, enabled_redexes(partial, *o)), PreconditionUnmet);
}

TEST_CASE("the dice game passes every check under cond1") {
  FuzzSummary s = fuzz(data_process("dice.proc"), env_with("dice_w.gt"), cond1(), seeds(100));
  CHECK(s.passed());
  CHECK(s.runs == 100);
  CHECK(s.terminal_runs == 100);
  CHECK(s.coverage[Rule::WSel] > 0);
  CHECK(s.coverage[Rule::WBran] > 0);
}

TEST_CASE("the endless unreliable dice game survives chaos") {
  FuzzSummary s = fuzz(data_process("dice_u.proc"), env_with("dice_u.gt"),
                       [](std::uint64_t seed) { return chaotic_oracle(seed); }, seeds(50, 5000));
  CHECK(s.passed());
  CHECK(s.coverage[Rule::Crash] > 0);
  CHECK(s.coverage[Rule::ML] > 0);
}

TEST_CASE("the recursion-free dice game always terminates") {
  FuzzSummary s = fuzz(data_process("dice_once.proc"), env_with("dice_once.gt"), cond1(), seeds(100));
  CHECK(s.passed());
  CHECK(s.terminal_runs == 100);
}

TEST_CASE("delegation is checked but its progress is left unchecked") {
  GlobalEnv g;
  g.add_shared("a", testing::data_global("deleg_a.gt"));
  g.add_shared("b", testing::data_global("deleg_b.gt"));
  FuzzSummary s = fuzz(data_process("deleg.proc"), g, cond1(), seeds(20));
  CHECK(s.passed());
  CHECK(s.unchecked_runs == 20);
  CHECK(s.coverage[Rule::Deleg] > 0);
  CHECK(s.coverage[Rule::SRecv] > 0);
}

TEST_CASE("an engine that ignores labels is caught and its witness minimised") {
  FuzzOptions o = seeds(100);
  o.enumerate = testing::label_blind_enumerator;
  Process p = data_process("dice.proc");
  GlobalEnv g = env_with("dice_w.gt");
  FuzzSummary s = fuzz(p, g, cond1(), o);
  REQUIRE_FALSE(s.passed());
  for (auto& [seed, v] : s.failures) {
    INFO("seed ", seed, ": ", v.message);
    CHECK(v.property == "subject-reduction");
    Verdict again = check_events(p, g, v.witness, testing::label_blind_enumerator);
    CHECK(again.failed());
    CHECK(again.property == v.property);
  }
  auto& [seed, v] = s.failures.front();
  std::vector<TraceEvent> full;
  {
    Cond1Params params;
    params.seed = seed;
    auto oracle = condition1_oracle(params);
    RunOptions ro;
    ro.seed = seed;
    ro.enumerate = testing::label_blind_enumerator;
    full = run(p, g, *oracle, ro).verdicts.front().witness;
  }
  CHECK(v.witness.size() <= full.size());
}

TEST_CASE("runs are replayable byte for byte") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto run_once = [&] {
      Cond1Params params;
      params.seed = seed;
      auto o = condition1_oracle(params);
      RunOptions ro;
      ro.seed = seed;
      return run(data_process("dice.proc"), env_with("dice_w.gt"), *o, ro);
    };
    RunResult a = run_once(), b = run_once();
    CHECK(to_jsonl(a.trace) == to_jsonl(b.trace));
    ReplayResult r = replay(a.trace);
    CHECK(r.ok);
    CHECK(r.steps == a.trace.events.size());
    CHECK(r.final_state.digest() == a.final_state.digest());
    CHECK(check_subject_reduction(a.trace, env_with("dice_w.gt")).status == Status::Pass);
  }
}

TEST_CASE("trace files round-trip") {
  Cond1Params params;
  auto o = condition1_oracle(params);
  RunResult r = run(data_process("dice.proc"), env_with("dice_w.gt"), *o, {});
  std::string text = to_jsonl(r.trace);
  Trace back = trace_from_jsonl(text);
  CHECK(to_jsonl(back) == text);
  CHECK(back.events.size() == r.trace.events.size());
  CHECK_THROWS_AS(trace_from_jsonl("{\"format\":\"other\"}\n"), TraceFormatError);
  CHECK_THROWS_AS(trace_from_jsonl("not json"), TraceFormatError);
}

TEST_CASE("replay rejects a tampered trace") {
  auto o = reliable_oracle();
  RunResult r = run(data_process("dice_r.proc"), env_with("dice.gt"), *o, {});
  REQUIRE(r.trace.events.size() > 5);
  Trace bad = r.trace;
  bad.events[4].digest ^= 1;
  CHECK_FALSE(replay(bad).ok);
  bad = r.trace;
  bad.events[2].rule = Rule::ML;
  CHECK_FALSE(replay(bad).ok);
}

TEST_CASE("the subject-reduction monitor starts from the initial environments") {
  Process p = data_process("dice.proc");
  GlobalEnv g = env_with("dice_w.gt");
  SubjectReductionMonitor m(g);
  SystemState st = make_state(p);
  CHECK(m.start(st).status == Status::Pass);
  auto o = reliable_oracle();
  Redex init = enabled_redexes(st, *o).front();
  SystemState next = apply_redex(st, init);
  CHECK(m.step(st, init, next).status == Status::Pass);
  REQUIRE(m.witness().size() == 1);
  auto& [s, env] = *m.witness().begin();
  CHECK(env_equiv(env.restrict_to(s), initial_env(g.shared.at("a"), s)));
}

TEST_CASE("fuzz results do not depend on the number of threads") {
  FuzzOptions one = seeds(12), two = seeds(12);
  two.threads = 3;
  auto a = fuzz(data_process("dice_u.proc"), env_with("dice_u.gt"), cond1(), one);
  auto b = fuzz(data_process("dice_u.proc"), env_with("dice_u.gt"), cond1(), two);
  CHECK(a.steps == b.steps);
  CHECK(a.coverage == b.coverage);
  CHECK(a.terminal_runs == b.terminal_runs);
}

TEST_CASE("missing rules") {
  std::map<Rule, std::size_t> cov;
  CHECK(missing_rules(cov).size() == all_rules().size());
  for (Rule r : all_rules()) cov[r] = 1;
  CHECK(missing_rules(cov).empty());
  cov[Rule::Deleg] = 0;
  CHECK(missing_rules(cov) == std::vector<Rule>{Rule::Deleg});
}
