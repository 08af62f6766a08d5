#pragma once

#include "ftmpst/semantics.hpp"
#include "ftmpst/typesys.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ftmpst {

struct TraceEvent {
  std::uint64_t step = 0;
  Rule rule = Rule::Init;
  std::optional<std::string> session;
  std::vector<Role> subject;
  std::optional<Label> label;  // sent labels carry the id they were tagged with
  std::optional<Value> value;
  std::uint64_t digest = 0;    // of the post-state
};

struct Trace {
  std::uint64_t seed = 0;
  std::string oracle;
  std::string program;  // canonical text of the initial state
  std::vector<TraceEvent> events;
};

TraceEvent trace_event(std::uint64_t step, const Redex& r, const SystemState& pre, const SystemState& post);
std::string hex_digest(std::uint64_t d);

struct TraceFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Header line with seed, oracle, program and its hash, then one event per line.
std::string to_jsonl(const Trace& t);
Trace trace_from_jsonl(std::string_view text);

enum class Status { Pass, Fail, Unchecked };
std::string to_string(Status s);

struct Verdict {
  std::string property;
  Status status = Status::Pass;
  std::optional<std::uint64_t> step;  // index of the offending state, 0 being the initial one
  std::string message;
  std::vector<TraceEvent> witness;    // events leading to the offending state

  bool failed() const { return status == Status::Fail; }
};

Verdict check_linearity(const SystemState& state);
Verdict check_error_freedom(const SystemState& state);

struct PreconditionUnmet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sessions joined by delegation are reported as unchecked.
Verdict detect_stuck(const SystemState& state, const std::vector<Redex>& enabled);

// Mirrors every reduction on a per-session environment and typechecks each post-state against it.
class SubjectReductionMonitor {
 public:
  explicit SubjectReductionMonitor(GlobalEnv gamma, std::map<std::string, SessionEnv> initial = {});
  Verdict start(const SystemState& initial);
  Verdict step(const SystemState& pre, const Redex& r, const SystemState& post);
  const std::map<std::string, SessionEnv>& witness() const { return witness_; }

 private:
  Verdict typecheck_state(const SystemState& st) const;
  GlobalEnv gamma_;
  std::map<std::string, SessionEnv> witness_;
};

using Enumerator = std::function<std::vector<Redex>(const SystemState&, const FailureOracle&)>;

enum class Schedule { Random, RoundRobin };

struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t max_steps = 2000;
  Schedule schedule = Schedule::Random;
  bool prefer_crash = false;  // take an offered crash before any other redex
  bool check = true;          // run the per-state property checks
  Enumerator enumerate;       // enabled_redexes when empty
};

struct RunResult {
  Trace trace;
  SystemState final_state;
  bool terminal = false;   // no action prefixes left
  bool quiescent = false;  // nothing enabled in the final state
  std::vector<Verdict> verdicts;  // failures, plus one entry per unchecked property
  std::map<Rule, std::size_t> coverage;

  bool passed() const;
};

RunResult run(const Process& program, const GlobalEnv& gamma, FailureOracle& oracle, const RunOptions& opts);

struct ReplayResult {
  bool ok = false;
  std::size_t steps = 0;
  std::string message;
  SystemState final_state;
};

// Re-executes a trace, requiring every recorded digest to match.
ReplayResult replay(const Trace& trace, const Enumerator& enumerate = {});

Verdict check_subject_reduction(const Trace& trace, const GlobalEnv& gamma, const Enumerator& enumerate = {});

// Re-executes events matched by rule, session, roles, label and value (digests ignored), checking
// every property after each step. Returns the first failure, or a pass; an event that cannot be
// matched yields an unchecked verdict.
Verdict check_events(const Process& program, const GlobalEnv& gamma, const std::vector<TraceEvent>& events,
                     const Enumerator& enumerate = {});

// Drops events while the same property keeps failing.
std::vector<TraceEvent> minimize_witness(const Process& program, const GlobalEnv& gamma,
                                         const std::vector<TraceEvent>& events, const std::string& property,
                                         const Enumerator& enumerate = {});

using OracleFactory = std::function<std::unique_ptr<FailureOracle>(std::uint64_t seed)>;

struct FuzzOptions {
  std::vector<std::uint64_t> seeds;
  std::size_t max_steps = 2000;
  unsigned threads = 1;
  bool minimize = true;
  Enumerator enumerate;
};

struct FuzzSummary {
  std::size_t runs = 0;
  std::size_t steps = 0;
  std::size_t terminal_runs = 0;
  std::size_t unchecked_runs = 0;
  std::map<Rule, std::size_t> coverage;
  std::vector<std::pair<std::uint64_t, Verdict>> failures;  // first failure per failing seed

  bool passed() const { return failures.empty(); }
  void merge(const FuzzSummary& other);
};

FuzzSummary fuzz(const Process& program, const GlobalEnv& gamma, const OracleFactory& make_oracle,
                 const FuzzOptions& opts);

std::vector<Rule> missing_rules(const std::map<Rule, std::size_t>& coverage);

}  // namespace ftmpst
