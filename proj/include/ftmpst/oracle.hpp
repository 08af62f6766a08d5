#pragma once

#include "ftmpst/ast.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace ftmpst {

struct Redex;
struct SystemState;

struct OracleRunState {
  std::set<Actor> crashed;
  std::map<Actor, std::uint64_t> crash_step;
  // Keyed by (receiver actor, sender role, label base): skipped receptions minus dropped messages.
  // Non-zero means a skip still awaits its drop or the other way round.
  std::map<std::tuple<Actor, Role, std::string>, int> pending;
  // Unreliable receptions per (receiver actor, label base) since the receiver last broadcast.
  std::map<std::pair<Actor, std::string>, int> received;
  std::uint64_t steps = 0;
  std::map<std::string, int> session_size;
  std::map<std::string, int> alive;
};

class FailureOracle {
 public:
  virtual ~FailureOracle() = default;
  virtual std::string name() const = 0;
  // Receiver s[r1] consumes label l from r2.
  virtual bool fp_uget(const std::string& s, Role r1, Role r2, const Label& l) const = 0;
  // Receiver s[r1] skips the reception of l from r2.
  virtual bool fp_uskip(const std::string& s, Role r1, Role r2, const Label& l) const = 0;
  // Drop of the head message l of queue s:r1->r2.
  virtual bool fp_ml(const std::string& s, Role r1, Role r2, const Label& l) const = 0;
  // Receiver s[r1] skips a weak branching from r2; `queue_empty` is the state of s:r2->r1.
  virtual bool fp_wskip(const std::string& s, Role r1, Role r2, bool queue_empty) const = 0;
  virtual bool fp_crash(const Process& component, const std::set<Actor>& actors) const = 0;
  virtual void observe(const Redex& r, const SystemState& post);

  const OracleRunState& run_state() const { return state_; }

 protected:
  OracleRunState state_;
  bool is_crashed(const std::string& s, Role r) const { return state_.crashed.count({s, r}) > 0; }
  bool unbalanced(const std::string& s, Role receiver, Role sender, const Label& l) const {
    auto it = state_.pending.find({Actor{s, receiver}, sender, l.base});
    return it != state_.pending.end() && it->second != 0;
  }
};

// Deterministic pseudo-random draw in [0, 1) keyed by the seed and the query.
double oracle_draw(std::uint64_t seed, const std::string& key);

struct Cond1Params {
  std::uint64_t seed = 0;
  int crash_budget = 1;             // per session, below the session size
  double crash_rate = 0.02;         // chance a crash is offered for an eligible component
  double skip_rate = 0.05;          // chance a reception of a live sender may be skipped
  std::uint64_t epoch = 25;         // steps during which a random decision stays fixed
  std::uint64_t crash_delay = 0;    // steps after a crash before skips become available
  // Scripted crashes: role -> first step at which a crash is offered; disables random crashes.
  std::map<Role, std::uint64_t> forced_crashes;
};

struct DiamondSParams {
  std::uint64_t seed = 0;
  int crash_budget = 1;             // per session
  std::uint64_t gst = 200;          // stabilization step
  double crash_rate = 0.01;
  double suspect_rate = 0.2;        // false suspicion of a live coordinator before stabilization
  double skip_rate = 0.3;           // skipping a phase-1/3 message once a majority arrived
  std::uint64_t epoch = 10;
  std::map<Role, std::uint64_t> forced_crashes;  // as for Cond1Params
};

std::unique_ptr<FailureOracle> reliable_oracle();
std::unique_ptr<FailureOracle> chaotic_oracle(std::uint64_t seed);
std::unique_ptr<FailureOracle> condition1_oracle(const Cond1Params& params);
std::unique_ptr<FailureOracle> diamond_s_oracle(const DiamondSParams& params);

}  // namespace ftmpst
