#include "ftmpst/oracle.hpp"

#include "ftmpst/semantics.hpp"

#include <cmath>

namespace ftmpst {

void FailureOracle::observe(const Redex& r, const SystemState&) {
  ++state_.steps;
  const std::string s = r.session.value_or("");
  switch (r.rule) {
    case Rule::Init: {
      int n = static_cast<int>(r.roles.size());
      state_.session_size[s] = n;
      state_.alive[s] = n;
      break;
    }
    case Rule::Crash:
      for (auto& a : r.actors)
        if (state_.crashed.insert(a).second) {
          state_.crash_step[a] = state_.steps;
          --state_.alive[a.session];
        }
      break;
    case Rule::USkip: ++state_.pending[{Actor{s, r.roles[0]}, r.roles[1], r.label->base}]; break;
    case Rule::ML: --state_.pending[{Actor{s, r.roles[1]}, r.roles[0], r.label->base}]; break;
    case Rule::UGet: ++state_.received[{Actor{s, r.roles[0]}, r.label->base}]; break;
    case Rule::WSel:
      for (auto it = state_.received.begin(); it != state_.received.end();) {
        if (it->first.first == Actor{s, r.roles[0]}) it = state_.received.erase(it);
        else ++it;
      }
      break;
    default: break;
  }
}

double oracle_draw(std::uint64_t seed, const std::string& key) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return static_cast<double>(h >> 11) / 9007199254740992.0;
}

namespace {

std::string query_key(const char* kind, const std::string& s, Role a, Role b, const std::string& label,
                      std::uint64_t epoch) {
  return std::string(kind) + "|" + s + "|" + std::to_string(a) + "|" + std::to_string(b) + "|" + label + "|" +
         std::to_string(epoch);
}

class Reliable : public FailureOracle {
 public:
  std::string name() const override { return "reliable"; }
  bool fp_uget(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_uskip(const std::string&, Role, Role, const Label&) const override { return false; }
  bool fp_ml(const std::string&, Role, Role, const Label&) const override { return false; }
  bool fp_wskip(const std::string&, Role, Role, bool) const override { return false; }
  bool fp_crash(const Process&, const std::set<Actor>&) const override { return false; }
};

class Chaotic : public FailureOracle {
 public:
  explicit Chaotic(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "chaos(seed=" + std::to_string(seed_) + ")"; }
  bool fp_uget(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_uskip(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_ml(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_wskip(const std::string&, Role, Role, bool) const override { return true; }
  bool fp_crash(const Process&, const std::set<Actor>&) const override { return true; }

 private:
  std::uint64_t seed_;
};

// Shared decision table: one entry per (session, receiver, sender, label) answers both the
// receiver's skip and the drop of the matching head message.
class Condition1 : public FailureOracle {
 public:
  explicit Condition1(Cond1Params p) : p_(std::move(p)) {}

  std::string name() const override {
    return "cond1(seed=" + std::to_string(p_.seed) + ",budget=" + std::to_string(p_.crash_budget) + ")";
  }
  bool fp_uget(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_uskip(const std::string& s, Role r1, Role r2, const Label& l) const override { return entry(s, r1, r2, l); }
  bool fp_ml(const std::string& s, Role r1, Role r2, const Label& l) const override { return entry(s, r2, r1, l); }
  bool fp_wskip(const std::string& s, Role, Role r2, bool queue_empty) const override {
    return is_crashed(s, r2) && queue_empty;
  }
  bool fp_crash(const Process&, const std::set<Actor>& actors) const override {
    for (auto& a : actors) {
      int crashed = 0;
      for (auto& c : state_.crashed) crashed += c.session == a.session;
      if (crashed >= p_.crash_budget) return false;
      auto size = state_.session_size.find(a.session);
      if (size != state_.session_size.end() && crashed + 1 >= size->second) return false;
    }
    if (!p_.forced_crashes.empty()) {
      for (auto& a : actors) {
        auto it = p_.forced_crashes.find(a.role);
        if (it != p_.forced_crashes.end() && state_.steps >= it->second) return true;
      }
      return false;
    }
    std::string key = "crash|" + std::to_string(state_.steps);
    for (auto& a : actors) key += "|" + to_string(a);
    return oracle_draw(p_.seed, key) < p_.crash_rate;
  }

 private:
  bool settled_crash(const std::string& s, Role r) const {
    auto it = state_.crash_step.find({s, r});
    return it != state_.crash_step.end() && state_.steps >= it->second + p_.crash_delay;
  }

  bool entry(const std::string& s, Role receiver, Role sender, const Label& l) const {
    if (settled_crash(s, sender) || settled_crash(s, receiver)) return true;
    if (unbalanced(s, receiver, sender, l)) return true;
    std::uint64_t epoch = state_.steps / std::max<std::uint64_t>(1, p_.epoch);
    return oracle_draw(p_.seed, query_key("skip", s, receiver, sender, l.base, epoch)) < p_.skip_rate;
  }

  Cond1Params p_;
};

// Eventually-strong failure detector for the rotating coordinator: phase-2 suspicion is
// possible only before stabilization, phase-1/3 skips only after a quorum arrived.
class DiamondS : public FailureOracle {
 public:
  explicit DiamondS(DiamondSParams p) : p_(std::move(p)) {}

  std::string name() const override {
    return "diamond-s(seed=" + std::to_string(p_.seed) + ",budget=" + std::to_string(p_.crash_budget) +
           ",gst=" + std::to_string(p_.gst) + ")";
  }
  bool fp_uget(const std::string&, Role, Role, const Label&) const override { return true; }
  bool fp_uskip(const std::string& s, Role r1, Role r2, const Label& l) const override { return entry(s, r1, r2, l); }
  bool fp_ml(const std::string& s, Role r1, Role r2, const Label& l) const override { return entry(s, r2, r1, l); }
  bool fp_wskip(const std::string& s, Role, Role r2, bool queue_empty) const override {
    return is_crashed(s, r2) && queue_empty;
  }
  bool fp_crash(const Process&, const std::set<Actor>& actors) const override {
    for (auto& a : actors) {
      auto size = state_.session_size.find(a.session);
      if (size == state_.session_size.end()) return false;
      int n = size->second;
      int alive = state_.alive.at(a.session);
      if (n - alive >= p_.crash_budget) return false;
      if (alive - 1 < (n + 1) / 2) return false;
    }
    if (!p_.forced_crashes.empty()) {
      for (auto& a : actors) {
        auto it = p_.forced_crashes.find(a.role);
        if (it != p_.forced_crashes.end() && state_.steps >= it->second) return true;
      }
      return false;
    }
    std::string key = "crash|" + std::to_string(state_.steps);
    for (auto& a : actors) key += "|" + to_string(a);
    return oracle_draw(p_.seed, key) < p_.crash_rate;
  }

 private:
  bool entry(const std::string& s, Role receiver, Role sender, const Label& l) const {
    if (is_crashed(s, sender) || is_crashed(s, receiver)) return true;
    if (unbalanced(s, receiver, sender, l)) return true;
    std::uint64_t epoch = state_.steps / std::max<std::uint64_t>(1, p_.epoch);
    if (l.base == "p2") {
      if (state_.steps >= p_.gst) return false;
      return oracle_draw(p_.seed, query_key("suspect", s, receiver, sender, l.base, epoch)) < p_.suspect_rate;
    }
    if (l.base == "p1" || l.base == "p3") {
      auto size = state_.session_size.find(s);
      if (size == state_.session_size.end()) return false;
      int quorum = size->second / 2;  // ceil((n - 1) / 2)
      auto got = state_.received.find({Actor{s, receiver}, l.base});
      int count = got == state_.received.end() ? 0 : got->second;
      if (count < quorum) return false;
      return oracle_draw(p_.seed, query_key("skip", s, receiver, sender, l.base, epoch)) < p_.skip_rate;
    }
    return false;
  }

  DiamondSParams p_;
};

}  // namespace

std::unique_ptr<FailureOracle> reliable_oracle() { return std::make_unique<Reliable>(); }
std::unique_ptr<FailureOracle> chaotic_oracle(std::uint64_t seed) { return std::make_unique<Chaotic>(seed); }
std::unique_ptr<FailureOracle> condition1_oracle(const Cond1Params& params) {
  return std::make_unique<Condition1>(params);
}
std::unique_ptr<FailureOracle> diamond_s_oracle(const DiamondSParams& params) {
  return std::make_unique<DiamondS>(params);
}

}  // namespace ftmpst
