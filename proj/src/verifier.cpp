#include "ftmpst/verifier.hpp"

#include "ftmpst/eval.hpp"
#include "ftmpst/parse.hpp"
#include "ftmpst/print.hpp"
#include "ftmpst/syntax.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace ftmpst {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- traces

std::string hex_digest(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

TraceEvent trace_event(std::uint64_t step, const Redex& r, const SystemState& pre, const SystemState& post) {
  TraceEvent e;
  e.step = step;
  e.rule = r.rule;
  e.session = r.session;
  e.subject = r.roles;
  e.label = r.label;
  if (e.label && (r.rule == Rule::USend || r.rule == Rule::RSel || r.rule == Rule::WSel))
    e.label->meta = pre.next_message;
  e.value = r.value;
  e.digest = post.digest();
  return e;
}

namespace {

ojson value_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Bot: return "bot";
    case Value::Kind::Nat:
      if (v.n <= Nat(INT64_MAX)) return static_cast<std::int64_t>(v.n);
      return v.n.str();
    case Value::Kind::Tuple: {
      ojson a = ojson::array();
      for (auto& x : v.items) a.push_back(value_json(x));
      return a;
    }
  }
  return nullptr;
}

Value json_value(const ojson& j) {
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::nat(Nat(j.get<std::int64_t>()));
  if (j.is_array()) {
    std::vector<Value> items;
    for (auto& x : j) items.push_back(json_value(x));
    return Value::tuple(std::move(items));
  }
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "bot") return Value::bot();
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return Value::nat(Nat(s));
  }
  throw TraceFormatError("unreadable value " + j.dump());
}

Label parse_label(const std::string& s) {
  auto at = s.find('@');
  if (at == std::string::npos) return Label(s);
  try {
    return Label(s.substr(0, at), std::stoll(s.substr(at + 1)));
  } catch (const std::exception&) {
    throw TraceFormatError("unreadable label " + s);
  }
}

std::uint64_t parse_hex(const std::string& s) {
  try {
    size_t used = 0;
    auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw TraceFormatError("unreadable digest " + s);
    return v;
  } catch (const std::logic_error&) {
    throw TraceFormatError("unreadable digest " + s);
  }
}

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string to_jsonl(const Trace& t) {
  std::string out;
  ojson header;
  header["format"] = "ftmpst-trace/1";
  header["seed"] = t.seed;
  header["oracle"] = t.oracle;
  header["program_hash"] = hex_digest(fnv(t.program));
  header["program"] = t.program;
  out += header.dump() + "\n";
  for (auto& e : t.events) {
    ojson j;
    j["step"] = e.step;
    j["rule"] = to_string(e.rule);
    j["session"] = e.session ? ojson(*e.session) : ojson(nullptr);
    j["subject"] = e.subject;
    j["label"] = e.label ? ojson(to_string(*e.label)) : ojson(nullptr);
    j["value"] = e.value ? value_json(*e.value) : ojson(nullptr);
    j["digest"] = hex_digest(e.digest);
    out += j.dump() + "\n";
  }
  return out;
}

Trace trace_from_jsonl(std::string_view text) {
  Trace t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    try {
      if (header) {
        header = false;
        t.seed = j.at("seed").get<std::uint64_t>();
        t.oracle = j.at("oracle").get<std::string>();
        t.program = j.at("program").get<std::string>();
        if (j.contains("program_hash") && parse_hex(j["program_hash"].get<std::string>()) != fnv(t.program))
          throw TraceFormatError("program hash does not match the program text");
        continue;
      }
      TraceEvent e;
      e.step = j.at("step").get<std::uint64_t>();
      auto rule = rule_from_name(j.at("rule").get<std::string>());
      if (!rule) throw TraceFormatError("unknown rule " + j["rule"].dump());
      e.rule = *rule;
      if (!j.at("session").is_null()) e.session = j["session"].get<std::string>();
      e.subject = j.at("subject").get<std::vector<Role>>();
      if (!j.at("label").is_null()) e.label = parse_label(j["label"].get<std::string>());
      if (!j.at("value").is_null()) e.value = json_value(j["value"]);
      e.digest = parse_hex(j.at("digest").get<std::string>());
      t.events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (header) throw TraceFormatError("missing header line");
  return t;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Unchecked: return "unchecked";
  }
  return "?";
}

// ---------------------------------------------------------------- state properties

namespace {

Verdict verdict(std::string property, Status st, std::string msg) {
  Verdict v;
  v.property = std::move(property);
  v.status = st;
  v.message = std::move(msg);
  return v;
}

using Key3 = std::tuple<std::string, Role, Role>;

struct Facts {
  std::set<Key3> sendr, getr, delegout, delegin;
  std::map<Key3, std::vector<Label>> selr, branr, branw;  // branr/branw: labels offered by the receiver
  std::vector<std::tuple<std::string, Role, std::vector<Role>, Label>> selw;
  std::set<Actor> actors;
  std::set<Actor> pending;  // actors being handed over by delegation
  std::vector<Process> heads;
  std::vector<Process> queues;

  // Prefixes under a delegation receiver use its binder; they stand for any delegated actor.
  template <class C>
  bool has(const C& facts, const Key3& k) const {
    if (facts.count(k)) return true;
    return pending.count({std::get<0>(k), std::get<1>(k)}) && facts.count({kAwaited, std::get<1>(k), std::get<2>(k)});
  }
  template <class C>
  const std::vector<Label>* labels(const C& facts, const Key3& k) const {
    if (auto it = facts.find(k); it != facts.end()) return &it->second;
    if (!pending.count({std::get<0>(k), std::get<1>(k)})) return nullptr;
    auto it = facts.find({kAwaited, std::get<1>(k), std::get<2>(k)});
    return it == facts.end() ? nullptr : &it->second;
  }
  bool contains_actor(const std::string& s, Role r) const { return actors.count({s, r}) || pending.count({s, r}); }
  static inline const std::string kAwaited = "?";
};

void collect(const Process& p, std::map<std::string, bool> bound, bool unguarded, Facts& f) {
  auto free = [&](const std::string& c) { return !bound.count(c); };
  auto labels = [](const Branches<Process>& bs) {
    std::vector<Label> ls;
    for (auto& [l, b] : bs) ls.push_back(l);
    return ls;
  };
  switch (p->kind) {
    case PKind::Par:
      collect(p->cont, bound, unguarded, f);
      collect(p->alt, bound, unguarded, f);
      return;
    case PKind::If:
      collect(p->cont, bound, unguarded, f);
      collect(p->alt, bound, unguarded, f);
      return;
    case PKind::Rec:
    case PKind::Let: collect(p->cont, bound, unguarded, f); return;
    case PKind::Restrict:
      bound[p->binder] = false;
      collect(p->cont, bound, unguarded, f);
      return;
    case PKind::Queue:
      if (!free(p->chan)) return;
      f.queues.push_back(p);
      for (auto& m : p->queue)
        if (m.kind == Message::Kind::Deleg) f.pending.insert({m.channel, m.role});
      return;
    case PKind::Req:
    case PKind::Acc:
      bound[p->chan] = false;
      collect(p->cont, bound, false, f);
      return;
    case PKind::Var:
    case PKind::End:
    case PKind::Crash: return;
    default: break;
  }
  auto it = bound.find(p->chan);
  const bool is_free = it == bound.end();
  if (is_free || it->second) {
    const std::string chan = is_free ? p->chan : Facts::kAwaited;
    if (is_free) f.actors.insert({p->chan, p->role});
    if (is_free && unguarded) f.heads.push_back(p);
    if (is_free && p->kind == PKind::DelegOut && free(p->dchan)) f.pending.insert({p->dchan, p->drole});
    Key3 k{chan, p->role, p->peer};
    switch (p->kind) {
      case PKind::SendR: f.sendr.insert(k); break;
      case PKind::GetR: f.getr.insert(k); break;
      case PKind::SelR: f.selr[k].push_back(p->label); break;
      case PKind::BranR: {
        auto ls = labels(p->branches);
        f.branr[k].insert(f.branr[k].end(), ls.begin(), ls.end());
        break;
      }
      case PKind::SelW: f.selw.emplace_back(chan, p->role, p->receivers, p->label); break;
      case PKind::BranW: {
        auto ls = labels(p->branches);
        f.branw[k].insert(f.branw[k].end(), ls.begin(), ls.end());
        break;
      }
      case PKind::DelegOut: f.delegout.insert(k); break;
      case PKind::DelegIn: f.delegin.insert(k); break;
      default: break;
    }
  }
  if (p->kind == PKind::BranR || p->kind == PKind::BranW) {
    for (auto& [l, b] : p->branches) collect(b, bound, false, f);
    return;
  }
  if (p->kind == PKind::DelegIn) bound[p->binder] = true;
  if (p->cont) collect(p->cont, bound, false, f);
}

bool any_compatible(const std::vector<Label>& ls, const Label& l) {
  return std::any_of(ls.begin(), ls.end(), [&](const Label& x) { return labels_compatible(x, l); });
}

Facts facts_of(const SystemState& st) {
  Facts f;
  std::map<std::string, bool> bound;
  for (auto& c : st.components) collect(c, bound, true, f);
  return f;
}

}  // namespace

Verdict check_linearity(const SystemState& state) {
  std::map<Actor, int> heads;
  std::map<Key3, int> queues;
  for (auto& c : state.components) {
    if (c->kind == PKind::Queue) {
      if (++queues[{c->chan, c->role, c->peer}] > 1)
        return verdict("linearity", Status::Fail,
                       "two queues for " + c->chan + ":" + std::to_string(c->role) + "->" + std::to_string(c->peer));
      continue;
    }
    for (auto& a : unguarded_actors(c))
      if (++heads[a] > 1) return verdict("linearity", Status::Fail, "two unguarded actors " + to_string(a));
  }
  return verdict("linearity", Status::Pass, "");
}

Verdict check_error_freedom(const SystemState& state) {
  Facts f = facts_of(state);
  auto fail = [](const std::string& m) { return verdict("error-freedom", Status::Fail, m); };
  std::map<Key3, const Process*> queue_of;
  for (auto& q : f.queues) queue_of[{q->chan, q->role, q->peer}] = &q;
  auto queued = [&](const Key3& k, Message::Kind kind, const std::function<bool(const Message&)>& ok) {
    auto it = queue_of.find(k);
    if (it == queue_of.end()) return false;
    for (auto& m : (*it->second)->queue)
      if (m.kind == kind && ok(m)) return true;
    return false;
  };
  auto any = [](const Message&) { return true; };
  auto flip = [](const Key3& k) { return Key3{std::get<0>(k), std::get<2>(k), std::get<1>(k)}; };
  auto where = [](const Key3& k) {
    return std::get<0>(k) + "[" + std::to_string(std::get<1>(k)) + "," + std::to_string(std::get<2>(k)) + "]";
  };
  auto has_branw = [&](const std::string& s, Role receiver, Role sender, const Label& l) {
    auto* ls = f.labels(f.branw, {s, receiver, sender});
    return ls && any_compatible(*ls, l);
  };
  auto has_branr = [&](const Key3& k, const Label& l) {
    auto* ls = f.labels(f.branr, k);
    return ls && any_compatible(*ls, l);
  };

  // Reliable and delegating senders, and every message already queued, need a receiver.
  for (auto& h : f.heads) {
    Key3 k{h->chan, h->role, h->peer};
    switch (h->kind) {
      case PKind::SendR:
        if (!f.has(f.getr, flip(k))) return fail("reliable sender " + where(k) + " has no receiver");
        break;
      case PKind::GetR:
        if (!f.has(f.sendr, flip(k)) && !queued(flip(k), Message::Kind::R, any))
          return fail("reliable receiver " + where(k) + " has no sender or message");
        break;
      case PKind::SelR:
        if (!has_branr(flip(k), h->label)) return fail("selection " + where(k) + " has no matching branching");
        break;
      case PKind::BranR: {
        bool ok = false;
        for (auto& [l, b] : h->branches) {
          auto* sl = f.labels(f.selr, flip(k));
          if ((sl && any_compatible(*sl, l)) ||
              queued(flip(k), Message::Kind::BR, [&](const Message& m) { return labels_compatible(m.label, l); }))
            ok = true;
        }
        if (!ok) return fail("branching " + where(k) + " has no matching selection or message");
        break;
      }
      case PKind::SelW:
        for (Role r : h->receivers)
          if (!has_branw(h->chan, r, h->role, h->label) && f.contains_actor(h->chan, r))
            return fail("weak selection " + where(k) + " has no branching at live role " + std::to_string(r));
        break;
      case PKind::BranW: {
        bool ok = !f.contains_actor(h->chan, h->peer);
        for (auto& [l, b] : h->branches) {
          for (auto& [s, sender, receivers, sl] : f.selw)
            if ((s == h->chan || (s == Facts::kAwaited && f.pending.count({h->chan, h->peer}))) &&
                sender == h->peer &&
                std::find(receivers.begin(), receivers.end(), h->role) != receivers.end() &&
                labels_compatible(sl, l))
              ok = true;
          if (queued(flip(k), Message::Kind::BW, [&](const Message& m) { return labels_compatible(m.label, l); }))
            ok = true;
        }
        if (!ok) return fail("weak branching " + where(k) + " has no selection, message or crashed sender");
        break;
      }
      case PKind::DelegOut:
        if (!f.has(f.delegin, flip(k))) return fail("delegation " + where(k) + " has no receiver");
        break;
      case PKind::DelegIn:
        if (!f.has(f.delegout, flip(k)) && !queued(flip(k), Message::Kind::Deleg, any))
          return fail("delegation receiver " + where(k) + " has no sender or message");
        break;
      default: break;
    }
  }
  for (auto& q : f.queues) {
    Key3 to{q->chan, q->peer, q->role};  // receiver's view
    for (auto& m : q->queue) {
      switch (m.kind) {
        case Message::Kind::R:
          if (!f.has(f.getr, to)) return fail("reliable message on " + where(flip(to)) + " has no receiver");
          break;
        case Message::Kind::BR:
          if (!has_branr(to, m.label))
            return fail("selection message " + to_string(m.label) + " on " + where(flip(to)) + " has no branching");
          break;
        case Message::Kind::BW:
          if (!has_branw(q->chan, q->peer, q->role, m.label) && f.contains_actor(q->chan, q->peer))
            return fail("weak message " + to_string(m.label) + " on " + where(flip(to)) +
                        " has no branching at a live receiver");
          break;
        case Message::Kind::Deleg:
          if (!f.has(f.delegin, to)) return fail("delegated actor on " + where(flip(to)) + " has no receiver");
          break;
        case Message::Kind::U: break;
      }
    }
  }
  return verdict("error-freedom", Status::Pass, "");
}

namespace {

void walk_all(const Process& p, const std::function<void(const Process&)>& f) {
  f(p);
  if (p->cont) walk_all(p->cont, f);
  if (p->alt) walk_all(p->alt, f);
  for (auto& [l, b] : p->branches) walk_all(b, f);
}

}  // namespace

Verdict detect_stuck(const SystemState& state, const std::vector<Redex>& enabled) {
  std::map<std::string, std::set<Role>> requests, accepts;
  bool cross_session = false;
  for (auto& c : state.components) {
    walk_all(c, [&](const Process& p) {
      if (p->kind == PKind::Req) requests[p->shared].insert(p->role);
      if (p->kind == PKind::Acc) accepts[p->shared].insert(p->role);
      if (p->kind == PKind::DelegOut || p->kind == PKind::DelegIn) cross_session = true;
      if (p->kind == PKind::Queue)
        for (auto& m : p->queue) cross_session |= m.kind == Message::Kind::Deleg;
    });
    std::set<std::string> sessions;
    for (auto& a : actors_of(c)) sessions.insert(a.session);
    cross_session |= sessions.size() > 1;
  }
  for (auto& [a, roles] : accepts)
    if (!requests.count(a)) throw PreconditionUnmet("accept on " + a + " without a request");
  for (auto& [a, sizes] : requests)
    for (Role n : sizes)
      for (Role r = 1; r < n; ++r)
        if (!accepts[a].count(r))
          throw PreconditionUnmet("request on " + a + " lacks an accept for role " + std::to_string(r));

  if (!has_action_prefixes(state)) return verdict("progress", Status::Pass, "terminal");
  if (cross_session) return verdict("progress", Status::Unchecked, "sessions joined by delegation");
  if (enabled.empty()) return verdict("progress", Status::Fail, "action prefixes left but nothing enabled");
  return verdict("progress", Status::Pass, "");
}

// ---------------------------------------------------------------- subject reduction

SubjectReductionMonitor::SubjectReductionMonitor(GlobalEnv gamma, std::map<std::string, SessionEnv> initial)
    : gamma_(std::move(gamma)), witness_(std::move(initial)) {}

Verdict SubjectReductionMonitor::typecheck_state(const SystemState& st) const {
  TypecheckOptions opts;
  opts.session_hints = witness_;
  TypeResult r = typecheck(gamma_, st.process(), {}, opts);
  if (r.ok) return verdict("subject-reduction", Status::Pass, "");
  return verdict("subject-reduction", Status::Fail,
                 "state does not typecheck against the mirrored environment: " +
                     (r.rejection ? to_string(*r.rejection) : std::string("rejected")));
}

Verdict SubjectReductionMonitor::start(const SystemState& initial) { return typecheck_state(initial); }

Verdict SubjectReductionMonitor::step(const SystemState& pre, const Redex& r, const SystemState& post) {
  auto fail = [&](const std::string& m) { return verdict("subject-reduction", Status::Fail, m); };
  switch (r.rule) {
    case Rule::Crash:
    case Rule::IfT:
    case Rule::IfF:
    case Rule::Rec: return typecheck_state(post);
    case Rule::Init: {
      const Process& req = pre.components.at(r.components.front());
      auto g = gamma_.shared.find(req->shared);
      if (g == gamma_.shared.end()) return fail("no global type for shared channel " + req->shared);
      witness_[*r.session] = initial_env(g->second, *r.session);
      return typecheck_state(post);
    }
    default: break;
  }
  const std::string s = r.session.value_or("");
  auto w = witness_.find(s);
  if (w == witness_.end()) return fail("no environment for session " + s);
  const std::string rule = to_string(r.rule);
  const Actor subject{s, r.roles.at(0)};
  std::vector<EnvStep> matches;
  for (auto& st : env_step_rules(w->second, s)) {
    if (st.rule != rule || st.subject != subject) continue;
    if (r.rule == Rule::ML) {
      if (st.detail != std::to_string(r.roles.at(1))) continue;
    } else if (r.label && st.detail != r.label->base) {
      continue;
    }
    matches.push_back(std::move(st));
  }
  if (matches.empty()) return fail("no session-environment step mirrors " + to_string(r));

  const SessionEnv before = w->second;
  std::map<std::string, SessionEnv> saved = witness_;
  Verdict last = fail("no mirrored environment types the post-state");
  for (auto& m : matches) {
    witness_ = saved;
    witness_[s] = m.env;
    if (r.rule == Rule::Deleg) {
      const Process& p = pre.components.at(r.components.front());
      auto d = witness_.find(p->dchan);
      if (d != witness_.end()) d->second.actors.erase(Actor{p->dchan, p->drole});
    } else if (r.rule == Rule::SRecv) {
      const Message& msg = pre.components.at(r.components.at(1))->queue.front();
      Local t = unfold_all(before.actors.at(subject));
      witness_[msg.channel] = env_compose(witness_[msg.channel], Actor{msg.channel, msg.role}, t->carried);
    }
    last = typecheck_state(post);
    if (!last.failed()) return last;
  }
  return last;
}

// ---------------------------------------------------------------- runs

bool RunResult::passed() const {
  return std::none_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.failed(); });
}

namespace {

std::vector<Redex> enumerate_with(const Enumerator& e, const SystemState& st, const FailureOracle& o) {
  return e ? e(st, o) : enabled_redexes(st, o);
}

}  // namespace

RunResult run(const Process& program, const GlobalEnv& gamma, FailureOracle& oracle, const RunOptions& opts) {
  RunResult res;
  SystemState state = make_state(program);
  res.trace.seed = opts.seed;
  res.trace.oracle = oracle.name();
  res.trace.program = state.text();
  std::mt19937_64 rng(opts.seed);
  std::size_t cursor = 0;
  SubjectReductionMonitor monitor(gamma);
  bool unchecked_noted = false;

  auto record = [&](Verdict v, std::uint64_t step) {
    if (v.status == Status::Pass) return false;
    if (v.status == Status::Unchecked) {
      if (!unchecked_noted) {
        v.step = step;
        res.verdicts.push_back(std::move(v));
        unchecked_noted = true;
      }
      return false;
    }
    v.step = step;
    v.witness = res.trace.events;
    res.verdicts.push_back(std::move(v));
    return true;
  };
  auto progress = [&](const std::vector<Redex>& enabled, std::uint64_t step) {
    try {
      return record(detect_stuck(state, enabled), step);
    } catch (const PreconditionUnmet& e) {
      return record(verdict("progress", Status::Unchecked, std::string("precondition unmet: ") + e.what()), step);
    }
  };

  if (opts.check && record(monitor.start(state), 0)) {
    res.final_state = state;
    return res;
  }
  std::vector<Redex> enabled;
  for (std::uint64_t step = 1;; ++step) {
    enabled = enumerate_with(opts.enumerate, state, oracle);
    if (opts.check && progress(enabled, step - 1)) break;
    if (enabled.empty() || step > opts.max_steps) break;

    std::size_t pick = 0;
    auto crash = std::find_if(enabled.begin(), enabled.end(), [](const Redex& r) { return r.rule == Rule::Crash; });
    if (opts.prefer_crash && crash != enabled.end()) {
      pick = static_cast<std::size_t>(crash - enabled.begin());
    } else if (opts.schedule == Schedule::RoundRobin) {
      std::size_t best = enabled.size();
      for (std::size_t i = 0; i < enabled.size(); ++i) {
        std::size_t c = enabled[i].components.front();
        if (c >= cursor && (best == enabled.size() || c < enabled[best].components.front())) best = i;
      }
      pick = best == enabled.size() ? 0 : best;
      cursor = enabled[pick].components.front() + 1;
    } else {
      pick = static_cast<std::size_t>(rng() % enabled.size());
    }
    const Redex& r = enabled[pick];
    SystemState next = apply_redex(state, r);
    oracle.observe(r, next);
    res.trace.events.push_back(trace_event(step, r, state, next));
    ++res.coverage[r.rule];
    if (opts.check) {
      if (record(check_linearity(next), step) || record(check_error_freedom(next), step) ||
          record(monitor.step(state, r, next), step)) {
        state = std::move(next);
        enabled.clear();
        break;
      }
    }
    state = std::move(next);
  }
  res.final_state = state;
  res.terminal = !has_action_prefixes(state);
  res.quiescent = enabled.empty() && enumerate_with(opts.enumerate, state, oracle).empty();
  return res;
}

// ---------------------------------------------------------------- replay

namespace {

bool matches(const Redex& r, const TraceEvent& e) {
  if (r.rule != e.rule || r.session != e.session || r.roles != e.subject) return false;
  if (e.label && (!r.label || r.label->base != e.label->base)) return false;
  if (e.value && r.value && to_string(*r.value) != to_string(*e.value)) return false;
  return true;
}

}  // namespace

ReplayResult replay(const Trace& trace, const Enumerator& enumerate) {
  ReplayResult res;
  SystemState state;
  try {
    state = make_state(parse_process(trace.program));
  } catch (const std::exception& e) {
    res.message = std::string("cannot read the program: ") + e.what();
    return res;
  }
  auto chaos = chaotic_oracle(trace.seed);
  for (auto& e : trace.events) {
    bool found = false;
    for (auto& r : enumerate_with(enumerate, state, *chaos)) {
      if (!matches(r, e)) continue;
      SystemState next = apply_redex(state, r);
      if (next.digest() != e.digest) continue;
      state = std::move(next);
      found = true;
      break;
    }
    if (!found) {
      res.message = "step " + std::to_string(e.step) + " (" + to_string(e.rule) + ") does not reproduce digest " +
                    hex_digest(e.digest);
      res.final_state = state;
      return res;
    }
    ++res.steps;
  }
  res.ok = true;
  res.final_state = state;
  return res;
}

Verdict check_subject_reduction(const Trace& trace, const GlobalEnv& gamma, const Enumerator& enumerate) {
  SystemState state = make_state(parse_process(trace.program));
  SubjectReductionMonitor monitor(gamma);
  Verdict v = monitor.start(state);
  v.step = 0;
  if (v.failed()) return v;
  auto chaos = chaotic_oracle(trace.seed);
  std::vector<TraceEvent> prefix;
  for (auto& e : trace.events) {
    std::optional<Redex> hit;
    SystemState next;
    for (auto& r : enumerate_with(enumerate, state, *chaos)) {
      if (!matches(r, e)) continue;
      next = apply_redex(state, r);
      if (next.digest() == e.digest) {
        hit = r;
        break;
      }
    }
    prefix.push_back(e);
    if (!hit) {
      Verdict u = verdict("subject-reduction", Status::Unchecked, "trace does not replay at step " +
                                                                      std::to_string(e.step));
      u.step = e.step;
      return u;
    }
    v = monitor.step(state, *hit, next);
    if (v.failed()) {
      v.step = e.step;
      v.witness = prefix;
      return v;
    }
    state = std::move(next);
  }
  return verdict("subject-reduction", Status::Pass, "");
}

Verdict check_events(const Process& program, const GlobalEnv& gamma, const std::vector<TraceEvent>& events,
                     const Enumerator& enumerate) {
  SystemState state = make_state(program);
  SubjectReductionMonitor monitor(gamma);
  std::vector<TraceEvent> done;
  auto at = [&](Verdict v, std::uint64_t step) {
    v.step = step;
    v.witness = done;
    return v;
  };
  if (Verdict v = monitor.start(state); v.failed()) return at(v, 0);
  auto chaos = chaotic_oracle(0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto enabled = enumerate_with(enumerate, state, *chaos);
    // Prefer the candidate reproducing the recorded digest; pruned witnesses no longer match it.
    const Redex* hit = nullptr;
    SystemState next;
    for (auto& r : enabled) {
      if (!matches(r, events[i])) continue;
      SystemState cand = apply_redex(state, r);
      bool exact = cand.digest() == events[i].digest;
      if (!hit || exact) {
        hit = &r;
        next = std::move(cand);
      }
      if (exact) break;
    }
    if (!hit) return at(verdict("replay", Status::Unchecked, "event " + std::to_string(i + 1) + " is not enabled"), i);
    const Redex* it = hit;
    TraceEvent e = trace_event(i + 1, *it, state, next);
    done.push_back(e);
    for (Verdict v : {check_linearity(next), check_error_freedom(next), monitor.step(state, *it, next)})
      if (v.failed()) return at(v, i + 1);
    state = std::move(next);
  }
  try {
    Verdict v = detect_stuck(state, enumerate_with(enumerate, state, *chaos));
    if (v.failed()) return at(v, events.size());
  } catch (const PreconditionUnmet&) {
  }
  return verdict("all", Status::Pass, "");
}

std::vector<TraceEvent> minimize_witness(const Process& program, const GlobalEnv& gamma,
                                         const std::vector<TraceEvent>& events, const std::string& property,
                                         const Enumerator& enumerate) {
  auto still_fails = [&](const std::vector<TraceEvent>& es) -> std::optional<Verdict> {
    Verdict v = check_events(program, gamma, es, enumerate);
    if (v.failed() && v.property == property) return v;
    return std::nullopt;
  };
  auto first = still_fails(events);
  if (!first) return events;
  std::vector<TraceEvent> cur = first->witness;
  int budget = 200;  // re-executions spent on pruning
  for (std::size_t chunk = std::max<std::size_t>(1, cur.size() / 2); budget > 0; chunk /= 2) {
    std::size_t i = 0;
    while (i < cur.size() && budget-- > 0) {
      std::vector<TraceEvent> cand(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(i));
      cand.insert(cand.end(), cur.begin() + static_cast<std::ptrdiff_t>(std::min(cur.size(), i + chunk)), cur.end());
      if (auto v = still_fails(cand)) cur = v->witness;
      else i += chunk;
    }
    if (chunk == 1) break;
  }
  return cur;
}

// ---------------------------------------------------------------- fuzzing

void FuzzSummary::merge(const FuzzSummary& o) {
  runs += o.runs;
  steps += o.steps;
  terminal_runs += o.terminal_runs;
  unchecked_runs += o.unchecked_runs;
  for (auto& [r, n] : o.coverage) coverage[r] += n;
  failures.insert(failures.end(), o.failures.begin(), o.failures.end());
  std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

FuzzSummary fuzz(const Process& program, const GlobalEnv& gamma, const OracleFactory& make_oracle,
                 const FuzzOptions& opts) {
  std::vector<FuzzSummary> per_seed(opts.seeds.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < opts.seeds.size(); i += stride) {
      auto oracle = make_oracle(opts.seeds[i]);
      RunOptions ro;
      ro.seed = opts.seeds[i];
      ro.max_steps = opts.max_steps;
      ro.enumerate = opts.enumerate;
      RunResult r = run(program, gamma, *oracle, ro);
      FuzzSummary& s = per_seed[i];
      s.runs = 1;
      s.steps = r.trace.events.size();
      s.terminal_runs = r.terminal ? 1 : 0;
      s.coverage = r.coverage;
      for (auto& v : r.verdicts) {
        if (v.status == Status::Unchecked) s.unchecked_runs = 1;
        if (!v.failed()) continue;
        Verdict f = v;
        if (opts.minimize) f.witness = minimize_witness(program, gamma, v.witness, v.property, opts.enumerate);
        s.failures.emplace_back(opts.seeds[i], std::move(f));
        break;
      }
    }
  };
  unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(opts.seeds.size())));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& t : pool) t.join();
  }
  FuzzSummary total;
  for (auto& s : per_seed) total.merge(s);
  return total;
}

std::vector<Rule> missing_rules(const std::map<Rule, std::size_t>& coverage) {
  std::vector<Rule> out;
  for (Rule r : all_rules())
    if (!coverage.count(r) || coverage.at(r) == 0) out.push_back(r);
  return out;
}

}  // namespace ftmpst
