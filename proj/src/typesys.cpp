#include "ftmpst/typesys.hpp"

#include "ftmpst/print.hpp"
#include "ftmpst/projection.hpp"
#include "ftmpst/syntax.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <unordered_set>

namespace ftmpst {

// ---------------------------------------------------------------- message types

MsgType MsgType::r(Sort s) {
  MsgType m;
  m.kind = Kind::R;
  m.sort = s;
  return m;
}

MsgType MsgType::u(Label l, Sort s) {
  MsgType m;
  m.kind = Kind::U;
  m.label = std::move(l);
  m.sort = s;
  return m;
}

MsgType MsgType::br(Label l) {
  MsgType m;
  m.kind = Kind::BR;
  m.label = std::move(l);
  return m;
}

MsgType MsgType::bw(Label l) {
  MsgType m;
  m.kind = Kind::BW;
  m.label = std::move(l);
  return m;
}

MsgType MsgType::deleg(std::string channel, Role role) {
  MsgType m;
  m.kind = Kind::Deleg;
  m.channel = std::move(channel);
  m.role = role;
  return m;
}

std::string to_string(const MsgType& m) {
  switch (m.kind) {
    case MsgType::Kind::R: return "r<" + to_string(m.sort) + ">";
    case MsgType::Kind::U: return "u " + to_string(m.label) + "<" + to_string(m.sort) + ">";
    case MsgType::Kind::BR: return "br " + to_string(m.label);
    case MsgType::Kind::BW: return "bw " + to_string(m.label);
    case MsgType::Kind::Deleg: return "dg " + m.channel + "@" + std::to_string(m.role);
  }
  return "?";
}

namespace {

std::string key_string(const QueueKey& q) {
  return q.session + ":" + std::to_string(q.from) + "->" + std::to_string(q.to);
}

bool msg_types_match(const MsgType& a, const MsgType& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case MsgType::Kind::R: return a.sort == b.sort;
    case MsgType::Kind::U: return a.sort == b.sort && labels_compatible(a.label, b.label);
    case MsgType::Kind::BR:
    case MsgType::Kind::BW: return labels_compatible(a.label, b.label);
    case MsgType::Kind::Deleg: return a.role == b.role;
  }
  return false;
}

std::string queue_string(const std::vector<MsgType>& ms) {
  std::string s = "[";
  for (size_t i = 0; i < ms.size(); ++i) s += (i ? ", " : "") + to_string(ms[i]);
  return s + "]";
}

}  // namespace

// ---------------------------------------------------------------- session environments

SessionEnv SessionEnv::restrict_to(const std::string& session) const {
  SessionEnv out;
  for (auto& [a, t] : actors)
    if (a.session == session) out.actors.emplace(a, t);
  for (auto& [q, ms] : queues)
    if (q.session == session) out.queues.emplace(q, ms);
  return out;
}

std::set<std::string> SessionEnv::sessions() const {
  std::set<std::string> out;
  for (auto& [a, t] : actors) out.insert(a.session);
  for (auto& [q, ms] : queues) out.insert(q.session);
  return out;
}

SessionEnv env_compose(SessionEnv env, const Actor& a, const Local& t) {
  if (env.actors.count(a)) throw LinearityViolation(to_string(a));
  if (unfold_all(t)->kind != LKind::End) env.actors.emplace(a, t);
  return env;
}

SessionEnv env_compose(SessionEnv env, const QueueKey& q, std::vector<MsgType> contents) {
  if (env.queues.count(q)) throw LinearityViolation(key_string(q));
  env.queues.emplace(q, std::move(contents));
  return env;
}

SessionEnv env_compose(SessionEnv env, const SessionEnv& other) {
  for (auto& [a, t] : other.actors) env = env_compose(std::move(env), a, t);
  for (auto& [q, ms] : other.queues) env = env_compose(std::move(env), q, ms);
  return env;
}

bool un(const SessionEnv& env) {
  if (!env.queues.empty()) return false;
  for (auto& [a, t] : env.actors)
    if (!unreliable_only(t)) return false;
  return true;
}

std::string to_string(const SessionEnv& env) {
  std::string s;
  auto sep = [&] { s += s.empty() ? "" : ", "; };
  for (auto& [a, t] : env.actors) {
    sep();
    s += to_string(a) + ": " + to_string(t);
  }
  for (auto& [q, ms] : env.queues) {
    sep();
    s += key_string(q) + ": " + queue_string(ms);
  }
  return s.empty() ? "{}" : "{" + s + "}";
}

std::string env_key(const SessionEnv& env) {
  std::string s;
  for (auto& [a, t] : env.actors) s += to_string(a) + ":" + to_string(unfold_all(t)) + ";";
  for (auto& [q, ms] : env.queues) {
    s += key_string(q) + ":";
    for (auto& m : ms) {
      // Metadata on labels and delegated channel names do not distinguish types.
      MsgType c = m;
      c.label.meta.reset();
      c.channel.clear();
      s += to_string(c) + ",";
    }
    s += ";";
  }
  return s;
}

namespace {

bool same_roles(std::vector<Role> a, std::vector<Role> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

bool equiv_rec(const Local& x, const Local& y, std::set<std::pair<std::string, std::string>>& seen, int depth) {
  if (depth > 4096) return false;
  Local a = unfold_all(x);
  Local b = unfold_all(y);
  if (!seen.emplace(to_string(a), to_string(b)).second) return true;
  if (a->kind != b->kind) return false;
  auto branches_equiv = [&](const Branches<Local>& p, const Branches<Local>& q) {
    if (p.size() != q.size()) return false;
    for (auto& [l, t] : p) {
      auto it = std::find_if(q.begin(), q.end(), [&](auto& e) { return labels_compatible(e.first, l); });
      if (it == q.end() || !equiv_rec(t, it->second, seen, depth + 1)) return false;
    }
    return true;
  };
  switch (a->kind) {
    case LKind::SendR:
    case LKind::GetR: return a->peer == b->peer && a->sort == b->sort && equiv_rec(a->cont, b->cont, seen, depth + 1);
    case LKind::SendU:
    case LKind::GetU:
      return a->peer == b->peer && a->sort == b->sort && labels_compatible(a->label, b->label) &&
             equiv_rec(a->cont, b->cont, seen, depth + 1);
    case LKind::SelR:
    case LKind::BranR: return a->peer == b->peer && branches_equiv(a->branches, b->branches);
    case LKind::SelW: return same_roles(a->receivers, b->receivers) && branches_equiv(a->branches, b->branches);
    case LKind::BranW:
      return a->peer == b->peer && labels_compatible(a->dflt, b->dflt) && branches_equiv(a->branches, b->branches);
    case LKind::DelegOut:
    case LKind::DelegIn:
      return a->peer == b->peer && a->drole == b->drole && equiv_rec(a->carried, b->carried, seen, depth + 1) &&
             equiv_rec(a->cont, b->cont, seen, depth + 1);
    case LKind::Var: return a->var == b->var;
    case LKind::End: return true;
    case LKind::Rec: return false;  // unreachable after unfolding a guarded type
  }
  return false;
}

}  // namespace

bool type_equiv(const Local& a, const Local& b) {
  std::set<std::pair<std::string, std::string>> seen;
  return equiv_rec(a, b, seen, 0);
}

bool env_equiv(const SessionEnv& a, const SessionEnv& b) {
  if (a.actors.size() != b.actors.size() || a.queues.size() != b.queues.size()) return false;
  for (auto& [k, t] : a.actors) {
    auto it = b.actors.find(k);
    if (it == b.actors.end() || !type_equiv(t, it->second)) return false;
  }
  for (auto& [k, ms] : a.queues) {
    auto it = b.queues.find(k);
    if (it == b.queues.end() || it->second.size() != ms.size()) return false;
    for (size_t i = 0; i < ms.size(); ++i)
      if (!msg_types_match(ms[i], it->second[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------- global environment

void GlobalEnv::add_value(const std::string& x, Sort s) {
  if (values.count(x) || shared.count(x)) throw LinearityViolation(x);
  values.emplace(x, s);
}

namespace {

void collect_label_sorts(const Local& l, GlobalEnv& env);

void collect_label_sorts(const Global& g, GlobalEnv& env) {
  if (!g) return;
  if (g->kind == GKind::ComU) env.add_label(g->label, g->sort);
  if (g->kind == GKind::Deleg) collect_label_sorts(g->carried, env);
  for (auto& [l, b] : g->branches) collect_label_sorts(b, env);
  collect_label_sorts(g->cont, env);
  collect_label_sorts(g->right, env);
}

void collect_label_sorts(const Local& l, GlobalEnv& env) {
  if (!l) return;
  if (l->kind == LKind::SendU || l->kind == LKind::GetU) env.add_label(l->label, l->sort);
  for (auto& [x, b] : l->branches) collect_label_sorts(b, env);
  collect_label_sorts(l->carried, env);
  collect_label_sorts(l->cont, env);
}

}  // namespace

void GlobalEnv::add_shared(const std::string& a, const Global& g) {
  if (values.count(a) || shared.count(a)) throw LinearityViolation(a);
  shared.emplace(a, g);
  collect_label_sorts(g, *this);
}

void GlobalEnv::add_label(const Label& l, Sort s) {
  for (auto& [k, t] : labels) {
    if (!labels_compatible(k, l)) continue;
    if (t != s) throw LinearityViolation("label " + to_string(l));
    return;
  }
  labels.emplace_back(Label(l.base), s);
}

std::optional<Sort> GlobalEnv::label_sort(const Label& l) const {
  for (auto& [k, t] : labels)
    if (labels_compatible(k, l)) return t;
  return std::nullopt;
}

// ---------------------------------------------------------------- expression sorts

namespace {

void require(Sort expected, Sort actual, const std::string& where) {
  if (!sort_fits(expected, actual))
    throw SortMismatch(where + ": expected " + to_string(expected) + ", found " + to_string(actual));
}

}  // namespace

Sort expr_sort(const GlobalEnv& gamma, const Expr& e) {
  auto arg = [&](size_t i) { return expr_sort(gamma, e->args.at(i)); };
  switch (e->kind) {
    case ExprKind::Const: return sort_of(e->value);
    case ExprKind::Name: {
      auto it = gamma.values.find(e->name);
      if (it == gamma.values.end()) throw UnsortedName(e->name);
      return it->second;
    }
    case ExprKind::Not: require(Sort::Bool, arg(0), "operand of !"); return Sort::Bool;
    case ExprKind::Tuple:
      for (size_t i = 0; i < e->args.size(); ++i) {
        Sort s = arg(i);
        if (s == Sort::Vec) throw SortMismatch("vector entries must be plain values");
      }
      return Sort::Vec;
    case ExprKind::Binary: {
      Sort a = arg(0), b = arg(1);
      std::string where = "operand of " + to_string(e->op);
      switch (e->op) {
        case BinOp::And:
        case BinOp::Or:
          require(Sort::Bool, a, where);
          require(Sort::Bool, b, where);
          return Sort::Bool;
        case BinOp::Add:
        case BinOp::Sub:
        case BinOp::Mul:
        case BinOp::Div:
        case BinOp::Mod:
          require(Sort::Nat, a, where);
          require(Sort::Nat, b, where);
          return Sort::Nat;
        case BinOp::Le:
        case BinOp::Lt:
        case BinOp::Ge:
        case BinOp::Gt:
          require(Sort::Nat, a, where);
          require(Sort::Nat, b, where);
          return Sort::Bool;
        case BinOp::Eq:
        case BinOp::Ne:
          if (!sort_fits(a, b) && !sort_fits(b, a) && !(sort_fits(Sort::Nat, a) && sort_fits(Sort::Nat, b)))
            throw SortMismatch("cannot compare " + to_string(a) + " with " + to_string(b));
          return Sort::Bool;
      }
      break;
    }
    case ExprKind::Call: {
      const std::string& fn = e->name;
      auto arity = [&](size_t k) {
        if (e->args.size() != k) throw SortMismatch(fn + " expects " + std::to_string(k) + " arguments");
      };
      if (fn == "roll") {
        arity(1);
        require(Sort::Nat, arg(0), "argument of roll");
        return Sort::Nat;
      }
      if (fn == "best") {
        arity(1);
        require(Sort::Vec, arg(0), "argument of best");
        return Sort::Bel;
      }
      if (fn == "size" || fn == "count_ack") {
        arity(1);
        require(Sort::Vec, arg(0), "argument of " + fn);
        return Sort::Nat;
      }
      if (fn == "get") {
        arity(2);
        require(Sort::Vec, arg(0), "vector of get");
        require(Sort::Nat, arg(1), "index of get");
        return Sort::Bel;
      }
      if (fn == "update") {
        arity(3);
        require(Sort::Vec, arg(0), "vector of update");
        require(Sort::Nat, arg(1), "index of update");
        Sort v = arg(2);
        if (v == Sort::Vec) throw SortMismatch("vector entries must be plain values");
        return Sort::Vec;
      }
      if (fn == "vec") {
        arity(2);
        require(Sort::Nat, arg(0), "length of vec");
        Sort v = arg(1);
        if (v == Sort::Vec) throw SortMismatch("vector entries must be plain values");
        return Sort::Vec;
      }
      throw SortMismatch("unknown function " + fn);
    }
  }
  throw SortMismatch("unsupported expression");
}

// ---------------------------------------------------------------- environment reduction

namespace {

void push_step(std::vector<EnvStep>& out, const std::string& rule, const Actor& subject, const std::string& detail,
               SessionEnv env) {
  out.push_back({rule, subject, detail, std::move(env)});
}

void set_actor(SessionEnv& env, const Actor& a, const Local& t) {
  env.actors.erase(a);
  if (unfold_all(t)->kind != LKind::End) env.actors.emplace(a, t);
}

}  // namespace

std::vector<EnvStep> env_step_rules(const SessionEnv& delta, const std::string& session) {
  std::vector<EnvStep> out;
  for (auto& [actor, raw] : delta.actors) {
    if (actor.session != session) continue;
    if (raw->kind == LKind::Rec) {
      SessionEnv next = delta;
      set_actor(next, actor, unfold(raw));
      push_step(out, "Rec", actor, "", std::move(next));
    }
    Local t = unfold_all(raw);
    QueueKey outq{session, actor.role, t->peer};
    QueueKey inq{session, t->peer, actor.role};
    auto head = [&](const QueueKey& q) -> const MsgType* {
      auto it = delta.queues.find(q);
      if (it == delta.queues.end() || it->second.empty()) return nullptr;
      return &it->second.front();
    };
    auto send = [&](const std::string& rule, const Local& cont, MsgType m, const std::string& detail) {
      if (!delta.queues.count(outq)) return;
      SessionEnv next = delta;
      set_actor(next, actor, cont);
      next.queues[outq].push_back(std::move(m));
      push_step(out, rule, actor, detail, std::move(next));
    };
    auto receive = [&](const std::string& rule, const Local& cont, const std::string& detail) {
      SessionEnv next = delta;
      set_actor(next, actor, cont);
      auto& q = next.queues[inq];
      q.erase(q.begin());
      push_step(out, rule, actor, detail, std::move(next));
    };
    switch (t->kind) {
      case LKind::SendR: send("RSend", t->cont, MsgType::r(t->sort), ""); break;
      case LKind::SendU: send("USend", t->cont, MsgType::u(t->label, t->sort), t->label.base); break;
      case LKind::GetR:
        if (auto* m = head(inq); m && m->kind == MsgType::Kind::R && m->sort == t->sort) receive("RGet", t->cont, "");
        break;
      case LKind::GetU: {
        const MsgType* m = head(inq);
        if (m && m->kind == MsgType::Kind::U && labels_compatible(m->label, t->label) && m->sort == t->sort)
          receive("UGet", t->cont, t->label.base);
        SessionEnv next = delta;
        set_actor(next, actor, t->cont);
        push_step(out, "USkip", actor, t->label.base, std::move(next));
        break;
      }
      case LKind::SelR:
        for (auto& [l, b] : t->branches) send("RSel", b, MsgType::br(l), l.base);
        break;
      case LKind::BranR: {
        const MsgType* m = head(inq);
        if (!m || m->kind != MsgType::Kind::BR) break;
        for (auto& [l, b] : t->branches)
          if (labels_compatible(l, m->label)) {
            receive("RBran", b, l.base);
            break;
          }
        break;
      }
      case LKind::SelW: {
        bool ready = std::all_of(t->receivers.begin(), t->receivers.end(),
                                 [&](Role r) { return delta.queues.count({session, actor.role, r}) > 0; });
        if (!ready) break;
        for (auto& [l, b] : t->branches) {
          SessionEnv next = delta;
          set_actor(next, actor, b);
          for (Role r : t->receivers) next.queues[{session, actor.role, r}].push_back(MsgType::bw(l));
          push_step(out, "WSel", actor, l.base, std::move(next));
        }
        break;
      }
      case LKind::BranW: {
        const MsgType* m = head(inq);
        if (m && m->kind == MsgType::Kind::BW)
          for (auto& [l, b] : t->branches)
            if (labels_compatible(l, m->label)) {
              receive("WBran", b, l.base);
              break;
            }
        for (auto& [l, b] : t->branches)
          if (labels_compatible(l, t->dflt)) {
            SessionEnv next = delta;
            set_actor(next, actor, b);
            push_step(out, "WSkip", actor, l.base, std::move(next));
            break;
          }
        break;
      }
      case LKind::DelegOut: send("Deleg", t->cont, MsgType::deleg(t->channel, t->drole), t->channel); break;
      case LKind::DelegIn:
        if (auto* m = head(inq); m && m->kind == MsgType::Kind::Deleg && m->role == t->drole)
          receive("SRecv", t->cont, m->channel);
        break;
      default: break;
    }
  }
  for (auto& [q, ms] : delta.queues) {
    if (q.session != session || ms.empty() || ms.front().kind != MsgType::Kind::U) continue;
    SessionEnv next = delta;
    auto& nq = next.queues[q];
    nq.erase(nq.begin());
    push_step(out, "ML", Actor{session, q.from}, std::to_string(q.to), std::move(next));
  }
  return out;
}

std::vector<SessionEnv> env_step(const SessionEnv& delta, const std::string& session) {
  std::vector<SessionEnv> out;
  for (auto& s : env_step_rules(delta, session)) out.push_back(std::move(s.env));
  return out;
}

SessionEnv initial_env(const Global& g, const std::string& session) {
  SessionEnv env;
  auto roles = roles_of(g);
  for (auto& [r, t] : project_all(g)) env = env_compose(std::move(env), Actor{session, r}, t);
  for (Role a : roles)
    for (Role b : roles)
      if (a != b) env.queues[{session, a, b}] = {};
  return env;
}

namespace {

// Unfolds recursion heads and counts the unfoldings per actor.
void normalize(SessionEnv& env, std::map<Actor, int>& unfolds) {
  for (auto it = env.actors.begin(); it != env.actors.end();) {
    Local t = it->second;
    int n = 0;
    while (t->kind == LKind::Rec && n < 64) {
      t = unfold(t);
      ++n;
    }
    unfolds[it->first] += n;
    if (t->kind == LKind::End) {
      it = env.actors.erase(it);
    } else {
      it->second = t;
      ++it;
    }
  }
}

void collect_sends(const Local& l, Role self, const std::string& session, std::set<std::string>& out,
                   std::set<const LNode*>& seen) {
  if (!l || !seen.insert(l.get()).second) return;
  auto add = [&](Role to, const MsgType& m) {
    MsgType c = m;
    c.label.meta.reset();
    c.channel.clear();
    out.insert(key_string({session, self, to}) + to_string(c));
  };
  switch (l->kind) {
    case LKind::SendR: add(l->peer, MsgType::r(l->sort)); break;
    case LKind::SendU: add(l->peer, MsgType::u(l->label, l->sort)); break;
    case LKind::SelR:
      for (auto& [x, b] : l->branches) add(l->peer, MsgType::br(x));
      break;
    case LKind::SelW:
      for (Role r : l->receivers)
        for (auto& [x, b] : l->branches) add(r, MsgType::bw(x));
      break;
    case LKind::DelegOut: add(l->peer, MsgType::deleg(l->channel, l->drole)); break;
    default: break;
  }
  for (auto& [x, b] : l->branches) collect_sends(b, self, session, out, seen);
  collect_sends(l->cont, self, session, out, seen);
}

// Every queued message type must be producible by some sending prefix of the protocol.
bool queues_producible(const Global& g, const SessionEnv& target, const std::string& session) {
  std::set<std::string> sends;
  std::set<const LNode*> seen;
  for (auto& [r, t] : project_all(g)) collect_sends(t, r, session, sends, seen);
  for (auto& [q, ms] : target.queues)
    for (auto& m : ms) {
      MsgType c = m;
      c.label.meta.reset();
      c.channel.clear();
      if (!sends.count(key_string(q) + to_string(c))) return false;
    }
  return true;
}

}  // namespace

std::vector<SessionEnv> reachable_envs(const Global& g, const std::string& session, int unfold_bound, int max_states) {
  std::vector<SessionEnv> out;
  std::unordered_set<std::string> visited;
  std::deque<std::pair<SessionEnv, std::map<Actor, int>>> frontier;
  SessionEnv start = initial_env(g, session);
  std::map<Actor, int> counts;
  normalize(start, counts);
  visited.insert(env_key(start));
  frontier.emplace_back(start, counts);
  out.push_back(start);
  while (!frontier.empty()) {
    auto [env, unfolds] = std::move(frontier.front());
    frontier.pop_front();
    for (auto& step : env_step_rules(env, session)) {
      if (step.rule == "Rec") continue;
      std::map<Actor, int> next_counts = unfolds;
      normalize(step.env, next_counts);
      if (next_counts[step.subject] > unfold_bound) continue;
      if (!visited.insert(env_key(step.env)).second) continue;
      if (static_cast<int>(visited.size()) > max_states) throw DepthExceeded();
      out.push_back(step.env);
      frontier.emplace_back(std::move(step.env), std::move(next_counts));
    }
  }
  return out;
}

bool coherence_witness(const GlobalEnv& gamma, const SessionEnv& delta, int unfold_bound, int max_states) {
  for (const std::string& s : delta.sessions()) {
    SessionEnv target = delta.restrict_to(s);
    std::string key = env_key(target);
    bool found = false;
    for (auto& [name, g] : gamma.shared) {
      if (!queues_producible(g, target, s)) continue;
      for (auto& env : reachable_envs(g, s, unfold_bound, max_states))
        if (env_key(env) == key || env_equiv(env, target)) {
          found = true;
          break;
        }
      if (found) break;
    }
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------- type checking

std::string to_string(const TypeRejection& r) {
  std::string s = "rule " + r.rule + " fails at " + r.path + ": " + r.message;
  if (!r.expected.empty() || !r.found.empty()) s += " (expected " + r.expected + ", found " + r.found + ")";
  if (!r.subject.empty()) s += " in `" + r.subject + "`";
  return s;
}

namespace {

struct Reject {
  TypeRejection r;
};

std::string abbreviate(const std::string& s) { return s.size() <= 96 ? s : s.substr(0, 93) + "..."; }

std::string join(const std::string& path, const std::string& step) {
  return (path == "/" ? "" : path) + "/" + step;
}

// Actors and queues a parallel component needs from the environment.
struct Footprint {
  std::set<Actor> actors;
  std::set<QueueKey> queues;
};

void footprint(const Process& p, std::set<std::string> bound, Footprint& out) {
  if (!p) return;
  auto actor = [&](const std::string& s, Role r) {
    if (!bound.count(s)) out.actors.insert({s, r});
  };
  switch (p->kind) {
    case PKind::Req:
    case PKind::Acc:
    case PKind::Restrict: bound.insert(p->kind == PKind::Restrict ? p->binder : p->chan); break;
    case PKind::Queue:
      if (!bound.count(p->chan)) out.queues.insert({p->chan, p->role, p->peer});
      return;
    case PKind::DelegOut:
      actor(p->chan, p->role);
      actor(p->dchan, p->drole);
      break;
    case PKind::DelegIn:
      actor(p->chan, p->role);
      bound.insert(p->binder);
      break;
    case PKind::SendR:
    case PKind::GetR:
    case PKind::SendU:
    case PKind::GetU:
    case PKind::SelR:
    case PKind::BranR:
    case PKind::SelW:
    case PKind::BranW: actor(p->chan, p->role); break;
    default: break;
  }
  for (auto& [l, b] : p->branches) footprint(b, bound, out);
  footprint(p->cont, bound, out);
  footprint(p->alt, bound, out);
}

void flatten_par(const Process& p, std::vector<Process>& out) {
  if (p->kind == PKind::Par) {
    flatten_par(p->cont, out);
    flatten_par(p->alt, out);
  } else {
    out.push_back(p);
  }
}

bool uses_session(const Process& p, const std::string& s) {
  Footprint f;
  footprint(p, {}, f);
  for (auto& a : f.actors)
    if (a.session == s) return true;
  for (auto& q : f.queues)
    if (q.session == s) return true;
  return false;
}

Sort widen(Sort s) { return s == Sort::Bel ? Sort::Nat : s; }

struct Checker {
  const TypecheckOptions& opts;
  std::vector<DerivationStep> derivation;
  std::map<const GNode*, std::map<Role, Local>> projections;

  [[noreturn]] void fail(const std::string& rule, const std::string& path, const std::string& message,
                         const Process& p, std::string expected = {}, std::string found = {}) {
    throw Reject{{rule, path, std::move(expected), std::move(found), message, p ? abbreviate(to_string(p)) : ""}};
  }

  void note(const std::string& rule, const std::string& path) { derivation.push_back({rule, path}); }

  Sort sort_in(const GlobalEnv& g, const Expr& e, const std::string& rule, const std::string& path,
               const Process& p) {
    try {
      return expr_sort(g, e);
    } catch (const UnsortedName& ex) {
      fail(rule, path, ex.what(), p);
    } catch (const SortMismatch& ex) {
      fail(rule, path, ex.what(), p);
    }
  }

  const std::map<Role, Local>& projections_of(const Global& g) {
    auto it = projections.find(g.get());
    if (it != projections.end()) return it->second;
    return projections.emplace(g.get(), project_all(g)).first->second;
  }

  // The actor's type with recursion heads unfolded, or a rejection.
  Local take(const SessionEnv& d, const Actor& a, const std::string& rule, const std::string& path,
             const Process& p) {
    auto it = d.actors.find(a);
    if (it == d.actors.end()) fail(rule, path, "no session type for " + to_string(a), p, "an assignment", "none");
    return unfold_all(it->second);
  }

  SessionEnv with(SessionEnv d, const Actor& a, const Local& t) {
    set_actor(d, a, t);
    return d;
  }

  void expect_kind(const Local& t, LKind k, const std::string& what, const std::string& rule, const std::string& path,
                   const Process& p) {
    if (t->kind != k) fail(rule, path, "type does not offer " + what, p, what, to_string(t));
  }

  void expect_peer(const Local& t, Role peer, const std::string& rule, const std::string& path, const Process& p) {
    if (t->peer != peer)
      fail(rule, path, "partner role differs", p, "role " + std::to_string(t->peer), "role " + std::to_string(peer));
  }

  std::string fresh_session(const std::string& base, const SessionEnv& d, const Process& body) {
    auto names = all_names(body);
    auto sessions = d.sessions();
    for (int k = 1;; ++k) {
      std::string c = base + "'" + std::to_string(k);
      if (!names.count(c) && !sessions.count(c)) return c;
    }
  }

  void check(const GlobalEnv& g, const Process& p, const SessionEnv& d, const std::string& path) {
    switch (p->kind) {
      case PKind::End:
        if (!d.empty()) fail("End", path, "inactive process with a non-terminated environment", p, "{}", to_string(d));
        note("End", path);
        return;
      case PKind::Crash:
        if (!un(d)) fail("Crash", path, "crashed process owns reliable obligations", p, "unreliable types only",
                         to_string(d));
        note("Crash", path);
        return;
      case PKind::Req:
      case PKind::Acc: return check_init(g, p, d, path);
      case PKind::SendR: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "RSend", path, p);
        expect_kind(t, LKind::SendR, "a reliable send", "RSend", path, p);
        expect_peer(t, p->peer, "RSend", path, p);
        Sort s = sort_in(g, p->expr, "RSend", path, p);
        if (!sort_fits(t->sort, s)) fail("RSend", path, "payload sort", p, to_string(t->sort), to_string(s));
        note("RSend", path);
        return check(g, p->cont, with(d, a, t->cont), join(path, "cont"));
      }
      case PKind::SendU: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "USend", path, p);
        expect_kind(t, LKind::SendU, "an unreliable send", "USend", path, p);
        expect_peer(t, p->peer, "USend", path, p);
        if (!labels_compatible(t->label, p->label))
          fail("USend", path, "label differs", p, to_string(t->label), to_string(p->label));
        auto ls = g.label_sort(t->label);
        if (!ls || *ls != t->sort) fail("USend", path, "label sort unknown or inconsistent", p, to_string(t->sort),
                                        ls ? to_string(*ls) : "none");
        Sort s = sort_in(g, p->expr, "USend", path, p);
        if (!sort_fits(t->sort, s)) fail("USend", path, "payload sort", p, to_string(t->sort), to_string(s));
        note("USend", path);
        return check(g, p->cont, with(d, a, t->cont), join(path, "cont"));
      }
      case PKind::GetR: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "RGet", path, p);
        expect_kind(t, LKind::GetR, "a reliable receive", "RGet", path, p);
        expect_peer(t, p->peer, "RGet", path, p);
        GlobalEnv g2 = g;
        g2.values[p->binder] = t->sort;
        note("RGet", path);
        return check(g2, p->cont, with(d, a, t->cont), join(path, "cont"));
      }
      case PKind::GetU: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "UGet", path, p);
        expect_kind(t, LKind::GetU, "an unreliable receive", "UGet", path, p);
        expect_peer(t, p->peer, "UGet", path, p);
        if (!labels_compatible(t->label, p->label))
          fail("UGet", path, "label differs", p, to_string(t->label), to_string(p->label));
        auto ls = g.label_sort(t->label);
        if (!ls || *ls != t->sort) fail("UGet", path, "label sort unknown or inconsistent", p, to_string(t->sort),
                                        ls ? to_string(*ls) : "none");
        Sort dv = sort_in(g, p->expr, "UGet", path, p);
        if (!sort_fits(t->sort, dv)) fail("UGet", path, "default value sort", p, to_string(t->sort), to_string(dv));
        GlobalEnv g2 = g;
        g2.values[p->binder] = t->sort;
        note("UGet", path);
        return check(g2, p->cont, with(d, a, t->cont), join(path, "cont"));
      }
      case PKind::SelR:
      case PKind::SelW: {
        bool weak = p->kind == PKind::SelW;
        std::string rule = weak ? "WSel" : "RSel";
        Actor a{p->chan, p->role};
        Local t = take(d, a, rule, path, p);
        expect_kind(t, weak ? LKind::SelW : LKind::SelR, weak ? "a weak selection" : "a reliable selection", rule,
                    path, p);
        if (weak) {
          if (!same_roles(t->receivers, p->receivers)) fail(rule, path, "receiver set differs", p);
        } else {
          expect_peer(t, p->peer, rule, path, p);
        }
        for (auto& [l, b] : t->branches)
          if (labels_compatible(l, p->label)) {
            note(rule, path);
            return check(g, p->cont, with(d, a, b), join(path, "cont"));
          }
        fail(rule, path, "selected label is not offered", p, "one of the type's labels", to_string(p->label));
      }
      case PKind::BranR:
      case PKind::BranW: {
        bool weak = p->kind == PKind::BranW;
        std::string rule = weak ? "WBran" : "RBran";
        Actor a{p->chan, p->role};
        Local t = take(d, a, rule, path, p);
        expect_kind(t, weak ? LKind::BranW : LKind::BranR, weak ? "a weak branching" : "a reliable branching", rule,
                    path, p);
        expect_peer(t, p->peer, rule, path, p);
        if (weak && !labels_compatible(t->dflt, p->dflt))
          fail(rule, path, "default labels differ", p, to_string(t->dflt), to_string(p->dflt));
        note(rule, path);
        for (auto& [l, tb] : t->branches) {
          auto it = std::find_if(p->branches.begin(), p->branches.end(),
                                 [&](auto& e) { return labels_compatible(e.first, l); });
          if (it == p->branches.end()) fail(rule, path, "missing branch " + to_string(l), p);
          check(g, it->second, with(d, a, tb), join(path, "branch " + to_string(l)));
        }
        return;
      }
      case PKind::DelegOut: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "Deleg", path, p);
        expect_kind(t, LKind::DelegOut, "a delegation", "Deleg", path, p);
        expect_peer(t, p->peer, "Deleg", path, p);
        if (t->drole != p->drole)
          fail("Deleg", path, "delegated role differs", p, std::to_string(t->drole), std::to_string(p->drole));
        Actor c{p->dchan, p->drole};
        auto it = d.actors.find(c);
        if (it == d.actors.end()) fail("Deleg", path, "delegated actor has no type", p, to_string(t->carried), "none");
        if (!type_equiv(it->second, t->carried))
          fail("Deleg", path, "delegated actor has the wrong type", p, to_string(t->carried), to_string(it->second));
        SessionEnv next = with(d, a, t->cont);
        next.actors.erase(c);
        note("Deleg", path);
        return check(g, p->cont, next, join(path, "cont"));
      }
      case PKind::DelegIn: {
        Actor a{p->chan, p->role};
        Local t = take(d, a, "SRecv", path, p);
        expect_kind(t, LKind::DelegIn, "a delegation reception", "SRecv", path, p);
        expect_peer(t, p->peer, "SRecv", path, p);
        if (t->drole != p->drole)
          fail("SRecv", path, "delegated role differs", p, std::to_string(t->drole), std::to_string(p->drole));
        Process body = p->cont;
        std::string c = p->binder;
        SessionEnv next = with(d, a, t->cont);
        if (next.sessions().count(c)) {
          std::string fresh = fresh_session(c, next, body);
          body = rename(body, c, fresh);
          c = fresh;
        }
        try {
          next = env_compose(std::move(next), Actor{c, p->drole}, t->carried);
        } catch (const LinearityViolation& e) {
          fail("SRecv", path, e.what(), p);
        }
        note("SRecv", path);
        return check(g, body, next, join(path, "cont"));
      }
      case PKind::If: {
        Sort s = sort_in(g, p->expr, "If", path, p);
        if (!sort_fits(Sort::Bool, s)) fail("If", path, "condition sort", p, "bool", to_string(s));
        note("If", path);
        check(g, p->cont, d, join(path, "then"));
        check(g, p->alt, d, join(path, "else"));
        return;
      }
      case PKind::Let: {
        Sort s = sort_in(g, p->expr, "Let", path, p);
        GlobalEnv g2 = g;
        g2.values[p->binder] = s;
        note("Let", path);
        return check(g2, p->cont, d, join(path, "cont"));
      }
      case PKind::Par: return check_par(g, p, d, path);
      case PKind::Rec: {
        if (p->params.size() != p->args.size()) fail("Rec", path, "parameter count differs from initial values", p);
        GlobalEnv g2 = g;
        ProcVarType pv{d, {}};
        for (size_t i = 0; i < p->params.size(); ++i) {
          Sort s = widen(sort_in(g, p->args[i], "Rec", path, p));
          pv.params.push_back(s);
          g2.values[p->params[i]] = s;
        }
        g2.procvars[p->var] = std::move(pv);
        note("Rec", path);
        return check(g2, p->cont, d, join(path, "body"));
      }
      case PKind::Var: {
        auto it = g.procvars.find(p->var);
        if (it == g.procvars.end()) fail("Var", path, "unbound process variable " + p->var, p);
        const ProcVarType& pv = it->second;
        if (pv.params.size() != p->args.size())
          fail("Var", path, "argument count", p, std::to_string(pv.params.size()), std::to_string(p->args.size()));
        for (size_t i = 0; i < p->args.size(); ++i) {
          Sort s = sort_in(g, p->args[i], "Var", path, p);
          if (!sort_fits(pv.params[i], s)) fail("Var", path, "argument sort", p, to_string(pv.params[i]), to_string(s));
        }
        if (!env_equiv(pv.env, d))
          fail("Var", path, "recursion returns in a different environment", p, to_string(pv.env), to_string(d));
        note("Var", path);
        return;
      }
      case PKind::Restrict: return check_restrict(g, p, d, path);
      case PKind::Queue: return check_queue(g, p, d, path);
    }
  }

  void check_init(const GlobalEnv& g, const Process& p, const SessionEnv& d, const std::string& path) {
    bool req = p->kind == PKind::Req;
    std::string rule = req ? "Req" : "Acc";
    auto it = g.shared.find(p->shared);
    if (it == g.shared.end()) fail(rule, path, "shared channel " + p->shared + " has no global type", p);
    const auto& proj = projections_of(it->second);
    Role n = static_cast<Role>(roles_of(it->second).size());
    if (req && p->role != n)
      fail(rule, path, "session size differs from the protocol", p, std::to_string(n), std::to_string(p->role));
    if (!req && (p->role <= 0 || p->role >= n))
      fail(rule, path, "accepting role out of range", p, "0 < r < " + std::to_string(n), std::to_string(p->role));
    Process body = p->cont;
    std::string s = p->chan;
    if (d.sessions().count(s)) {
      std::string fresh = fresh_session(s, d, body);
      body = rename(body, s, fresh);
      s = fresh;
    }
    auto pt = proj.find(p->role);
    SessionEnv next = d;
    if (pt != proj.end()) next = env_compose(std::move(next), Actor{s, p->role}, pt->second);
    note(rule, path);
    check(g, body, next, join(path, "body"));
  }

  void check_par(const GlobalEnv& g, const Process& p, const SessionEnv& d, const std::string& path) {
    std::vector<Process> parts;
    flatten_par(p, parts);
    std::vector<SessionEnv> envs(parts.size());
    std::map<Actor, size_t> actor_owner;
    std::map<QueueKey, size_t> queue_owner;
    for (size_t i = 0; i < parts.size(); ++i) {
      Footprint f;
      footprint(parts[i], {}, f);
      for (auto& a : f.actors) {
        auto [it, fresh] = actor_owner.emplace(a, i);
        if (!fresh)
          fail("Par", path, to_string(a) + " is used by two parallel components", p, "disjoint actors", to_string(a));
      }
      for (auto& q : f.queues) {
        auto [it, fresh] = queue_owner.emplace(q, i);
        if (!fresh) fail("Par", path, "queue " + key_string(q) + " occurs twice", p);
      }
    }
    std::optional<size_t> crashed;
    for (size_t i = 0; i < parts.size() && !crashed; ++i)
      if (parts[i]->kind == PKind::Crash) crashed = i;
    SessionEnv leftover;
    for (auto& [a, t] : d.actors) {
      auto it = actor_owner.find(a);
      if (it != actor_owner.end()) envs[it->second].actors.emplace(a, t);
      else leftover.actors.emplace(a, t);
    }
    for (auto& [q, ms] : d.queues) {
      auto it = queue_owner.find(q);
      if (it != queue_owner.end()) envs[it->second].queues.emplace(q, ms);
      else leftover.queues.emplace(q, ms);
    }
    if (!leftover.empty()) {
      if (!crashed) fail("Par", path, "assignments used by no component", p, "{}", to_string(leftover));
      envs[*crashed] = env_compose(envs[*crashed], leftover);
    }
    note("Par", path);
    for (size_t i = 0; i < parts.size(); ++i) check(g, parts[i], envs[i], join(path, "par " + std::to_string(i + 1)));
  }

  bool attempt(const std::function<void()>& f) {
    size_t mark = derivation.size();
    try {
      f();
      return true;
    } catch (const Reject&) {
      derivation.resize(mark);
      return false;
    }
  }

  void check_restrict(const GlobalEnv& g, const Process& p, const SessionEnv& d, const std::string& path) {
    const std::string& x = p->binder;
    std::string inner = join(path, "new " + x);
    if (g.shared.count(x)) {
      note("Res1", path);
      return check(g, p->cont, d, inner);
    }
    if (!uses_session(p->cont, x)) {
      std::optional<Reject> last;
      for (Sort s : {Sort::Nat, Sort::Bool, Sort::Bel, Sort::Ack, Sort::Vec}) {
        GlobalEnv g2 = g;
        g2.values[x] = s;
        size_t mark = derivation.size();
        try {
          note("Res1", path);
          check(g2, p->cont, d, inner);
          return;
        } catch (const Reject& r) {
          derivation.resize(mark);
          if (!last) last = r;
        }
      }
      throw *last;
    }
    if (d.sessions().count(x)) fail("Res2", path, "restricted session already occurs in the environment", p);
    auto hint = opts.session_hints.find(x);
    if (hint != opts.session_hints.end()) {
      SessionEnv next;
      try {
        next = env_compose(d, hint->second);
      } catch (const LinearityViolation& e) {
        fail("Res2", path, e.what(), p);
      }
      note("Res2", path);
      return check(g, p->cont, next, inner);
    }
    std::optional<Reject> last;
    for (auto& [name, global] : g.shared) {
      std::vector<SessionEnv> candidates;
      try {
        candidates = reachable_envs(global, x, opts.unfold_bound, opts.max_states);
      } catch (const DepthExceeded&) {
        continue;
      }
      for (auto& cand : candidates) {
        size_t mark = derivation.size();
        try {
          note("Res2", path);
          check(g, p->cont, env_compose(d, cand), inner);
          return;
        } catch (const Reject& r) {
          derivation.resize(mark);
          last = r;
        }
      }
    }
    fail("Res2", path, "no reachable environment of a known protocol types the session " + x, p, "a witness",
         last ? to_string(last->r) : "no protocol");
  }

  void check_queue(const GlobalEnv& g, const Process& p, const SessionEnv& d, const std::string& path) {
    QueueKey key{p->chan, p->role, p->peer};
    auto it = d.queues.find(key);
    if (it == d.queues.end()) fail("MQNil", path, "no type for queue " + key_string(key), p);
    if (d.queues.size() != 1 || !d.actors.empty())
      fail("MQNil", path, "queue component with extra assignments", p, key_string(key), to_string(d));
    const auto& types = it->second;
    if (types.size() != p->queue.size())
      fail("MQNil", path, "queue length differs", p, std::to_string(types.size()), std::to_string(p->queue.size()));
    for (size_t i = 0; i < types.size(); ++i) {
      const Message& m = p->queue[i];
      const MsgType& t = types[i];
      std::string at = join(path, "msg " + std::to_string(i + 1));
      auto mismatch = [&](const std::string& rule) {
        fail(rule, at, "message does not match its type", p, to_string(t), to_string(m));
      };
      switch (m.kind) {
        case Message::Kind::R:
          if (t.kind != MsgType::Kind::R || !sort_fits(t.sort, sort_of(m.value))) mismatch("MQComR");
          note("MQComR", at);
          break;
        case Message::Kind::U: {
          if (t.kind != MsgType::Kind::U || !labels_compatible(m.label, t.label) || !sort_fits(t.sort, sort_of(m.value)))
            mismatch("MQComU");
          auto ls = g.label_sort(t.label);
          if (!ls || *ls != t.sort) mismatch("MQComU");
          note("MQComU", at);
          break;
        }
        case Message::Kind::BR:
          if (t.kind != MsgType::Kind::BR || !labels_compatible(m.label, t.label)) mismatch("MQBranR");
          note("MQBranR", at);
          break;
        case Message::Kind::BW:
          if (t.kind != MsgType::Kind::BW || !labels_compatible(m.label, t.label)) mismatch("MQBranW");
          note("MQBranW", at);
          break;
        case Message::Kind::Deleg:
          if (t.kind != MsgType::Kind::Deleg || t.role != m.role) mismatch("MQDeleg");
          note("MQDeleg", at);
          break;
      }
    }
    note("MQNil", path);
  }
};

}  // namespace

TypeResult typecheck(const GlobalEnv& gamma, const Process& p, const SessionEnv& delta, const TypecheckOptions& opts) {
  Checker c{opts, {}, {}};
  TypeResult r;
  try {
    c.check(gamma, p, delta, "/");
    r.ok = true;
    r.derivation = std::move(c.derivation);
  } catch (const Reject& rej) {
    r.rejection = rej.r;
  } catch (const LinearityViolation& e) {
    r.rejection = TypeRejection{"Par", "/", "", "", e.what(), ""};
  } catch (const NotProjectable& e) {
    r.rejection = TypeRejection{"Req", "/", "", "", e.what(), ""};
  }
  return r;
}

}  // namespace ftmpst
