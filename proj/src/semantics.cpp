#include "ftmpst/semantics.hpp"

#include "ftmpst/eval.hpp"
#include "ftmpst/print.hpp"
#include "ftmpst/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace ftmpst {

namespace {

const std::vector<std::pair<Rule, const char*>> kRuleNames = {
    {Rule::Init, "Init"}, {Rule::RSend, "RSend"}, {Rule::RGet, "RGet"},   {Rule::USend, "USend"},
    {Rule::UGet, "UGet"}, {Rule::USkip, "USkip"}, {Rule::ML, "ML"},       {Rule::RSel, "RSel"},
    {Rule::RBran, "RBran"}, {Rule::WSel, "WSel"}, {Rule::WBran, "WBran"}, {Rule::WSkip, "WSkip"},
    {Rule::Crash, "Crash"}, {Rule::IfT, "IfT"},   {Rule::IfF, "IfF"},     {Rule::Deleg, "Deleg"},
    {Rule::SRecv, "SRecv"}, {Rule::Rec, "Rec"},
};

}  // namespace

std::string to_string(Rule r) {
  for (auto& [k, n] : kRuleNames)
    if (k == r) return n;
  return "?";
}

std::optional<Rule> rule_from_name(const std::string& name) {
  for (auto& [k, n] : kRuleNames)
    if (name == n) return k;
  return std::nullopt;
}

const std::vector<Rule>& all_rules() {
  static const std::vector<Rule> rules = [] {
    std::vector<Rule> v;
    for (auto& [k, n] : kRuleNames) v.push_back(k);
    return v;
  }();
  return rules;
}

bool is_failure_rule(Rule r) { return r == Rule::ML || r == Rule::USkip || r == Rule::WSkip || r == Rule::Crash; }

std::string to_string(const Redex& r) {
  std::string s = to_string(r.rule);
  if (r.session) s += " " + *r.session;
  if (!r.roles.empty()) {
    s += " [";
    for (size_t i = 0; i < r.roles.size(); ++i) s += (i ? "," : "") + std::to_string(r.roles[i]);
    s += "]";
  }
  if (r.label) s += " " + to_string(*r.label);
  if (r.value) s += " <" + to_string(*r.value) + ">";
  return s;
}

// ---------------------------------------------------------------- normal form

namespace {

std::string strip_suffix(const std::string& name) {
  auto pos = name.find('#');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

std::uint64_t next_free_suffix(const Process& p) {
  std::uint64_t top = 0;
  for (auto& n : all_names(p)) {
    auto pos = n.find('#');
    if (pos == std::string::npos) continue;
    std::string digits;
    for (size_t i = pos + 1; i < n.size() && std::isdigit(static_cast<unsigned char>(n[i])); ++i) digits += n[i];
    if (!digits.empty() && digits.size() < 18) top = std::max<std::uint64_t>(top, std::stoull(digits));
  }
  return top + 1;
}

struct Soup {
  std::vector<std::string>& restricted;
  std::vector<Process>& out;
  std::uint64_t& fresh;
  // Names a floated restriction must avoid, computed on demand.
  std::function<std::set<std::string>()> occupied;
  std::optional<std::set<std::string>> taken;

  void absorb(const Process& p) {
    switch (p->kind) {
      case PKind::End: return;
      case PKind::Par:
        absorb(p->cont);
        absorb(p->alt);
        return;
      case PKind::Restrict: {
        if (!free_names(p->cont).count(p->binder)) return absorb(p->cont);
        if (!taken) taken = occupied();
        std::string name = p->binder;
        Process body = p->cont;
        if (taken->count(name) || std::count(restricted.begin(), restricted.end(), name)) {
          std::string fresh_name = strip_suffix(name) + "#" + std::to_string(fresh++);
          body = rename(body, name, fresh_name);
          name = fresh_name;
        }
        restricted.push_back(name);
        taken->insert(name);
        return absorb(body);
      }
      case PKind::Let: {
        try {
          Value v = eval_expr(p->expr);
          return absorb(subst_value(p->cont, p->binder, v));
        } catch (const OpenExpression&) {
          out.push_back(p);
          return;
        }
      }
      case PKind::Rec:
        if (p->cont->kind == PKind::End) return;
        out.push_back(p);
        return;
      default: out.push_back(p); return;
    }
  }
};

void sort_state(SystemState& st) {
  std::vector<size_t> order(st.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return st.texts[a] < st.texts[b]; });
  std::vector<Process> comps;
  std::vector<std::string> texts;
  for (size_t i : order) {
    comps.push_back(st.components[i]);
    texts.push_back(std::move(st.texts[i]));
  }
  st.components = std::move(comps);
  st.texts = std::move(texts);
  std::sort(st.restricted.begin(), st.restricted.end());
}

}  // namespace

Process SystemState::process() const {
  Process p = p_par(components);
  for (size_t i = restricted.size(); i-- > 0;) p = p_new(restricted[i], p);
  return p;
}

std::string SystemState::text() const {
  std::string s;
  for (auto& r : restricted) s += "new " + r + " . ";
  if (texts.empty()) return s + "0";
  bool wrap = !restricted.empty() && texts.size() > 1;
  if (wrap) s += "(";
  for (size_t i = 0; i < texts.size(); ++i) s += (i ? " | " : "") + texts[i];
  if (wrap) s += ")";
  return s;
}

std::uint64_t SystemState::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

SystemState make_state(const Process& p) {
  SystemState st;
  st.fresh = next_free_suffix(p);
  auto outer = free_names(p);
  Soup soup{st.restricted, st.components, st.fresh, [outer] { return outer; }, std::nullopt};
  soup.absorb(p);
  for (auto& c : st.components) st.texts.push_back(to_string(c));
  sort_state(st);
  return st;
}

Process congruent_normal_form(const Process& p) { return make_state(p).process(); }

bool has_action_prefixes(const SystemState& state) {
  std::function<bool(const Process&)> walk = [&](const Process& p) -> bool {
    if (!p) return false;
    switch (p->kind) {
      case PKind::End:
      case PKind::Crash:
      case PKind::Queue:
      case PKind::Var: return false;
      case PKind::Par:
      case PKind::If: return walk(p->cont) || walk(p->alt);
      case PKind::Rec:
      case PKind::Restrict:
      case PKind::Let: return walk(p->cont);
      default: return true;
    }
  };
  return std::any_of(state.components.begin(), state.components.end(), walk);
}

// ---------------------------------------------------------------- redexes

namespace {

using QueueIndex = std::map<std::tuple<std::string, Role, Role>, size_t>;

QueueIndex index_queues(const SystemState& st) {
  QueueIndex q;
  for (size_t i = 0; i < st.components.size(); ++i) {
    const auto& c = st.components[i];
    if (c->kind == PKind::Queue) q.emplace(std::make_tuple(c->chan, c->role, c->peer), i);
  }
  return q;
}

const Message* queue_head(const SystemState& st, const QueueIndex& qi, const std::string& s, Role from, Role to,
                          size_t* idx = nullptr) {
  auto it = qi.find({s, from, to});
  if (it == qi.end()) return nullptr;
  if (idx) *idx = it->second;
  const auto& q = st.components[it->second]->queue;
  return q.empty() ? nullptr : &q.front();
}

template <class T>
const T* find_branch(const Branches<T>& bs, const Label& l) {
  for (auto& [k, b] : bs)
    if (labels_compatible(k, l)) return &b;
  return nullptr;
}

}  // namespace

// Internal steps are attributed to the actors of their component.
std::pair<std::optional<std::string>, std::vector<Role>> local_subject(const Process& p) {
  auto actors = actors_of(p);
  if (actors.empty()) return {std::nullopt, {}};
  std::vector<Role> roles;
  for (auto& a : actors)
    if (a.session == actors.begin()->session) roles.push_back(a.role);
  return {actors.begin()->session, roles};
}

std::vector<Redex> enabled_redexes(const SystemState& st, const FailureOracle& oracle) {
  std::vector<Redex> out;
  const std::uint64_t origin = st.digest();
  QueueIndex qi = index_queues(st);
  auto emit = [&](Rule rule, std::vector<size_t> comps, std::optional<std::string> session, std::vector<Role> roles,
                  std::optional<Label> label = std::nullopt, std::optional<Value> value = std::nullopt) {
    Redex r;
    r.rule = rule;
    r.components = std::move(comps);
    r.session = std::move(session);
    r.roles = std::move(roles);
    r.label = std::move(label);
    r.value = std::move(value);
    r.origin = origin;
    out.push_back(std::move(r));
  };
  std::map<std::pair<std::string, Role>, size_t> accepts;
  for (size_t i = 0; i < st.components.size(); ++i) {
    const auto& c = st.components[i];
    if (c->kind == PKind::Acc) accepts.emplace(std::make_pair(c->shared, c->role), i);
  }

  for (size_t i = 0; i < st.components.size(); ++i) {
    const Process& p = st.components[i];
    auto queue_to = [&](Role to) { return qi.find({p->chan, p->role, to}); };
    switch (p->kind) {
      case PKind::Req: {
        std::vector<size_t> comps{i};
        std::vector<Role> roles;
        bool complete = true;
        for (Role r = 1; r < p->role && complete; ++r) {
          auto it = accepts.find({p->shared, r});
          if (it == accepts.end()) complete = false;
          else comps.push_back(it->second);
          roles.push_back(r);
        }
        roles.push_back(p->role);
        if (complete) emit(Rule::Init, comps, strip_suffix(p->chan) + "#" + std::to_string(st.fresh), roles);
        break;
      }
      case PKind::SendR:
      case PKind::SendU: {
        auto q = queue_to(p->peer);
        if (q == qi.end()) break;
        Value v = eval_expr(p->expr);
        bool u = p->kind == PKind::SendU;
        emit(u ? Rule::USend : Rule::RSend, {i, q->second}, p->chan, {p->role, p->peer},
             u ? std::optional<Label>(p->label) : std::nullopt, v);
        break;
      }
      case PKind::GetR: {
        size_t qidx = 0;
        const Message* m = queue_head(st, qi, p->chan, p->peer, p->role, &qidx);
        if (m && m->kind == Message::Kind::R) emit(Rule::RGet, {i, qidx}, p->chan, {p->role, p->peer}, {}, m->value);
        break;
      }
      case PKind::GetU: {
        size_t qidx = 0;
        const Message* m = queue_head(st, qi, p->chan, p->peer, p->role, &qidx);
        if (m && m->kind == Message::Kind::U && labels_compatible(p->label, m->label) &&
            oracle.fp_uget(p->chan, p->role, p->peer, p->label))
          emit(Rule::UGet, {i, qidx}, p->chan, {p->role, p->peer}, m->label, m->value);
        if (oracle.fp_uskip(p->chan, p->role, p->peer, p->label))
          emit(Rule::USkip, {i}, p->chan, {p->role, p->peer}, p->label, eval_expr(p->expr));
        break;
      }
      case PKind::SelR: {
        auto q = queue_to(p->peer);
        if (q != qi.end()) emit(Rule::RSel, {i, q->second}, p->chan, {p->role, p->peer}, p->label);
        break;
      }
      case PKind::SelW: {
        std::vector<size_t> comps{i};
        std::vector<Role> roles{p->role};
        bool ready = true;
        for (Role r : p->receivers) {
          auto q = queue_to(r);
          if (q == qi.end()) {
            ready = false;
            break;
          }
          comps.push_back(q->second);
          roles.push_back(r);
        }
        if (ready) emit(Rule::WSel, comps, p->chan, roles, p->label);
        break;
      }
      case PKind::BranR: {
        size_t qidx = 0;
        const Message* m = queue_head(st, qi, p->chan, p->peer, p->role, &qidx);
        if (m && m->kind == Message::Kind::BR && find_branch(p->branches, m->label))
          emit(Rule::RBran, {i, qidx}, p->chan, {p->role, p->peer}, m->label);
        break;
      }
      case PKind::BranW: {
        size_t qidx = 0;
        const Message* m = queue_head(st, qi, p->chan, p->peer, p->role, &qidx);
        if (m && m->kind == Message::Kind::BW && find_branch(p->branches, m->label))
          emit(Rule::WBran, {i, qidx}, p->chan, {p->role, p->peer}, m->label);
        auto q = qi.find({p->chan, p->peer, p->role});
        bool empty = q == qi.end() || st.components[q->second]->queue.empty();
        if (find_branch(p->branches, p->dflt) && oracle.fp_wskip(p->chan, p->role, p->peer, empty))
          emit(Rule::WSkip, {i}, p->chan, {p->role, p->peer}, p->dflt);
        break;
      }
      case PKind::DelegOut: {
        auto q = queue_to(p->peer);
        if (q != qi.end()) emit(Rule::Deleg, {i, q->second}, p->chan, {p->role, p->peer});
        break;
      }
      case PKind::DelegIn: {
        size_t qidx = 0;
        const Message* m = queue_head(st, qi, p->chan, p->peer, p->role, &qidx);
        if (m && m->kind == Message::Kind::Deleg) emit(Rule::SRecv, {i, qidx}, p->chan, {p->role, p->peer});
        break;
      }
      case PKind::If: {
        Value v = eval_expr(p->expr);
        if (v.kind != Value::Kind::Bool) throw EvalError("condition is not a boolean: " + to_string(p->expr));
        auto [session, roles] = local_subject(p);
        emit(v.b ? Rule::IfT : Rule::IfF, {i}, session, roles);
        break;
      }
      case PKind::Rec: {
        auto [session, roles] = local_subject(p);
        emit(Rule::Rec, {i}, session, roles);
        break;
      }
      case PKind::Queue:
        if (!p->queue.empty() && p->queue.front().kind == Message::Kind::U &&
            oracle.fp_ml(p->chan, p->role, p->peer, p->queue.front().label))
          emit(Rule::ML, {i}, p->chan, {p->role, p->peer}, p->queue.front().label);
        break;
      default: break;
    }
    if (p->kind != PKind::Queue && p->kind != PKind::Crash) {
      auto actors = actors_of(p);
      if (!actors.empty() && unreliable_only(p) && oracle.fp_crash(p, actors)) {
        std::set<Role> roles;
        for (auto& a : actors) roles.insert(a.role);
        emit(Rule::Crash, {i}, actors.begin()->session, std::vector<Role>(roles.begin(), roles.end()));
        out.back().actors.assign(actors.begin(), actors.end());
      }
    }
  }
  return out;
}

SystemState apply_redex(const SystemState& st, const Redex& r) {
  if (r.origin != st.digest()) throw StaleRedex();
  for (size_t c : r.components)
    if (c >= st.components.size()) throw StaleRedex();

  SystemState next;
  next.restricted = st.restricted;
  next.fresh = st.fresh;
  next.next_message = st.next_message;
  std::map<size_t, std::vector<Process>> replaced;
  const Process& p = st.components[r.components.front()];

  auto tag = [&](Label l) {
    l.meta = next.next_message++;
    return l;
  };
  auto push = [&](size_t qidx, Message m) {
    const Process& q = st.components[qidx];
    auto msgs = q->queue;
    msgs.push_back(std::move(m));
    replaced[qidx] = {p_queue(q->chan, q->role, q->peer, std::move(msgs))};
  };
  auto pop = [&](size_t qidx) {
    const Process& q = st.components[qidx];
    std::vector<Message> msgs(q->queue.begin() + 1, q->queue.end());
    replaced[qidx] = {p_queue(q->chan, q->role, q->peer, std::move(msgs))};
  };
  auto head = [&](size_t qidx) -> const Message& {
    const auto& q = st.components[qidx]->queue;
    if (q.empty()) throw StaleRedex();
    return q.front();
  };
  auto set = [&](Process np) { replaced[r.components.front()] = {std::move(np)}; };

  switch (r.rule) {
    case Rule::Init: {
      const std::string s = *r.session;
      ++next.fresh;
      std::vector<Process> parts;
      for (size_t c : r.components) {
        const Process& x = st.components[c];
        parts.push_back(rename(x->cont, x->chan, s));
        replaced[c] = {};
      }
      Role n = p->role;
      for (Role a = 1; a <= n; ++a)
        for (Role b = 1; b <= n; ++b)
          if (a != b) parts.push_back(p_queue(s, a, b, {}));
      next.restricted.push_back(s);
      replaced[r.components.front()] = std::move(parts);
      break;
    }
    case Rule::RSend:
      set(p->cont);
      push(r.components[1], Message::r(*r.value));
      break;
    case Rule::USend:
      set(p->cont);
      push(r.components[1], Message::u(tag(p->label), *r.value));
      break;
    case Rule::RGet:
    case Rule::UGet: {
      Value v = head(r.components[1]).value;
      set(subst_value(p->cont, p->binder, v));
      pop(r.components[1]);
      break;
    }
    case Rule::USkip: set(subst_value(p->cont, p->binder, eval_expr(p->expr))); break;
    case Rule::ML: pop(r.components[0]); break;
    case Rule::RSel:
      set(p->cont);
      push(r.components[1], Message::br(tag(p->label)));
      break;
    case Rule::WSel: {
      set(p->cont);
      Label l = tag(p->label);
      for (size_t k = 1; k < r.components.size(); ++k) push(r.components[k], Message::bw(l));
      break;
    }
    case Rule::RBran:
    case Rule::WBran: {
      const Process* b = find_branch(p->branches, head(r.components[1]).label);
      if (!b) throw StaleRedex();
      set(*b);
      pop(r.components[1]);
      break;
    }
    case Rule::WSkip: {
      const Process* b = find_branch(p->branches, p->dflt);
      if (!b) throw StaleRedex();
      set(*b);
      break;
    }
    case Rule::Crash: set(p_crash()); break;
    case Rule::IfT: set(p->cont); break;
    case Rule::IfF: set(p->alt); break;
    case Rule::Rec: {
      std::map<std::string, Expr> values;
      for (size_t k = 0; k < p->params.size(); ++k) values[p->params[k]] = e_const(eval_expr(p->args[k]));
      Process body = subst_names(p->cont, values);
      set(subst_proc_var(body, p->var, p->params, p->cont));
      break;
    }
    case Rule::Deleg:
      set(p->cont);
      push(r.components[1], Message::deleg(p->dchan, p->drole));
      break;
    case Rule::SRecv: {
      const Message& m = head(r.components[1]);
      Process body = rename(p->cont, p->binder, m.channel);
      set(subst_role(body, m.channel, p->drole, m.role));
      pop(r.components[1]);
      break;
    }
  }

  std::vector<Process> fresh_parts;
  for (size_t i = 0; i < st.components.size(); ++i) {
    auto it = replaced.find(i);
    if (it == replaced.end()) {
      next.components.push_back(st.components[i]);
      next.texts.push_back(st.texts[i]);
    } else {
      for (auto& np : it->second) fresh_parts.push_back(np);
    }
  }
  size_t kept = next.components.size();
  Soup soup{next.restricted, next.components, next.fresh,
            [&] {
              std::set<std::string> names;
              for (auto& c : next.components) {
                auto fn = free_names(c);
                names.insert(fn.begin(), fn.end());
              }
              for (auto& c : fresh_parts) {
                auto fn = free_names(c);
                names.insert(fn.begin(), fn.end());
              }
              return names;
            },
            std::nullopt};
  for (auto& np : fresh_parts) soup.absorb(np);
  for (size_t i = kept; i < next.components.size(); ++i) next.texts.push_back(to_string(next.components[i]));
  sort_state(next);
  return next;
}

}  // namespace ftmpst
