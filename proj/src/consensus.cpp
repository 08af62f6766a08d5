#include "ftmpst/consensus.hpp"

#include "ftmpst/parse.hpp"

#include <algorithm>

namespace ftmpst {

int quorum(int n) { return n / 2; }

namespace {

void require_size(int n) {
  if (n < 2) throw InvalidSize("the rotating coordinator protocol needs at least two roles, got " + std::to_string(n));
}

std::vector<Role> others(int n, Role c) {
  std::vector<Role> out;
  for (Role r = 1; r <= n; ++r)
    if (r != c) out.push_back(r);
  return out;
}

Global round_type(int n, Role c, Global next) {
  auto rest = others(n, c);
  Global g = g_branw(c, rest, {{kZero, g_end()}, {kOne, g_end()}, {kNextRound, std::move(next)}}, kNextRound);
  for (auto it = rest.rbegin(); it != rest.rend(); ++it) g = g_comu(*it, c, kPhase3, Sort::Ack, g);
  for (auto it = rest.rbegin(); it != rest.rend(); ++it) g = g_comu(c, *it, kPhase2, Sort::Bel, g);
  for (auto it = rest.rbegin(); it != rest.rend(); ++it) g = g_comu(*it, c, kPhase1, Sort::Bel, g);
  return g;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

std::string role_list(const std::vector<Role>& rs) {
  std::vector<std::string> xs;
  for (Role r : rs) xs.push_back(std::to_string(r));
  return join(xs, ",");
}

// Tuple with `name<j>` at every position but c, which holds bot.
std::string gathered(int n, Role c, const std::string& name) {
  std::vector<std::string> xs;
  for (Role j = 1; j <= n; ++j) xs.push_back(j == c ? "bot" : name + std::to_string(j));
  return "[" + join(xs, ", ") + "]";
}

// Behaviour of role i in the round coordinated by c; `next` continues with the following round.
std::string round_text(int n, Role i, Role c, const std::string& next) {
  const std::string q = std::to_string(quorum(n));
  const std::string I = std::to_string(i), C = std::to_string(c), N = std::to_string(n);
  if (i != c) {
    return "s[" + I + "," + C + "]!u p1<get(V, " + I + ")> . s[" + I + "," + C + "]?u p2(bot -> x) . " +
           "let V = update(V, " + I + ", x) . s[" + I + "," + C + "]!u p3<x != bot> . s[" + I + "," + C +
           "]?w{Zero: 0, One: 0, default d: " + next + "}";
  }
  auto rest = others(n, c);
  std::string out;
  for (Role j : rest) out += "s[" + C + "," + std::to_string(j) + "]?u p1(bot -> v" + std::to_string(j) + ") . ";
  std::string tail;
  for (Role j : rest) tail += "s[" + C + "," + std::to_string(j) + "]!u p2<get(V, " + std::to_string(j) + ")> . ";
  for (Role j : rest) tail += "s[" + C + "," + std::to_string(j) + "]?u p3(bot -> a" + std::to_string(j) + ") . ";
  const std::string bcast = "s[" + C + ",{" + role_list(rest) + "}]!w ";
  tail += "if count_ack(" + gathered(n, c, "a") + ") >= " + q + " then (if get(V, " + C + ") == 0 then (" + bcast +
          "Zero . 0) else (" + bcast + "One . 0)) else (" + bcast + "d . " + next + ")";
  const std::string beliefs = gathered(n, c, "v");
  out += "if size(" + beliefs + ") >= " + q + " then (let V = vec(" + N + ", best(update(" + beliefs + ", " + C +
         ", get(V, " + C + ")))) . " + tail + ") else (let V = update(vec(" + N + ", bot), " + C + ", get(V, " + C +
         ")) . " + tail + ")";
  return out;
}

std::string role_text(int n, Role i, int belief) {
  std::string body = "X<V>";
  for (Role c = n; c >= 1; --c) body = "(" + round_text(n, i, c, body) + ")";
  std::vector<std::string> init;
  for (Role j = 1; j <= n; ++j) init.push_back(j == i ? std::to_string(belief) : "bot");
  return "mu X(V = [" + join(init, ", ") + "]) . " + body;
}

}  // namespace

Global build_grc(int n) {
  require_size(n);
  Global g = g_var("t");
  for (Role c = n; c >= 1; --c) g = round_type(n, c, g);
  return g_rec("t", g);
}

std::string rc_system_text(int n, const std::map<Role, int>& beliefs, const std::string& shared) {
  require_size(n);
  std::vector<std::string> parts;
  for (Role i = 1; i <= n; ++i) {
    auto b = beliefs.find(i);
    if (b == beliefs.end()) throw InvalidSize("no initial belief for role " + std::to_string(i));
    std::string head = i == n ? "req " + shared + "[" + std::to_string(n) + "](s) . "
                              : "acc " + shared + "[" + std::to_string(i) + "](s) . ";
    parts.push_back(head + role_text(n, i, b->second));
  }
  return join(parts, "\n| ");
}

Process build_rc_system(int n, const std::map<Role, int>& beliefs, const std::string& shared) {
  return parse_process(rc_system_text(n, beliefs, shared));
}

ConsensusVerdict verify_consensus(const Trace& trace, int n, const std::map<Role, int>& beliefs) {
  ConsensusVerdict v;
  std::set<Role> crashed;
  std::set<std::int64_t> broadcasts;  // ids of deciding weak selections
  std::set<std::int64_t> received;    // ids behind decisions taken by receivers
  for (Role r = 1; r <= n; ++r) v.decisions[r] = std::nullopt;
  for (auto& e : trace.events) {
    if (e.rule == Rule::Crash) crashed.insert(e.subject.begin(), e.subject.end());
    if ((e.rule != Rule::WSel && e.rule != Rule::WBran) || !e.label) continue;
    int value;
    if (e.label->base == kZero.base) value = 0;
    else if (e.label->base == kOne.base) value = 1;
    else continue;
    v.decisions[e.subject.at(0)] = value;
    std::int64_t id = e.label->meta.value_or(-1);
    (e.rule == Rule::WSel ? broadcasts : received).insert(id);
  }
  for (Role r = 1; r <= n; ++r)
    if (!crashed.count(r)) v.correct.insert(r);

  v.termination = std::all_of(v.correct.begin(), v.correct.end(), [&](Role r) { return v.decisions[r].has_value(); });
  std::set<int> values;
  for (auto& [r, d] : v.decisions)
    if (d) values.insert(*d);
  v.agreement = values.size() <= 1;
  v.validity = std::all_of(values.begin(), values.end(), [&](int d) {
    return std::any_of(beliefs.begin(), beliefs.end(), [&](const auto& b) { return b.second == d; });
  });
  v.single_origin = broadcasts.size() <= 1 &&
                    std::all_of(received.begin(), received.end(), [&](std::int64_t id) { return broadcasts.count(id); });
  return v;
}

std::string to_string(const ConsensusVerdict& v) {
  std::string s = "termination=" + std::string(v.termination ? "true" : "false") +
                  " agreement=" + (v.agreement ? "true" : "false") + " validity=" + (v.validity ? "true" : "false") +
                  " single-origin=" + (v.single_origin ? "true" : "false") + " decisions={";
  bool first = true;
  for (auto& [r, d] : v.decisions) {
    s += (first ? "" : ", ") + std::to_string(r) + ":" + (d ? std::to_string(*d) : "-");
    first = false;
  }
  return s + "}";
}

}  // namespace ftmpst
