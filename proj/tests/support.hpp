#pragma once

#include "ftmpst/ast.hpp"
#include "ftmpst/parse.hpp"
#include "ftmpst/semantics.hpp"
#include "ftmpst/typesys.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing {

using namespace ftmpst;

inline std::string slurp(const std::string& name) {
  std::ifstream in(std::string(FTMPST_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing data file " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Global data_global(const std::string& name) { return parse_global(slurp(name)); }
inline Local data_local(const std::string& name) { return parse_local(slurp(name)); }
inline Process data_process(const std::string& name) { return parse_process(slurp(name)); }

inline GlobalEnv env_with(const std::string& gt, const std::string& shared = "a") {
  GlobalEnv g;
  g.add_shared(shared, data_global(gt));
  return g;
}

// Receivers take any head message of the expected sender, whatever its label or kind.
inline std::vector<Redex> label_blind_enumerator(const SystemState& st, const FailureOracle& o) {
  auto rs = enabled_redexes(st, o);
  for (std::size_t i = 0; i < st.components.size(); ++i) {
    const auto& p = st.components[i];
    if (p->kind != PKind::GetU) continue;
    for (std::size_t j = 0; j < st.components.size(); ++j) {
      const auto& q = st.components[j];
      if (q->kind != PKind::Queue || q->chan != p->chan || q->role != p->peer || q->peer != p->role ||
          q->queue.empty() || q->queue.front().label.base == p->label.base)
        continue;
      Redex r;
      r.rule = Rule::UGet;
      r.components = {i, j};
      r.session = p->chan;
      r.roles = {p->role, p->peer};
      r.label = q->queue.front().label;
      r.value = q->queue.front().value;
      r.origin = st.digest();
      rs.push_back(r);
    }
  }
  return rs;
}

// Random generators for property tests. Roles are drawn from 1..3.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  bool coin() { return pick(2) == 0; }

  std::pair<Role, Role> pair() {
    Role a = 1 + pick(3), b = 1 + pick(2);
    if (b >= a) ++b;
    return {a, b};
  }
  Label label() { return Label(std::string(1, static_cast<char>('a' + pick(4)))); }
  Sort sort() { return pick(3) == 0 ? Sort::Bool : Sort::Nat; }

  Global global(int depth, bool in_rec = false, bool guarded = false) {
    if (depth == 0) return in_rec && guarded && coin() ? g_var("t") : g_end();
    auto [from, to] = pair();
    switch (pick(6)) {
      case 0: return g_comr(from, to, sort(), global(depth - 1, in_rec, true));
      case 1: return g_comu(from, to, unreliable_label(), Sort::Nat, global(depth - 1, in_rec, true));
      case 2: return g_branr(from, to, branches<Global>([&] { return global(depth - 1, in_rec, true); }));
      case 3: {
        auto bs = branches<Global>([&] { return global(depth - 1, in_rec, true); });
        return g_branw(from, {to}, bs, bs.back().first);
      }
      case 4:
        if (!in_rec) return g_rec("t", global(depth - 1, true, false));
        [[fallthrough]];
      default: return global(depth - 1, in_rec, guarded);
    }
  }

  Local local(int depth) {
    if (depth == 0) return coin() ? l_end() : l_var("t");
    Role peer = 1 + pick(3);
    switch (pick(6)) {
      case 0: return l_sendr(peer, sort(), local(depth - 1));
      case 1: return l_getr(peer, sort(), local(depth - 1));
      case 2: return l_getu(peer, unreliable_label(), Sort::Nat, local(depth - 1));
      case 3: return l_branr(peer, branches<Local>([&] { return local(depth - 1); }));
      case 4: {
        auto bs = branches<Local>([&] { return local(depth - 1); });
        return l_branw(peer, bs, bs.back().first);
      }
      default: return l_rec("t", local(depth - 1));
    }
  }

  // A variant of l that differs only in which branches reliable receivers offer.
  Local vary(const Local& l) {
    switch (l->kind) {
      case LKind::BranR: {
        Branches<Local> bs;
        for (auto& [lab, c] : l->branches)
          if (coin() || bs.empty()) bs.emplace_back(lab, vary(c));
        if (coin()) {
          Label extra = label();
          bool fresh = std::none_of(bs.begin(), bs.end(), [&](auto& b) { return labels_compatible(b.first, extra); });
          if (fresh) bs.emplace_back(extra, local(1));
        }
        return l_branr(l->peer, bs);
      }
      case LKind::SendR: return l_sendr(l->peer, l->sort, vary(l->cont));
      case LKind::GetR: return l_getr(l->peer, l->sort, vary(l->cont));
      case LKind::GetU: return l_getu(l->peer, l->label, l->sort, vary(l->cont));
      case LKind::Rec: return l_rec(l->var, vary(l->cont));
      default: return l;
    }
  }

  Expr expr(int depth) {
    if (depth == 0) {
      switch (pick(4)) {
        case 0: return e_nat(pick(30));
        case 1: return e_bool(coin());
        case 2: return e_bot();
        default: return e_name(std::string(1, static_cast<char>('x' + pick(3))));
      }
    }
    switch (pick(5)) {
      case 0: return e_not(expr(depth - 1));
      case 1: return e_bin(static_cast<BinOp>(pick(13)), expr(depth - 1), expr(depth - 1));
      case 2: return e_tuple({expr(depth - 1), expr(depth - 1)});
      case 3: return e_call("roll", {expr(depth - 1)});
      default: return expr(0);
    }
  }

  Process process(int depth) {
    if (depth == 0) return coin() ? p_end() : p_crash();
    auto [r1, r2] = pair();
    std::string s = coin() ? "s" : "t";
    switch (pick(11)) {
      case 0: return p_sendr(s, r1, r2, expr(2), process(depth - 1));
      case 1: return p_getr(s, r1, r2, "x", process(depth - 1));
      case 2: return p_sendu(s, r1, r2, unreliable_label(), expr(2), process(depth - 1));
      case 3: return p_getu(s, r1, r2, unreliable_label(), expr(1), "y", process(depth - 1));
      case 4: return p_selr(s, r1, r2, label(), process(depth - 1));
      case 5: return p_branr(s, r1, r2, branches<Process>([&] { return process(depth - 1); }));
      case 6: {
        auto bs = branches<Process>([&] { return process(depth - 1); });
        return p_branw(s, r1, r2, bs, bs.front().first);
      }
      case 7: return p_if(expr(2), process(depth - 1), process(depth - 1));
      case 8: return p_par(process(depth - 1), process(depth - 1));
      case 9: return p_new("z", process(depth - 1));
      default: return p_acc("a", r1, "s", process(depth - 1));
    }
  }

 private:
  Label unreliable_label() { return Label(std::string("u") + static_cast<char>('a' + pick(3))); }

  template <class T, class F>
  Branches<T> branches(F&& make) {
    Branches<T> bs;
    int n = 1 + pick(3);
    for (int i = 0; i < n; ++i) {
      Label l = label();
      bool fresh = std::none_of(bs.begin(), bs.end(), [&](auto& b) { return labels_compatible(b.first, l); });
      if (fresh) bs.emplace_back(l, make());
    }
    return bs;
  }

  std::mt19937_64 rng_;
};

}  // namespace testing
