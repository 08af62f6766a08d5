#include "ftmpst/wellformed.hpp"

#include "ftmpst/syntax.hpp"

#include <set>

namespace ftmpst {

void WfReport::add(std::string path, int condition, std::string message) {
  ok = false;
  violations.push_back({path.empty() ? "/" : std::move(path), condition, std::move(message)});
}

std::string to_string(const WfReport& r) {
  if (r.ok) return "well-formed";
  std::string s;
  for (auto& v : r.violations)
    s += "condition " + std::to_string(v.condition) + " at " + v.path + ": " + v.message + "\n";
  return s;
}

namespace {

template <class T>
void check_labels(const Branches<T>& bs, const std::string& path, int cond, WfReport& rep) {
  for (size_t i = 0; i < bs.size(); ++i)
    for (size_t j = i + 1; j < bs.size(); ++j)
      if (labels_compatible(bs[i].first, bs[j].first))
        rep.add(path, cond, "labels " + to_string(bs[i].first) + " and " + to_string(bs[j].first) + " coincide");
}

template <class T>
void check_default(const Branches<T>& bs, const Label& d, const std::string& path, int cond, WfReport& rep) {
  for (auto& [l, b] : bs)
    if (labels_compatible(l, d)) return;
  rep.add(path, cond, "default label " + to_string(d) + " is not among the branches");
}

struct GlobalChecker {
  WfReport rep;

  // `bound`: recursion variables in scope; `open`: those not yet guarded by a prefix.
  void go(const Global& g, const std::string& path, std::set<std::string> bound, std::set<std::string> open) {
    auto guarded = [&](const Global& next, const std::string& step) { go(next, path + "/" + step, bound, {}); };
    switch (g->kind) {
      case GKind::ComR:
      case GKind::ComU:
      case GKind::Deleg:
        if (g->from == g->to) rep.add(path, 3, "role " + std::to_string(g->from) + " communicates with itself");
        guarded(g->cont, "cont");
        return;
      case GKind::BranR:
        if (g->from == g->to) rep.add(path, 3, "role " + std::to_string(g->from) + " selects towards itself");
        check_labels(g->branches, path, 4, rep);
        for (auto& [l, b] : g->branches) guarded(b, "branch " + to_string(l));
        return;
      case GKind::BranW: {
        std::set<Role> seen;
        for (Role r : g->receivers) {
          if (r == g->from) rep.add(path, 4, "sender " + std::to_string(r) + " is among its receivers");
          if (!seen.insert(r).second) rep.add(path, 4, "receiver " + std::to_string(r) + " listed twice");
        }
        if (g->receivers.empty()) rep.add(path, 4, "weak branching without receivers");
        check_default(g->branches, g->dflt, path, 4, rep);
        check_labels(g->branches, path, 4, rep);
        for (auto& [l, b] : g->branches) guarded(b, "branch " + to_string(l));
        return;
      }
      case GKind::Par: {
        auto left = roles_of(g->cont);
        auto right = roles_of(g->right);
        for (Role r : left)
          if (right.count(r)) rep.add(path, 5, "role " + std::to_string(r) + " occurs on both sides of |");
        go(g->cont, path + "/left", bound, open);
        go(g->right, path + "/right", bound, open);
        return;
      }
      case GKind::Rec:
        bound.insert(g->var);
        open.insert(g->var);
        go(g->cont, path + "/rec " + g->var, bound, open);
        return;
      case GKind::Var:
        if (!bound.count(g->var)) rep.add(path, 1, "free type variable " + g->var);
        else if (open.count(g->var)) rep.add(path, 1, "unguarded type variable " + g->var);
        return;
      case GKind::End: return;
    }
  }
};

struct LocalChecker {
  WfReport rep;

  void go(const Local& l, const std::string& path, std::set<std::string> bound, std::set<std::string> open) {
    auto guarded = [&](const Local& next, const std::string& step) { go(next, path + "/" + step, bound, {}); };
    switch (l->kind) {
      case LKind::Rec:
        bound.insert(l->var);
        open.insert(l->var);
        go(l->cont, path + "/rec " + l->var, bound, open);
        return;
      case LKind::Var:
        if (!bound.count(l->var)) rep.add(path, 1, "free type variable " + l->var);
        else if (open.count(l->var)) rep.add(path, 1, "unguarded type variable " + l->var);
        return;
      case LKind::End: return;
      case LKind::BranW: check_default(l->branches, l->dflt, path, 2, rep); [[fallthrough]];
      case LKind::SelR:
      case LKind::BranR:
      case LKind::SelW:
        check_labels(l->branches, path, 2, rep);
        for (auto& [x, b] : l->branches) guarded(b, "branch " + to_string(x));
        return;
      case LKind::DelegOut:
      case LKind::DelegIn: {
        LocalChecker inner;
        inner.go(l->carried, path + "/carried", {}, {});
        for (auto& v : inner.rep.violations) rep.add(v.path, v.condition, v.message);
        guarded(l->cont, "cont");
        return;
      }
      default: guarded(l->cont, "cont"); return;
    }
  }
};

}  // namespace

WfReport check_global_wf(const Global& g) {
  GlobalChecker c;
  c.go(g, "", {}, {});
  auto roles = roles_of(g);
  if (!roles.empty()) {
    std::string missing;
    Role top = *roles.rbegin();
    for (Role r = 1; r <= top; ++r)
      if (!roles.count(r)) missing += (missing.empty() ? "" : ", ") + std::to_string(r);
    if (!missing.empty()) c.rep.add("/", 2, "roles are not 1.." + std::to_string(top) + "; missing " + missing);
  }
  return c.rep;
}

WfReport check_local_wf(const Local& l) {
  LocalChecker c;
  c.go(l, "", {}, {});
  return c.rep;
}

}  // namespace ftmpst
