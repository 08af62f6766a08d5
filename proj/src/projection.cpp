#include "ftmpst/projection.hpp"

#include "ftmpst/print.hpp"
#include "ftmpst/syntax.hpp"

#include <algorithm>

namespace ftmpst {

MergeUndefined::MergeUndefined(std::string p, Local l, Local r, std::string why)
    : std::runtime_error("cannot merge " + to_string(l) + " with " + to_string(r) + " at " + (p.empty() ? "/" : p) +
                         ": " + why),
      path(p.empty() ? "/" : std::move(p)),
      left(std::move(l)),
      right(std::move(r)),
      reason(std::move(why)) {}

NotProjectable::NotProjectable(Role r, std::string p, std::string c, std::string d)
    : std::runtime_error("not projectable on role " + std::to_string(r) + " at " + (p.empty() ? "/" : p) + " (" + c +
                         "): " + d),
      role(r),
      path(p.empty() ? "/" : std::move(p)),
      cause(std::move(c)),
      detail(std::move(d)) {}

namespace {

Local merge_at(const Local& a, const Local& b, const std::string& path);

Branches<Local> merge_branches(const Branches<Local>& xs, const Branches<Local>& ys, const std::string& path) {
  Branches<Local> out = xs;
  for (auto& [l, t] : ys) {
    bool found = false;
    for (auto& [k, u] : out) {
      if (labels_compatible(k, l)) {
        u = merge_at(u, t, path + "/branch " + to_string(l));
        found = true;
        break;
      }
    }
    if (!found) out.emplace_back(l, t);
  }
  return out;
}

Local merge_at(const Local& a, const Local& b, const std::string& path) {
  if (equal(a, b)) return a;
  if (a->kind == LKind::BranR && b->kind == LKind::BranR && a->peer == b->peer)
    return l_branr(a->peer, merge_branches(a->branches, b->branches, path));
  if (a->kind == LKind::BranW && b->kind == LKind::BranW && a->peer == b->peer) {
    if (!labels_compatible(a->dflt, b->dflt))
      throw MergeUndefined(path, a, b, "default branches " + to_string(a->dflt) + " and " + to_string(b->dflt) + " differ");
    return l_branw(a->peer, merge_branches(a->branches, b->branches, path), a->dflt);
  }
  std::string why = "types differ outside of branching";
  if (a->kind == b->kind && (a->kind == LKind::BranR || a->kind == LKind::BranW)) why = "branching from different roles";
  throw MergeUndefined(path, a, b, why);
}

struct Projector {
  Role p;

  Local go(const Global& g, const std::string& path) {
    switch (g->kind) {
      case GKind::ComR:
      case GKind::ComU: {
        Local cont = go(g->cont, path + "/cont");
        bool u = g->kind == GKind::ComU;
        if (p == g->from) return u ? l_sendu(g->to, g->label, g->sort, cont) : l_sendr(g->to, g->sort, cont);
        if (p == g->to) return u ? l_getu(g->from, g->label, g->sort, cont) : l_getr(g->from, g->sort, cont);
        return cont;
      }
      case GKind::Deleg: {
        Local cont = go(g->cont, path + "/cont");
        if (p == g->from) return l_delegout(g->to, g->channel, g->drole, g->carried, cont);
        if (p == g->to) return l_delegin(g->from, g->channel, g->drole, g->carried, cont);
        return cont;
      }
      case GKind::BranR:
      case GKind::BranW: {
        Branches<Local> bs;
        for (auto& [l, b] : g->branches) bs.emplace_back(l, go(b, path + "/branch " + to_string(l)));
        bool weak = g->kind == GKind::BranW;
        if (p == g->from) return weak ? l_selw(g->receivers, bs) : l_selr(g->to, bs);
        bool informed = weak ? std::find(g->receivers.begin(), g->receivers.end(), p) != g->receivers.end()
                             : p == g->to;
        if (informed) return weak ? l_branw(g->from, bs, g->dflt) : l_branr(g->from, bs);
        Local acc = bs.front().second;
        try {
          for (size_t i = 1; i < bs.size(); ++i) acc = merge_at(acc, bs[i].second, path);
        } catch (const MergeUndefined& e) {
          throw NotProjectable(p, e.path, "merge-failure", e.what());
        }
        return acc;
      }
      case GKind::Par: {
        bool left = roles_of(g->cont).count(p) > 0;
        bool right = roles_of(g->right).count(p) > 0;
        if (left && right)
          throw NotProjectable(p, path, "par-both-sides", "role " + std::to_string(p) + " occurs on both sides");
        if (left) return go(g->cont, path + "/left");
        if (right) return go(g->right, path + "/right");
        return l_end();
      }
      case GKind::Rec: {
        if (!free_type_vars(g->cont).count(g->var)) return go(g->cont, path + "/rec " + g->var);
        if (roles_of(g->cont).count(p)) return l_rec(g->var, go(g->cont, path + "/rec " + g->var));
        return l_end();
      }
      case GKind::Var: return l_var(g->var);
      case GKind::End: return l_end();
    }
    return l_end();
  }
};

}  // namespace

Local merge(const Local& a, const Local& b) { return merge_at(a, b, ""); }

Local project(const Global& g, Role p) { return Projector{p}.go(g, ""); }

std::map<Role, Local> project_all(const Global& g) {
  std::map<Role, Local> out;
  for (Role r : roles_of(g)) out[r] = project(g, r);
  return out;
}

}  // namespace ftmpst
