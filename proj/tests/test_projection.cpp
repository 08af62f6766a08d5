#include "support.hpp"

#include "ftmpst/consensus.hpp"
#include "ftmpst/print.hpp"
#include "ftmpst/projection.hpp"
#include "ftmpst/syntax.hpp"
#include "ftmpst/wellformed.hpp"

#include <doctest.h>

using namespace ftmpst;
using testing::Gen;

TEST_CASE("dice projections match the golden files") {
  for (auto* name : {"dice", "dice_w"}) {
    auto all = project_all(testing::data_global(std::string(name) + ".gt"));
    REQUIRE(all.size() == 3);
    for (Role r = 1; r <= 3; ++r) {
      Local golden = testing::data_local("golden/" + std::string(name) + "." + std::to_string(r) + ".lt");
      INFO(name, " role ", r, ": ", to_string(all[r]));
      CHECK(alpha_equal(all[r], golden));
    }
  }
}

TEST_CASE("informing a single player is not projectable on the other") {
  Global g = testing::data_global("dice_single_inform.gt");
  CHECK_NOTHROW(project(g, 1));
  try {
    project(g, 2);
    FAIL("projected");
  } catch (const NotProjectable& e) {
    CHECK(e.role == 2);
    CHECK(e.cause == "merge-failure");
  }
}

TEST_CASE("informing the players one after the other needs t merged with end") {
  Global g = testing::data_global("dice_subsequent_inform.gt");
  CHECK(check_global_wf(g).ok);
  CHECK_NOTHROW(project(g, 3));
  CHECK_THROWS_AS(project(g, 2), NotProjectable);
  try {
    project(g, 1);
    FAIL("projected");
  } catch (const NotProjectable& e) {
    CHECK(e.role == 1);
    CHECK(e.cause == "merge-failure");
  }
}

TEST_CASE("end projects to nothing") {
  CHECK(project_all(g_end()).empty());
}

TEST_CASE("parallel branches project to end for absent roles") {
  Global g = parse_global("1 ->r 2 : <nat> . end | 3 ->r 4 : <nat> . end");
  CHECK(equal(project(g, 3), parse_local("[4]!r<nat> . end")));
  CHECK(equal(project(g, 1), parse_local("[2]!r<nat> . end")));
}

TEST_CASE("a recursion that never mentions a role projects to end") {
  Global g = parse_global("1 ->r 3 : <nat> . rec t . 1 ->r 2 : <nat> . t");
  CHECK(equal(project(g, 3), parse_local("[1]?r<nat> . end")));
}

TEST_CASE("merge of reliable branchings takes the union") {
  Local a = parse_local("[3]?r{x: end}"), b = parse_local("[3]?r{y: end}");
  CHECK(equivalent(merge(a, b), parse_local("[3]?r{x: end, y: end}")));
  CHECK_THROWS_AS(merge(parse_local("[3]?r{x: end}"), parse_local("[3]?r{x: [3]?r<nat> . end}")), MergeUndefined);
  CHECK_THROWS_AS(merge(parse_local("[3]!r<nat> . end"), parse_local("[3]!r<bool> . end")), MergeUndefined);
}

TEST_CASE("merge of weak branchings needs the same default") {
  Local a = parse_local("[3]?w{p: end, default q: end}");
  Local b = parse_local("[3]?w{r: end, default q: end}");
  CHECK(equivalent(merge(a, b), parse_local("[3]?w{p: end, r: end, default q: end}")));
  CHECK_THROWS_AS(merge(a, parse_local("[3]?w{q: end, default p: end}")), MergeUndefined);
}

TEST_CASE("merge is commutative and idempotent where defined") {
  Gen g(31);
  int defined = 0;
  for (int i = 0; i < 500; ++i) {
    Local a = g.local(4);
    Local b = g.coin() ? g.vary(a) : g.local(4);
    CHECK(equivalent(merge(a, a), a));
    std::optional<Local> ab, ba;
    try {
      ab = merge(a, b);
    } catch (const MergeUndefined&) {
    }
    try {
      ba = merge(b, a);
    } catch (const MergeUndefined&) {
    }
    INFO(to_string(a), " and ", to_string(b));
    REQUIRE(ab.has_value() == ba.has_value());
    if (ab) {
      CHECK(equivalent(*ab, *ba));
      ++defined;
    }
  }
  CHECK(defined > 100);
}

namespace {
void collect_label_sorts(const Local& l, std::map<std::string, std::set<Sort>>& out) {
  if (!l) return;
  if (l->kind == LKind::SendU || l->kind == LKind::GetU) out[l->label.base].insert(l->sort);
  for (auto& [lab, c] : l->branches) collect_label_sorts(c, out);
  collect_label_sorts(l->cont, out);
}
}  // namespace

TEST_CASE("projections keep one sort per unreliable label") {
  Gen g(32);
  for (int i = 0; i < 300; ++i) {
    Global t = g.global(6);
    if (!check_global_wf(t).ok) continue;
    GlobalEnv gamma;
    try {
      gamma.add_shared("a", t);
    } catch (const LinearityViolation&) {
      continue;  // the global type itself uses a label at two sorts
    }
    std::map<std::string, std::set<Sort>> sorts;
    try {
      for (auto& [r, l] : project_all(t)) collect_label_sorts(l, sorts);
    } catch (const NotProjectable&) {
      continue;
    }
    for (auto& [lab, ss] : sorts) {
      CHECK(ss.size() == 1);
      CHECK(gamma.label_sort(Label(lab)) == *ss.begin());
    }
  }
}

TEST_CASE("the rotating coordinator type is projectable for small sizes") {
  for (int n = 2; n <= 6; ++n) {
    Global g = build_grc(n);
    INFO("n = ", n);
    CHECK(check_global_wf(g).ok);
    auto all = project_all(g);
    CHECK(all.size() == static_cast<std::size_t>(n));
    for (auto& [r, l] : all) CHECK(check_local_wf(l).ok);
  }
}
