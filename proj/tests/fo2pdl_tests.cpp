#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>

#include "msc/fixtures.hpp"
#include "msc/fo_to_pdl.hpp"
#include "msc/randgen.hpp"

using namespace msc;

namespace {

const Signature kSig{{{"p1", "p2", "p3"}}, {{"a", "b"}}};

Msc demo24() { return parse_msc(fixtures::demo24_msc_text()); }

FoPtr latest(int p, const std::string& x, const std::string& y) {
  return fo_and_all({fo_le(x, y), fo_proc(p, x),
                     fo_forall("z", fo_implies(fo_and(fo_le("z", y), fo_proc(p, "z")),
                                               fo_le("z", x)))});
}

// Differential check of a translated formula against direct FO evaluation
// at every interpretation of its free variables.
void check_equivalent(const Msc& m, const FoPtr& f, const GuardedDnf& d) {
  FoEvalContext fo_ctx(m);
  PdlEvalContext pdl_ctx(m);
  int nfree = (int)f->free_sorted.size();
  REQUIRE(nfree <= 2);
  std::vector<std::string> free_in_order;
  for (auto& v : d.vars) {
    if (std::binary_search(f->free_sorted.begin(), f->free_sorted.end(), v))
      free_in_order.push_back(v);
    if ((int)free_in_order.size() == nfree) break;
  }
  REQUIRE((int)free_in_order.size() == nfree);

  int n = m.event_count();
  std::vector<EventId> binding(d.vars.size(), 0);
  if (nfree == 1) {
    for (int e = 0; e < n; ++e) {
      Interpretation nu;
      nu.bind[free_in_order[0]] = e;
      binding[0] = e;
      CHECK(fo_ctx.eval(f, nu) == eval_dnf(pdl_ctx, d, binding));
    }
  } else {
    for (int e = 0; e < n; ++e)
      for (int g = 0; g < n; ++g) {
        Interpretation nu;
        nu.bind[free_in_order[0]] = e;
        nu.bind[free_in_order[1]] = g;
        binding[0] = e;
        binding[1] = g;
        CHECK(fo_ctx.eval(f, nu) == eval_dnf(pdl_ctx, d, binding));
      }
  }
}

}  // namespace

TEST_CASE("atomic translations") {
  std::vector<std::string> vars{"x", "y"};

  GuardedDnf eq = translate_atomic(fo_eq("x", "y"), false, vars, kSig);
  REQUIRE(eq.conjuncts.size() == 1);
  CHECK(eq.conjuncts[0][0].path == path_test(ev_true()));

  GuardedDnf msg = translate_atomic(fo_msg("x", "y"), false, vars, kSig);
  CHECK(msg.conjuncts.size() == 6);  // one per channel

  Signature two{{{"p1", "p2"}}, {{"a"}}};
  GuardedDnf msg2 = translate_atomic(fo_msg("x", "y"), false, vars, two);
  CHECK(msg2.conjuncts.size() == 2);

  Signature one{{{"p1"}}, {{"a"}}};
  GuardedDnf le1 = translate_atomic(fo_le("x", "y"), false, vars, one);
  // |P| = 1: x <= y is the same-process reflexive-or-strict move.
  REQUIRE(le1.conjuncts.size() == 2);
  Rng rng(7);
  for (int i = 0; i < 40; ++i) {
    Msc m = random_msc(rng, {.processes = 1, .max_events = 6});
    PdlEvalContext ctx(m);
    EventRel hb = happened_before(m);
    EventRel got(m.event_count());
    for (auto& c : le1.conjuncts) got = got.unite(ctx.path(c[0].path));
    CHECK(got == hb);
  }
}

TEST_CASE("le translation matches happened-before on random MSCs") {
  std::vector<std::string> vars{"x", "y"};
  GuardedDnf le = translate_atomic(fo_le("x", "y"), false, vars, kSig);
  GuardedDnf nle = translate_atomic(fo_le("x", "y"), true, vars, kSig);
  Rng rng(8);
  for (int i = 0; i < 60; ++i) {
    Msc m = random_msc(rng, {.max_events = 9});
    PdlEvalContext ctx(m);
    EventRel hb = happened_before(m);
    for (int e = 0; e < m.event_count(); ++e)
      for (int f = 0; f < m.event_count(); ++f) {
        CHECK(eval_dnf(ctx, le, {e, f}) == hb.contains(e, f));
        CHECK(eval_dnf(ctx, nle, {e, f}) == !hb.contains(e, f));
      }
  }
}

TEST_CASE("negated atom translations match complements") {
  std::vector<std::string> vars{"x", "y"};
  Rng rng(9);
  std::vector<std::pair<FoPtr, std::function<bool(const Msc&, int, int)>>> cases = {
      {fo_msg("x", "y"),
       [](const Msc& m, int e, int f) { return !(m.is_send(e) && m.partner(e) == f); }},
      {fo_edge("x", "y"), [](const Msc& m, int e, int f) { return m.proc_next(e) != f; }},
      {fo_eq("x", "y"), [](const Msc&, int e, int f) { return e != f; }},
  };
  for (int i = 0; i < 50; ++i) {
    Msc m = random_msc(rng, {.max_events = 8});
    PdlEvalContext ctx(m);
    for (auto& [atom, expect] : cases) {
      GuardedDnf d = translate_atomic(atom, true, vars, kSig);
      for (int e = 0; e < m.event_count(); ++e)
        for (int f = 0; f < m.event_count(); ++f)
          CHECK(eval_dnf(ctx, d, {e, f}) == expect(m, e, f));
    }
  }
}

TEST_CASE("eliminate_exists: nonemptiness of a process") {
  // exists x . p(x), with y kept free as an anchor.
  FoPtr f = fo_exists("x", fo_and(fo_proc(0, "x"), fo_eq("y", "y")));
  GuardedDnf d = translate_formula(f, kSig);
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    Msc r = random_msc(rng, {.max_events = 6});
    PdlEvalContext ctx(r);
    bool has_p1 = !r.proc_events(0).empty();
    for (int e = 0; e < r.event_count(); ++e) CHECK(eval_dnf(ctx, d, {e}) == has_p1);
  }
}

TEST_CASE("eliminate_exists: image nonemptiness") {
  FoPtr f = fo_exists("x", fo_edge("y", "x"));
  GuardedDnf d = translate_formula(f, kSig);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Msc m = random_msc(rng, {.max_events = 7});
    PdlEvalContext ctx(m);
    for (int e = 0; e < m.event_count(); ++e)
      CHECK(eval_dnf(ctx, d, {e}) == (m.proc_next(e) >= 0));
  }
}

TEST_CASE("inner step of latest: exists z (z <= y and p(z))") {
  FoPtr f = fo_exists("z", fo_and(fo_le("z", "y"), fo_proc(0, "z")));
  GuardedDnf d = translate_formula(f, kSig);
  check_equivalent(parse_msc("processes: p1 p2 p3\nlabels: a b\n"
                             "events p1: u0:a u1:b\nevents p2: v0:a\nevents p3: w0:b\n"
                             "msg u1 v0\n"),
                   f, d);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, {.max_events = 7});
    check_equivalent(m, f, d);
  }
}

TEST_CASE("translate_formula keeps atomic tables for quantifier-free input") {
  FoPtr f = fo_msg("x", "y");
  GuardedDnf d = translate_formula(f, kSig);
  CHECK(d.conjuncts.size() == 6);
  for (auto& c : d.conjuncts) {
    REQUIRE(c.size() == 1);
    CHECK(c[0].path->kind == PdlPathKind::Msg);
  }
}

TEST_CASE("negation of a process edge uses the full decomposition") {
  FoPtr f = fo_not(fo_edge("x", "y"));
  GuardedDnf d = translate_formula(f, kSig);
  CHECK(d.conjuncts.size() == 12);  // |P|^2 + 3
  Rng rng(13);
  for (int i = 0; i < 60; ++i) {
    Msc m = random_msc(rng, {.max_events = 8});
    check_equivalent(m, f, d);
  }
}

TEST_CASE("latest_p translates and matches on the demo MSC at all pairs") {
  Msc m = demo24();
  const Signature& sig = m.signature();
  FoPtr f = latest(0, "x", "y");
  GuardedDnf d = translate_formula(f, sig);
  check_equivalent(m, f, d);
}

TEST_CASE("latest_p differential on random MSCs") {
  FoPtr f = latest(0, "x", "y");
  GuardedDnf d = translate_formula(f, kSig);
  Rng rng(14);
  for (int i = 0; i < 60; ++i) {
    Msc m = random_msc(rng, {.max_events = 7});
    check_equivalent(m, f, d);
  }
}

TEST_CASE("output stays in the Loop fragment") {
  for (FoPtr f : {latest(0, "x", "y"), fo_exists("z", fo_and(fo_le("z", "y"), fo_le("x", "z"))),
                  fo_not(fo_le("x", "y"))}) {
    GuardedDnf d = translate_formula(f, kSig);
    for (auto& c : d.conjuncts)
      for (auto& a : c)
        CHECK((a.path->frag & (kFragUnion | kFragInter | kFragComplement)) == 0);
  }
}

TEST_CASE("translate_to_event: one free variable becomes loops") {
  FoPtr f = fo_exists("y", fo_msg("x", "y"));  // x is a send
  EvPtr phi = translate_to_event(f, kSig);
  CHECK((phi->frag & (kFragUnion | kFragInter | kFragComplement)) == 0);
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, {.max_events = 8});
    FoEvalContext fo_ctx(m);
    EventSet got = eval_event(m, phi);
    for (int e = 0; e < m.event_count(); ++e) {
      Interpretation nu;
      nu.bind["x"] = e;
      CHECK(got.test(e) == fo_ctx.eval(f, nu));
    }
  }
}

TEST_CASE("translate_to_sentence: simple sentences") {
  FoPtr f = fo_exists("x", fo_proc(0, "x"));
  SentPtr s = translate_to_sentence(f, kSig);
  Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, {.max_events = 6});
    CHECK(eval_sentence(m, s) == eval_fo(m, f, {}));
  }
}

TEST_CASE("translate_to_sentence: quantifier alternation") {
  FoPtr f = fo_forall(
      "x", fo_implies(fo_proc(0, "x"), fo_exists("y", fo_and(fo_le("x", "y"), fo_label(1, "y")))));
  SentPtr s = translate_to_sentence(f, kSig);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, {.max_events = 6});
    CHECK(eval_sentence(m, s) == eval_fo(m, f, {}));
  }
}

TEST_CASE("translate_to_path: message atom and le") {
  Rng rng(18);
  {
    FoPtr f = fo_msg("x", "y");
    PathUnion u = translate_to_path(f, kSig);
    for (int i = 0; i < 50; ++i) {
      Msc m = random_msc(rng, {.max_events = 7});
      PdlEvalContext ctx(m);
      EventRel got = eval_path_union(ctx, u);
      for (int e = 0; e < m.event_count(); ++e)
        for (int g = 0; g < m.event_count(); ++g)
          CHECK(got.contains(e, g) == (m.is_send(e) && m.partner(e) == g));
    }
  }
  {
    FoPtr f = fo_le("x", "y");
    PathUnion u = translate_to_path(f, kSig);
    for (int i = 0; i < 50; ++i) {
      Msc m = random_msc(rng, {.max_events = 7});
      PdlEvalContext ctx(m);
      CHECK(eval_path_union(ctx, u) == happened_before(m));
    }
  }
}

TEST_CASE("translate_to_path: latest as a relation") {
  FoPtr f = latest(0, "x", "y");
  PathUnion u = translate_to_path(f, kSig);
  for (auto& term : u.terms)
    for (auto& path : term)
      CHECK((path->frag & (kFragUnion | kFragInter | kFragComplement)) == 0);
  Rng rng(19);
  for (int i = 0; i < 25; ++i) {
    Msc m = random_msc(rng, {.max_events = 6});
    PdlEvalContext ctx(m);
    FoEvalContext fo_ctx(m);
    EventRel got = eval_path_union(ctx, u);
    for (int e = 0; e < m.event_count(); ++e)
      for (int g = 0; g < m.event_count(); ++g) {
        Interpretation nu;
        nu.bind["x"] = e;
        nu.bind["y"] = g;
        CHECK(got.contains(e, g) == fo_ctx.eval(f, nu));
      }
  }
}

TEST_CASE("resource limit aborts with a structured error") {
  TranslateLimits tiny;
  tiny.max_atoms = 10;
  CHECK_THROWS_AS(translate_formula(latest(0, "x", "y"), kSig, tiny), ResourceLimitError);
}

TEST_CASE("three-variable property via pdl_to_fo") {
  FoPtr f = fo_exists("x", fo_and(fo_proc(0, "x"), fo_exists("y", fo_msg("x", "y"))));
  SentPtr s = translate_to_sentence(f, kSig);
  FoPtr back = pdl_to_fo(s, kSig.processes.size());
  CHECK(variable_count(back) <= 3);
}
