#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msc/fixtures.hpp"
#include "msc/pdl.hpp"
#include "msc/randgen.hpp"

using namespace msc;

namespace {

Msc demo24() { return parse_msc(fixtures::demo24_msc_text()); }

// Example loop path on the demo MSC: receive from p3, step, send to p2,
// step, send from p2 to p3, step.
PathPtr demo_loop_path() {
  return path_cat_all({path_msg_inv(0, 2), path_next(), path_msg(0, 1), path_next(),
                       path_msg(1, 2), path_next()});
}

PathPtr demo_chain_path() {
  return path_cat_all({path_plus_right(), path_msg(0, 1), path_next(), path_msg(1, 2),
                       path_next()});
}

// Image of e under a relation, as a sorted vector.
std::vector<int> image(const EventRel& rel, int e) {
  std::vector<int> out;
  for (int f = rel.next_in_row(e, 0); f >= 0; f = rel.next_in_row(e, f + 1)) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("interning gives pointer equality for equal formulas") {
  CHECK(path_next() == path_next());
  CHECK(ev_or(ev_proc(0), ev_label(1)) == ev_or(ev_proc(0), ev_label(1)));
  CHECK(path_cat(path_next(), path_prev()) == path_cat(path_next(), path_prev()));
  // Right-nesting of concatenations is canonical.
  PathPtr a = path_cat(path_cat(path_next(), path_prev()), path_next());
  PathPtr b = path_cat(path_next(), path_cat(path_prev(), path_next()));
  CHECK(a == b);
}

TEST_CASE("constructor rewrites preserve obvious identities") {
  CHECK(ev_or(ev_false(), ev_proc(1)) == ev_proc(1));
  CHECK(ev_not(ev_not(ev_proc(1))) == ev_proc(1));
  CHECK(ev_and(ev_true(), ev_proc(1)) == ev_proc(1));
  CHECK(path_cat(path_test(ev_true()), path_next()) == path_next());
  CHECK(path_guard_right(ev_false()) == path_next());
  CHECK(ev_loop(path_test(ev_proc(0))) == ev_proc(0));
  CHECK(ev_ex(path_test(ev_proc(0)), ev_true()) == ev_proc(0));
}

TEST_CASE("fragment tags track operators under guards") {
  PathPtr clean = demo_loop_path();
  CHECK((clean->frag & (kFragUnion | kFragInter | kFragComplement | kFragLoop)) == 0);
  PathPtr with_loop = path_guard_right(ev_loop(path_next()));
  CHECK((with_loop->frag & kFragLoop) == kFragLoop);
  PathPtr with_union = path_union(path_next(), path_prev());
  CHECK((with_union->frag & kFragUnion) == kFragUnion);
  CHECK((path_test(ev_ex(with_union))->frag & kFragUnion) == kFragUnion);
}

TEST_CASE("parser and printer round-trip") {
  Signature sig{{{"p1", "p2", "p3"}}, {{"sq", "ci", "di"}}};
  for (const char* text : {
           "(E (ex (cat (msg p1 p2) next) (lab di)))",
           "(not (E (loop (cat (msg-inv p1 p3) next))))",
           "(or (E (at p1)) (E (not (lab sq))))",
       }) {
    SentPtr s = parse_pdl_sentence(text, sig);
    CHECK(parse_pdl_sentence(print_pdl(s, sig), sig) == s);
  }
  for (const char* text : {
           "plus+", "star*", "(guard-> (lab sq))", "(guard<- (or (at p2) true))",
           "(cup (jump p1 p2) (cap next prev))", "(comp (test (lab ci)))",
           "(cat (msg p1 p2) plus+ (msg-inv p2 p3))",
       }) {
    PathPtr p = parse_pdl_path(text, sig);
    CHECK(parse_pdl_path(print_pdl(p, sig), sig) == p);
  }
}

TEST_CASE("table semantics on the demo MSC") {
  Msc m = demo24();
  PdlEvalContext ctx(m);
  auto id = [&](const char* s) { return m.event_by_id(s); };

  // Loop pi holds exactly at g5.
  const EventSet& loopset = ctx.event(ev_loop(demo_loop_path()));
  for (int e = 0; e < m.event_count(); ++e) CHECK(loopset.test(e) == (e == id("g5")));

  // Guarded move with the square label: e2 reaches e5 but not e6 (e5 is a
  // circle and blocks the hop).
  const EventRel& sq = ctx.path(path_guard_right(ev_label(0)));
  CHECK(sq.contains(id("e2"), id("e5")));
  CHECK(!sq.contains(id("e2"), id("e6")));

  // {true}? is the identity relation.
  CHECK(ctx.path(path_test(ev_true())) == EventRel::identity(m.event_count()));
}

TEST_CASE("comp relation on examples") {
  CompRel c = comp_relation(demo_chain_path(), 3);
  CHECK(c.kind == CompRel::Single);
  CHECK(c.p == 0);
  CHECK(c.q == 2);

  CHECK(comp_relation(path_test(ev_label(0)), 3).kind == CompRel::Id);

  CompRel mismatch = comp_relation(path_cat(path_msg(0, 1), path_msg(0, 1)), 3);
  CHECK(mismatch.kind == CompRel::Empty);

  CHECK_THROWS_AS(comp_relation(path_union(path_next(), path_prev()), 3), Error);
}

TEST_CASE("min and max of the demo chain path") {
  Msc m = demo24();
  PdlEvalContext ctx(m);
  auto id = [&](const char* s) { return m.event_by_id(s); };
  PathPtr pi = demo_chain_path();

  const EventRel& mn = ctx.path(min_path(pi));
  const EventRel& mx = ctx.path(max_path(pi));
  CHECK(image(mn, id("e2")) == std::vector<int>{id("g4")});
  CHECK(image(mx, id("e2")) == std::vector<int>{id("g5")});
}

TEST_CASE("min_path of a test is the test itself") {
  PathPtr t = path_test(ev_proc(1));
  CHECK(min_path(t) == t);
  CHECK(max_path(t) == t);
  CHECK(minmax_image_of(min_path(t)).has_value());
}

TEST_CASE("min/max require the Loop fragment") {
  CHECK_THROWS_AS(min_path(path_union(path_next(), path_prev())), Error);
  CHECK_THROWS_AS(max_path(path_complement(path_next())), Error);
}

TEST_CASE("converse rules") {
  CHECK(converse(path_next()) == path_prev());
  CHECK(converse(path_cat(path_msg(0, 1), path_next())) ==
        path_cat(path_prev(), path_msg_inv(0, 1)));
  CHECK(converse(path_jump(0, 2)) == path_jump(2, 0));
  CHECK(converse(path_test(ev_proc(1))) == path_test(ev_proc(1)));
  CHECK(converse(path_complement(path_next())) == path_complement(path_prev()));
}

TEST_CASE("converse equals transposition on random paths") {
  RandomMscParams params{.max_events = 10};
  Signature sig = random_signature_for(params);
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    CHECK(ctx.path(converse(pi)) == ctx.path(pi).transpose());
    CHECK(converse(pi)->frag == pi->frag);
  }
}

TEST_CASE("min/max pick the process extremes of the image") {
  RandomMscParams params{.max_events = 9};
  Signature sig = random_signature_for(params);
  Rng rng(77);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    if (pi->frag & kFragLoop) continue;  // keep the direct-eval oracle simple
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    const EventRel& rel = ctx.path(pi);
    const EventRel& mn = ctx.path(min_path(pi));
    const EventRel& mx = ctx.path(max_path(pi));
    for (int e = 0; e < m.event_count(); ++e) {
      auto img = image(rel, e);
      auto mni = image(mn, e);
      auto mxi = image(mx, e);
      if (img.empty()) {
        CHECK(mni.empty());
        CHECK(mxi.empty());
        continue;
      }
      // All images live on one process; process positions order them.
      int lo = img[0], hi = img[0];
      for (int f : img) {
        CHECK(m.loc(f) == m.loc(img[0]));
        if (m.pos_in_proc(f) < m.pos_in_proc(lo)) lo = f;
        if (m.pos_in_proc(f) > m.pos_in_proc(hi)) hi = f;
      }
      ++checked;
      CHECK(mni == std::vector<int>{lo});
      CHECK(mxi == std::vector<int>{hi});
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("monotonicity of min/max images") {
  RandomMscParams params{.max_events = 9};
  Signature sig = random_signature_for(params);
  Rng rng(81);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    const EventRel& mn = ctx.path(min_path(pi));
    const EventRel& mx = ctx.path(max_path(pi));
    for (int p = 0; p < m.processes().size(); ++p) {
      const auto& chain = m.proc_events(p);
      for (size_t a = 0; a < chain.size(); ++a)
        for (size_t b = a; b < chain.size(); ++b) {
          auto mna = image(mn, chain[a]), mnb = image(mn, chain[b]);
          auto mxa = image(mx, chain[a]), mxb = image(mx, chain[b]);
          if (!mna.empty() && !mnb.empty())
            CHECK(m.pos_in_proc(mna[0]) <= m.pos_in_proc(mnb[0]));
          if (!mxa.empty() && !mxb.empty())
            CHECK(m.pos_in_proc(mxa[0]) <= m.pos_in_proc(mxb[0]));
        }
    }
  }
}

TEST_CASE("min-concatenation identity") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  Rng rng(83);
  for (int i = 0; i < 200; ++i) {
    PathPtr p1 = random_loop_path(rng, sig, 2);
    PathPtr p2 = random_loop_path(rng, sig, 2);
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    PathPtr whole = path_cat(p1, p2);
    const EventRel& direct = ctx.path(min_path(whole));
    const EventRel& staged =
        ctx.path(path_cat(min_path(path_cat(p1, path_test(ev_ex(p2)))), min_path(p2)));
    CHECK(direct == staged);
    const EventRel& direct_max = ctx.path(max_path(whole));
    const EventRel& staged_max =
        ctx.path(path_cat(max_path(path_cat(p1, path_test(ev_ex(p2)))), max_path(p2)));
    CHECK(direct_max == staged_max);
  }
}

TEST_CASE("image interval characterization") {
  RandomMscParams params{.max_events = 9};
  Signature sig = random_signature_for(params);
  Rng rng(85);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    const EventRel& rel = ctx.path(pi);
    const EventRel& mn = ctx.path(min_path(pi));
    const EventRel& mx = ctx.path(max_path(pi));
    const EventSet& has_rev = ctx.event(ev_ex(converse(pi)));
    for (int e = 0; e < m.event_count(); ++e) {
      auto mni = image(mn, e);
      if (mni.empty()) continue;
      int lo = mni[0], hi = image(mx, e)[0];
      for (int f = 0; f < m.event_count(); ++f) {
        bool in_interval = m.loc(f) == m.loc(lo) &&
                           m.pos_in_proc(lo) <= m.pos_in_proc(f) &&
                           m.pos_in_proc(f) <= m.pos_in_proc(hi) && has_rev.test(f);
        CHECK(rel.contains(e, f) == in_interval);
      }
    }
  }
}

TEST_CASE("loop rewriting identity") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  Rng rng(87);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    Msc m = random_msc(rng, params);
    PdlEvalContext ctx(m);
    EvPtr lhs = ev_loop(pi);
    EvPtr rhs = ev_or(
        ev_loop(max_path(pi)),
        ev_and_all({ev_ex(converse(pi)), ev_loop(path_cat(max_path(pi), path_plus_left())),
                    ev_not(ev_loop(path_cat(min_path(pi), path_plus_left())))}));
    CHECK(ctx.event(lhs) == ctx.event(rhs));
  }
}

TEST_CASE("events in path images respect Comp") {
  RandomMscParams params{.max_events = 9};
  Signature sig = random_signature_for(params);
  Rng rng(89);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 3);
    Msc m = random_msc(rng, params);
    CompRel comp = comp_relation(pi, sig.processes.size());
    EventRel rel = eval_path(m, pi);
    for (int e = 0; e < m.event_count(); ++e)
      for (int f = rel.next_in_row(e, 0); f >= 0; f = rel.next_in_row(e, f + 1)) {
        bool allowed = comp.kind == CompRel::Id    ? m.loc(e) == m.loc(f)
                       : comp.kind == CompRel::Single
                           ? (m.loc(e) == comp.p && m.loc(f) == comp.q)
                           : false;
        CHECK(allowed);
      }
  }
}

TEST_CASE("complement decomposition covers the complement") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  int np = sig.processes.size();
  Rng rng(91);
  for (int i = 0; i < 200; ++i) {
    PathPtr pi = random_loop_path(rng, sig, 2);
    Msc m = random_msc(rng, params);
    auto parts = complement_decompose(pi, np);
    CHECK((int)parts.size() == np * np + 3);
    PdlEvalContext ctx(m);
    EventRel acc(m.event_count());
    for (auto& part : parts) acc = acc.unite(ctx.path(part));
    CHECK(acc == ctx.path(pi).complement());
  }
}

TEST_CASE("complement of the identity test") {
  Signature sig{{{"p1", "p2"}}, {{"a"}}};
  Msc m = parse_msc("processes: p1 p2\nlabels: a\nevents p1: e0:a e1:a\nevents p2: f0:a\n");
  auto parts = complement_decompose(path_test(ev_true()), 2);
  CHECK(parts.size() == 7);
  PdlEvalContext ctx(m);
  EventRel acc(m.event_count());
  for (auto& part : parts) acc = acc.unite(ctx.path(part));
  CHECK(acc == EventRel::identity(m.event_count()).complement());
}

TEST_CASE("pdl_to_fo is equivalent and uses three variables") {
  RandomMscParams params{.max_events = 7};
  Signature sig = random_signature_for(params);
  int np = sig.processes.size();
  Rng rng(93);

  // Simple shapes first.
  CHECK(variable_count(pdl_to_fo_path(path_next(), "x", "y", np)) == 2);
  EvPtr next_a = ev_ex(path_next(), ev_label(0));
  FoPtr next_a_fo = pdl_to_fo_event(next_a, "x", np);
  CHECK(variable_count(next_a_fo) <= 3);

  for (int i = 0; i < 200; ++i) {
    bool as_path = rng.chance(1, 2);
    Msc m = random_msc(rng, params);
    FoEvalContext fo_ctx(m);
    PdlEvalContext pdl_ctx(m);
    if (as_path) {
      PathPtr pi = random_loop_path(rng, sig, 2);
      FoPtr fo = pdl_to_fo_path(pi, "x", "y", np);
      CHECK(variable_count(fo) <= 3);
      const EventRel& rel = pdl_ctx.path(pi);
      for (int e = 0; e < m.event_count(); ++e)
        for (int f = 0; f < m.event_count(); ++f) {
          Interpretation nu;
          nu.bind["x"] = e;
          nu.bind["y"] = f;
          CHECK(fo_ctx.eval(fo, nu) == rel.contains(e, f));
        }
    } else {
      EvPtr phi = random_loop_event(rng, sig, 2);
      FoPtr fo = pdl_to_fo_event(phi, "x", np);
      CHECK(variable_count(fo) <= 3);
      const EventSet& set = pdl_ctx.event(phi);
      for (int e = 0; e < m.event_count(); ++e) {
        Interpretation nu;
        nu.bind["x"] = e;
        CHECK(fo_ctx.eval(fo, nu) == set.test(e));
      }
    }
  }
}

TEST_CASE("sentence translation to FO") {
  RandomMscParams params{.max_events = 7};
  Signature sig = random_signature_for(params);
  Rng rng(95);
  SentPtr s = sent_not(sent_e(ev_and(ev_proc(0), ev_ex(path_msg(0, 1), ev_label(1)))));
  FoPtr fo = pdl_to_fo(s, sig.processes.size());
  CHECK(variable_count(fo) <= 3);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, params);
    CHECK(eval_fo(m, fo, {}) == eval_sentence(m, s));
  }
}
