#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msc/fixtures.hpp"
#include "msc/pdl_to_cfm.hpp"
#include "msc/randgen.hpp"

using namespace msc;

namespace {

Msc demo24() { return parse_msc(fixtures::demo24_msc_text()); }

// Compares the transducer's unique output labeling against direct
// evaluation of the formula.
void check_labels(const Transducer& t, const Msc& m, const EvPtr& phi) {
  auto outs = outputs(t, m);
  REQUIRE(outs.size() == 1);
  EventSet truth = eval_event(m, phi);
  for (int e = 0; e < m.event_count(); ++e) CHECK(outs[0][e] == (truth.test(e) ? 1 : 0));
}

void check_functional(const Transducer& t, const Msc& m) {
  CfmLimits limits;
  auto all = outputs(t, m, limits, false);
  CHECK(all.size() == 1);
}

}  // namespace

TEST_CASE("base machines stay tiny") {
  Signature sig{{{"p1", "p2", "p3"}}, {{"a", "b"}}};
  for (auto& t : {proc_test_transducer(sig, 0), label_test_transducer(sig, 1),
                  neg_transducer(sig.processes), or2_transducer(sig.processes),
                  msg_guess_transducer(sig.processes, 0, 1),
                  msg_inv_transducer(sig.processes, 0, 1),
                  strict_since_transducer(sig.processes),
                  strict_until_transducer(sig.processes),
                  jump_broadcast_transducer(sig.processes, 0, 1),
                  jump_broadcast_transducer(sig.processes, 2, 2)}) {
    for (auto& pm : t.cfm.machines) CHECK(pm.state_count() <= 4);
  }
}

TEST_CASE("process test labels the demo MSC") {
  Msc m = demo24();
  const Signature& sig = m.signature();
  Transducer t = compile_loopfree(sig, ev_proc(0));
  auto outs = outputs(t, m);
  REQUIRE(outs.size() == 1);
  for (int e = 0; e < m.event_count(); ++e)
    CHECK(outs[0][e] == (m.loc(e) == 0 ? 1 : 0));
}

TEST_CASE("message modality on the demo MSC") {
  Msc m = demo24();
  const Signature& sig = m.signature();
  // Sends from p1 to p2 whose receive is a diamond: e1, e3, e5, e7.
  EvPtr phi = ev_ex(path_msg(0, 1), ev_label(2));
  Transducer t = compile_loopfree(sig, phi);
  auto outs = outputs(t, m);
  REQUIRE(outs.size() == 1);
  for (int e = 0; e < m.event_count(); ++e) {
    bool expect = m.event(e).id == "e1" || m.event(e).id == "e3" ||
                  m.event(e).id == "e5" || m.event(e).id == "e7";
    CHECK(outs[0][e] == (expect ? 1 : 0));
  }
}

TEST_CASE("strict since agrees with direct evaluation") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  EvPtr phi = ev_ex(path_guard_left(ev_label(0)), ev_label(1));
  Transducer t = compile_loopfree(sig, phi);
  Rng rng(61);
  for (int i = 0; i < 200; ++i) {
    Msc m = random_msc(rng, params);
    check_labels(t, m, phi);
  }
}

TEST_CASE("loop-free corpus against the evaluation oracle") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  std::vector<EvPtr> corpus = {
      ev_proc(2),
      ev_label(1),
      ev_not(ev_label(0)),
      ev_or(ev_proc(0), ev_label(1)),
      ev_ex(path_next(), ev_label(0)),
      ev_ex(path_prev(), ev_true()),
      ev_ex(path_msg(1, 0), ev_true()),
      ev_ex(path_msg_inv(0, 2), ev_label(1)),
      ev_ex(path_jump(0, 1), ev_label(0)),
      ev_ex(path_jump(2, 2), ev_label(1)),
      ev_ex(path_guard_right(ev_label(0)), ev_label(1)),
      ev_ex(path_cat(path_next(), path_msg(0, 1)), ev_true()),
      ev_and(ev_ex(path_plus_right()), ev_not(ev_ex(path_prev(), ev_true()))),
      ev_ex(path_test(ev_label(0)), ev_proc(1)),
  };
  std::vector<Transducer> machines;
  for (auto& phi : corpus) machines.push_back(compile_loopfree(sig, phi));
  Rng rng(62);
  for (int i = 0; i < 60; ++i) {
    Msc m = random_msc(rng, params);
    for (size_t k = 0; k < corpus.size(); ++k) check_labels(machines[k], m, corpus[k]);
  }
}

TEST_CASE("loop-free machines are functional") {
  RandomMscParams params{.max_events = 6};
  Signature sig = random_signature_for(params);
  EvPtr phi = ev_or(ev_ex(path_msg(0, 1), ev_label(0)), ev_ex(path_jump(1, 2), ev_true()));
  Transducer t = compile_loopfree(sig, phi);
  CHECK(t.functional);
  Rng rng(63);
  for (int i = 0; i < 25; ++i) {
    Msc m = random_msc(rng, params);
    check_functional(t, m);
  }
}

TEST_CASE("compile_loopfree rejects loops") {
  Signature sig{{{"p1", "p2"}}, {{"a"}}};
  CHECK_THROWS_AS(compile_loopfree(sig, ev_loop(path_next())), Error);
}

TEST_CASE("minmax loop: successor detection") {
  RandomMscParams params{.max_events = 8};
  Signature sig = random_signature_for(params);
  // Loop(min(-> . <-)) holds exactly where a process successor exists.
  PathPtr core = path_cat(path_next(), path_prev());
  Transducer t = compile_minmax_loop(sig, core, MinMaxKind::Min);
  EvPtr phi = ev_loop(min_path(core));
  Rng rng(64);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, params);
    check_labels(t, m, phi);
  }
}

TEST_CASE("minmax loop with non-identity Comp is constantly 0") {
  Signature sig{{{"p1", "p2", "p3"}}, {{"a", "b"}}};
  PathPtr core = path_cat(path_plus_right(), path_msg(0, 2));
  Transducer t = compile_minmax_loop(sig, core, MinMaxKind::Max);
  Rng rng(65);
  for (int i = 0; i < 20; ++i) {
    Msc m = random_msc(rng, {.max_events = 6});
    auto outs = outputs(t, m);
    REQUIRE(outs.size() == 1);
    for (int e = 0; e < m.event_count(); ++e) CHECK(outs[0][e] == 0);
  }
}

TEST_CASE("demo MSC: loop at the doubly-forwarded receive") {
  Msc m = demo24();
  const Signature& sig = m.signature();
  PathPtr pi = path_cat_all({path_msg_inv(0, 2), path_next(), path_msg(0, 1), path_next(),
                             path_msg(1, 2), path_next()});
  // The max image of the loop path hits the same event.
  Transducer t = compile_minmax_loop(sig, pi, MinMaxKind::Max);
  auto outs = outputs(t, m);
  REQUIRE(outs.size() == 1);
  EventSet truth = eval_event(m, ev_loop(max_path(pi)));
  CHECK(truth.test(m.event_by_id("g5")));
  for (int e = 0; e < m.event_count(); ++e) CHECK(outs[0][e] == (truth.test(e) ? 1 : 0));
}

TEST_CASE("normalize_loops preserves semantics and rewrites raw loops") {
  RandomMscParams params{.max_events = 7};
  Signature sig = random_signature_for(params);
  Rng rng(66);
  int rewrites = 0;
  for (int i = 0; i < 200; ++i) {
    EvPtr phi = random_loop_event(rng, sig, 3);
    EvPtr norm = normalize_loops(phi);
    if (norm != phi) ++rewrites;
    Msc m = random_msc(rng, params);
    CHECK(eval_event(m, phi) == eval_event(m, norm));
  }
  CHECK(rewrites > 20);
}

TEST_CASE("already-normal loops are untouched") {
  PathPtr core = path_cat(path_next(), path_prev());
  EvPtr a = ev_loop(max_path(core));
  CHECK(normalize_loops(a) == a);
  EvPtr b = ev_loop(path_cat(max_path(core), path_plus_left()));
  CHECK(normalize_loops(b) == b);
  // Loop over a bare test folds into the test formula itself.
  CHECK(ev_loop(path_test(ev_proc(0))) == ev_proc(0));
}

TEST_CASE("compile_event equals compile_loopfree on loop-free input") {
  Signature sig{{{"p1", "p2"}}, {{"a", "b"}}};
  EvPtr phi = ev_ex(path_guard_right(ev_label(0)), ev_label(1));
  CHECK(compile_event(sig, phi).cfm.serialize() == compile_loopfree(sig, phi).cfm.serialize());
}

TEST_CASE("compile_event: demo loop formula holds exactly at g5") {
  Msc m = demo24();
  const Signature& sig = m.signature();
  PathPtr pi = path_cat_all({path_msg_inv(0, 2), path_next(), path_msg(0, 1), path_next(),
                             path_msg(1, 2), path_next()});
  EvPtr phi = ev_loop(pi);
  Transducer t = compile_event(sig, phi);
  auto outs = outputs(t, m);
  REQUIRE(outs.size() == 1);
  for (int e = 0; e < m.event_count(); ++e)
    CHECK(outs[0][e] == (m.event(e).id == "g5" ? 1 : 0));
}

TEST_CASE("compile_event differential on loop formulas") {
  RandomMscParams params{.max_events = 7};
  Signature sig = random_signature_for(params);
  std::vector<EvPtr> corpus = {
      ev_loop(path_cat(path_next(), path_prev())),
      ev_loop(path_cat(path_msg(0, 1), path_msg_inv(0, 1))),
      ev_ex(path_next(), ev_loop(path_cat(path_msg(1, 2), path_msg_inv(1, 2)))),
      ev_loop(path_cat(path_plus_right(), path_plus_left())),
      ev_or(ev_loop(path_cat(path_msg(0, 1), path_msg_inv(0, 1))), ev_proc(2)),
      ev_not(ev_loop(path_cat(path_next(), path_prev()))),
  };
  Rng rng(67);
  std::vector<Transducer> machines;
  for (auto& phi : corpus) machines.push_back(compile_event(sig, phi));
  for (int i = 0; i < 40; ++i) {
    Msc m = random_msc(rng, params);
    for (size_t k = 0; k < corpus.size(); ++k) check_labels(machines[k], m, corpus[k]);
  }
}

TEST_CASE("compile_event: nested loops") {
  RandomMscParams params{.max_events = 6};
  Signature sig = random_signature_for(params);
  // Inner loop as a guard of the outer loop's path.
  EvPtr inner = ev_loop(path_cat(path_msg(0, 1), path_msg_inv(0, 1)));
  EvPtr phi = ev_loop(path_cat(path_guard_right(inner), path_prev()));
  Transducer t = compile_event(sig, phi);
  Rng rng(68);
  for (int i = 0; i < 25; ++i) {
    Msc m = random_msc(rng, params);
    check_labels(t, m, phi);
  }
}

TEST_CASE("compile_sentence: process nonemptiness") {
  RandomMscParams params{.max_events = 6};
  Signature sig = random_signature_for(params);
  SentPtr xi = sent_e(ev_proc(0));
  Cfm a = compile_sentence(sig, xi);
  Rng rng(69);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, params);
    CHECK(accepts(a, m) == eval_sentence(m, xi));
  }
}

TEST_CASE("compile_sentence: boolean structure") {
  RandomMscParams params{.max_events = 6};
  Signature sig = random_signature_for(params);
  SentPtr xi = sent_and(sent_not(sent_e(ev_label(0))),
                        sent_or(sent_e(ev_proc(1)), sent_e(ev_ex(path_next(), ev_true()))));
  Cfm a = compile_sentence(sig, xi);
  Rng rng(70);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, params);
    CHECK(accepts(a, m) == eval_sentence(m, xi));
  }
}

TEST_CASE("compile_fo_sentence differential") {
  RandomMscParams params{.max_events = 6};
  Signature sig = random_signature_for(params);
  FoPtr phi = fo_exists("x", fo_exists("y", fo_and(fo_msg("x", "y"), fo_label(0, "x"))));
  Cfm a = compile_fo_sentence(sig, phi);
  Rng rng(71);
  for (int i = 0; i < 100; ++i) {
    Msc m = random_msc(rng, params);
    CHECK(accepts(a, m) == eval_fo(m, phi, {}));
  }
}

TEST_CASE("compiled machines serialize and parse back") {
  Signature sig{{{"p1", "p2"}}, {{"a", "b"}}};
  Transducer t = compile_loopfree(sig, ev_ex(path_msg(0, 1), ev_label(1)));
  Cfm back = parse_cfm(t.cfm.serialize());
  CHECK(back.serialize() == t.cfm.serialize());
}
