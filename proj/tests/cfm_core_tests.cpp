#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msc/cfm.hpp"
#include "msc/randgen.hpp"

using namespace msc;

namespace {

// One-state transducer whose outputs per input are given by a table; every
// action shape is allowed.
Transducer table_transducer(const ProcessSet& procs, const LabelSet& in, const LabelSet& out,
                            const std::vector<std::vector<int>>& choices) {
  Transducer t;
  t.input = in;
  t.output = out;
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(in, out);
  t.cfm.messages = {"m"};
  t.cfm.machines.resize(procs.size());
  for (int p = 0; p < procs.size(); ++p) {
    auto& pm = t.cfm.machines[p];
    pm.state_names = {"q0"};
    pm.initial = 0;
    for (int a = 0; a < in.size(); ++a) {
      for (int b : choices[a]) {
        int pair = t.pair_label(a, b);
        pm.transitions.push_back({0, {CfmAction::Internal, pair, -1, -1}, 0});
        for (int q = 0; q < procs.size(); ++q) {
          if (q == p) continue;
          pm.transitions.push_back({0, {CfmAction::Send, pair, 0, q}, 0});
          pm.transitions.push_back({0, {CfmAction::Receive, pair, 0, q}, 0});
        }
      }
    }
  }
  Rectangle rect;
  rect.states.assign(procs.size(), {0});
  t.cfm.acceptance.push_back(rect);
  t.functional = true;
  for (auto& c : choices)
    if (c.size() != 1) t.functional = false;
  return t;
}

Transducer identity_t(const ProcessSet& procs, const LabelSet& labels) {
  std::vector<std::vector<int>> choices;
  for (int a = 0; a < labels.size(); ++a) choices.push_back({a});
  return table_transducer(procs, labels, labels, choices);
}

const ProcessSet kProcs{{"p1", "p2"}};
const LabelSet kBits{{"0", "1"}};

Msc word_msc(const std::string& labels_spaced) {
  std::string text = "processes: p\nlabels: a b\nevents p:";
  std::istringstream in(labels_spaced);
  std::string tok;
  int i = 0;
  while (in >> tok) text += " w" + std::to_string(i++) + ":" + tok;
  return parse_msc(text + "\n");
}

// Independent acceptance oracle: enumerate every transition assignment and
// check the run conditions directly.
bool accepts_by_enumeration(const Cfm& a, const Msc& m) {
  int n = m.event_count();
  std::vector<int> pick(n, 0);
  auto valid = [&]() {
    std::vector<int> finals(a.processes.size());
    for (int p = 0; p < a.processes.size(); ++p) {
      int state = a.machines[p].initial;
      for (EventId e : m.proc_events(p)) {
        const CfmTransition& t = a.machines[p].transitions[pick[e]];
        if (t.src != state || t.act.label != m.label(e)) return false;
        if (m.is_internal(e) != (t.act.kind == CfmAction::Internal)) return false;
        if (m.is_send(e) &&
            (t.act.kind != CfmAction::Send || t.act.peer != m.loc(m.partner(e))))
          return false;
        if (m.is_receive(e) &&
            (t.act.kind != CfmAction::Receive || t.act.peer != m.loc(m.partner(e))))
          return false;
        state = t.dst;
      }
      finals[p] = state;
    }
    for (auto& [s, r] : m.messages())
      if (a.machines[m.loc(s)].transitions[pick[s]].act.msg !=
          a.machines[m.loc(r)].transitions[pick[r]].act.msg)
        return false;
    for (auto& rect : a.acceptance)
      if (rect.admits(finals)) return true;
    return false;
  };
  while (true) {
    bool in_range = true;
    for (int e = 0; e < n && in_range; ++e)
      if (pick[e] >= (int)a.machines[m.loc(e)].transitions.size()) in_range = false;
    if (in_range && valid()) return true;
    int i = 0;
    while (i < n) {
      if (++pick[i] < (int)a.machines[m.loc(i)].transitions.size()) break;
      pick[i++] = 0;
    }
    if (i == n) return false;
  }
}

Cfm random_cfm(Rng& rng, const Msc& m) {
  Cfm a;
  a.processes = m.processes();
  a.alphabet = m.labels();
  a.messages = {"m0", "m1"};
  a.machines.resize(a.processes.size());
  for (int p = 0; p < a.processes.size(); ++p) {
    auto& pm = a.machines[p];
    int ns = 1 + rng.below(2);
    for (int s = 0; s < ns; ++s) pm.state_names.push_back("s" + std::to_string(s));
    pm.initial = 0;
    int nt = 2 + rng.below(5);
    for (int i = 0; i < nt; ++i) {
      CfmTransition t;
      t.src = rng.below(ns);
      t.dst = rng.below(ns);
      t.act.label = rng.below(a.alphabet.size());
      int shape = rng.below(3);
      if (shape == 0 || a.processes.size() == 1) {
        t.act.kind = CfmAction::Internal;
      } else {
        t.act.kind = shape == 1 ? CfmAction::Send : CfmAction::Receive;
        t.act.msg = rng.below(2);
        int peer = rng.below(a.processes.size() - 1);
        if (peer >= p) ++peer;
        t.act.peer = peer;
      }
      pm.transitions.push_back(t);
    }
  }
  Rectangle rect;
  rect.states.resize(a.processes.size());
  for (int p = 0; p < a.processes.size(); ++p) {
    for (int s = 0; s < a.machines[p].state_count(); ++s)
      if (rng.chance(2, 3)) rect.states[p].push_back(s);
    if (rect.states[p].empty()) rect.states[p].push_back(0);
  }
  a.acceptance.push_back(rect);
  return a;
}

}  // namespace

TEST_CASE("single-process CFM is a word automaton") {
  // DFA for exactly the word ab.
  Cfm a;
  a.processes = ProcessSet{{"p"}};
  a.alphabet = LabelSet{{"a", "b"}};
  a.machines.resize(1);
  auto& pm = a.machines[0];
  pm.state_names = {"s0", "s1", "s2"};
  pm.initial = 0;
  pm.transitions.push_back({0, {CfmAction::Internal, 0, -1, -1}, 1});
  pm.transitions.push_back({1, {CfmAction::Internal, 1, -1, -1}, 2});
  Rectangle rect;
  rect.states = {{2}};
  a.acceptance.push_back(rect);

  CHECK(accepts(a, word_msc("a b")));
  CHECK(!accepts(a, word_msc("b a")));
  CHECK(!accepts(a, word_msc("a")));
  CHECK(!accepts(a, word_msc("a b a")));
}

TEST_CASE("machine with no usable transition rejects") {
  Cfm a;
  a.processes = ProcessSet{{"p"}};
  a.alphabet = LabelSet{{"a", "b"}};
  a.machines.resize(1);
  a.machines[0].state_names = {"s0"};
  a.machines[0].initial = 0;
  Rectangle rect;
  rect.states = {{0}};
  a.acceptance.push_back(rect);
  Msc m = word_msc("a");
  CHECK(!accepts(a, m));
  CHECK(!find_run(a, m).has_value());
}

TEST_CASE("incompatible alphabets are rejected") {
  Cfm a;
  a.processes = ProcessSet{{"p"}};
  a.alphabet = LabelSet{{"x"}};
  a.machines.resize(1);
  a.machines[0].state_names = {"s0"};
  CHECK_THROWS_AS(accepts(a, word_msc("a")), Error);
}

TEST_CASE("found runs satisfy the run conditions and accept") {
  Rng rng(41);
  RandomMscParams params{.processes = 2, .max_events = 6};
  for (int i = 0; i < 80; ++i) {
    Msc m = random_msc(rng, params);
    Cfm a = random_cfm(rng, m);
    auto run = find_run(a, m);
    if (run) {
      bool accepting = false;
      CHECK(run_is_valid(a, m, *run, &accepting));
      CHECK(accepting);
    }
  }
}

TEST_CASE("find_run agrees with exhaustive assignment enumeration") {
  Rng rng(42);
  RandomMscParams params{.processes = 2, .max_events = 6};
  int accepted = 0;
  for (int i = 0; i < 120; ++i) {
    Msc m = random_msc(rng, params);
    Cfm a = random_cfm(rng, m);
    bool got = accepts(a, m);
    bool expect = accepts_by_enumeration(a, m);
    CHECK(got == expect);
    accepted += got;
  }
  CHECK(accepted > 5);  // the generator must exercise both outcomes
}

TEST_CASE("single-process acceptance matches NFA word acceptance") {
  // Nondeterministic: label a loops or advances; accept iff some path ends
  // in s1 reading the whole word.
  Cfm a;
  a.processes = ProcessSet{{"p"}};
  a.alphabet = LabelSet{{"a", "b"}};
  a.machines.resize(1);
  auto& pm = a.machines[0];
  pm.state_names = {"s0", "s1"};
  pm.initial = 0;
  pm.transitions.push_back({0, {CfmAction::Internal, 0, -1, -1}, 0});
  pm.transitions.push_back({0, {CfmAction::Internal, 0, -1, -1}, 1});
  pm.transitions.push_back({1, {CfmAction::Internal, 1, -1, -1}, 1});
  Rectangle rect;
  rect.states = {{1}};
  a.acceptance.push_back(rect);

  auto nfa_accepts = [&](const std::string& w) {
    std::set<int> cur{0};
    for (char c : w) {
      std::set<int> next;
      for (int s : cur)
        for (auto& t : pm.transitions)
          if (t.src == s && t.act.label == (c == 'a' ? 0 : 1)) next.insert(t.dst);
      cur = next;
    }
    return cur.count(1) > 0;
  };
  for (const std::string& w : {"a", "b", "ab", "aab", "abb", "ba", "aabb"}) {
    std::string spaced;
    for (char c : w) {
      spaced += c;
      spaced += ' ';
    }
    CHECK(accepts(a, word_msc(spaced)) == nfa_accepts(w));
  }
}

TEST_CASE("identity transducer outputs exactly the input labeling") {
  LabelSet ab{{"a", "b"}};
  Transducer id = identity_t(kProcs, ab);
  Rng rng(43);
  for (int i = 0; i < 50; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .max_events = 6});
    auto outs = outputs(id, m, {}, false);
    REQUIRE(outs.size() == 1);
    for (int e = 0; e < m.event_count(); ++e) CHECK(outs[0][e] == m.label(e));
  }
}

TEST_CASE("product of identity with itself gives diagonal outputs") {
  LabelSet ab{{"a", "b"}};
  Transducer id = identity_t(kProcs, ab);
  Transducer both = product(id, id);
  Rng rng(44);
  for (int i = 0; i < 50; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .max_events = 6});
    auto outs = outputs(both, m, {}, false);
    REQUIRE(outs.size() == 1);
    for (int e = 0; e < m.event_count(); ++e)
      CHECK(outs[0][e] == m.label(e) * ab.size() + m.label(e));
  }
}

TEST_CASE("product of constant emitters outputs the pair") {
  LabelSet ab{{"a", "b"}};
  Transducer zero = table_transducer(kProcs, ab, kBits, {{0}, {0}});
  Transducer one = table_transducer(kProcs, ab, kBits, {{1}, {1}});
  Transducer both = product(zero, one);
  Rng rng(45);
  for (int i = 0; i < 30; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .max_events = 5});
    auto outs = outputs(both, m, {}, false);
    REQUIRE(outs.size() == 1);
    for (int e = 0; e < m.event_count(); ++e) CHECK(outs[0][e] == 1);  // (0,1)
  }
}

TEST_CASE("composing with identity changes nothing; double negation is identity") {
  LabelSet ab{{"a", "b"}};
  Transducer idb = identity_t(kProcs, ab);
  Transducer bnot = table_transducer(kProcs, ab, ab, {{1}, {0}});
  Transducer idid = compose(idb, idb);
  Transducer dbl = compose(bnot, bnot);
  Rng rng(46);
  for (int i = 0; i < 40; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .labels = 2, .max_events = 6});
    auto base = outputs(idb, m, {}, false);
    CHECK(outputs(idid, m, {}, false) == base);
    CHECK(outputs(dbl, m, {}, false) == base);
    auto flipped = outputs(bnot, m, {}, false);
    REQUIRE(flipped.size() == 1);
    for (int e = 0; e < m.event_count(); ++e) CHECK(flipped[0][e] == 1 - m.label(e));
  }
}

TEST_CASE("relational composition matches pairwise composition of relations") {
  // first: a |-> {0,1} free; second: negation.  The composite must relate
  // each input to both negated bits.
  Transducer guess = table_transducer(kProcs, kBits, kBits, {{0, 1}, {0, 1}});
  Transducer bnot = table_transducer(kProcs, kBits, kBits, {{1}, {0}});
  Transducer comp = compose(bnot, guess);
  Msc m = parse_msc("processes: p1 p2\nlabels: 0 1\nevents p1: e0:0\nevents p2: f0:1\n");
  auto outs = outputs(comp, m, {}, false);
  CHECK(outs.size() == 4);  // both events free
}

TEST_CASE("free coloring yields |colors|^|events| labelings") {
  LabelSet ab{{"a", "b"}};
  LabelSet colors{{"c1", "c2", "c3", "c4"}};
  std::vector<std::vector<int>> all{{0, 1, 2, 3}, {0, 1, 2, 3}};
  Transducer guess = table_transducer(kProcs, ab, colors, all);
  Msc m = parse_msc("processes: p1 p2\nlabels: a b\nevents p1: e0:a\nevents p2: f0:b\n");
  auto outs = outputs(guess, m, {}, false);
  CHECK(outs.size() == 16);
}

TEST_CASE("functional shortcut matches enumeration on functional machines") {
  LabelSet ab{{"a", "b"}};
  Transducer flip = table_transducer(kProcs, ab, ab, {{1}, {0}});
  Rng rng(47);
  for (int i = 0; i < 30; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .max_events = 6});
    auto fast = outputs(flip, m, {}, true);
    auto full = outputs(flip, m, {}, false);
    CHECK(fast == full);
  }
}

TEST_CASE("serialization round-trips") {
  LabelSet ab{{"a", "b"}};
  Transducer id = identity_t(kProcs, ab);
  Transducer prod = product(id, table_transducer(kProcs, ab, kBits, {{0}, {1}}));
  std::string text = prod.cfm.serialize();
  Cfm back = parse_cfm(text);
  CHECK(back.serialize() == text);
  CHECK(back.state_total() == prod.cfm.state_total());
  CHECK(back.transition_total() == prod.cfm.transition_total());

  // Behaviour is preserved, not just shape.
  Rng rng(48);
  for (int i = 0; i < 20; ++i) {
    Msc m = random_msc(rng, {.processes = 2, .max_events = 5});
    LabelSet pair_alpha = prod.cfm.alphabet;
    (void)pair_alpha;
    Transducer back_t{back, prod.input, prod.output, prod.functional};
    CHECK(outputs(back_t, m, {}, false) == outputs(prod, m, {}, false));
  }
}

TEST_CASE("product sizes stay within the multiplicative bound") {
  LabelSet ab{{"a", "b"}};
  Transducer id = identity_t(kProcs, ab);
  Transducer bnot = table_transducer(kProcs, ab, ab, {{1}, {0}});
  Transducer prod = product(id, bnot);
  for (int p = 0; p < kProcs.size(); ++p) {
    CHECK(prod.cfm.machines[p].state_count() <=
          id.cfm.machines[p].state_count() * bnot.cfm.machines[p].state_count());
  }
}
