#include "msc/fo_to_pdl.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_set>

namespace msc {

namespace {

// ---------------------------------------------------------------------------
// Working representation

using Conjunct = std::vector<PathAtom>;

struct Budget {
  long long max_atoms;
  const char* stage = "kernel";

  void check(long long atoms) const {
    if (atoms > max_atoms) throw ResourceLimitError(std::string("fo2pdl/") + stage);
  }
};

long long atom_count(const std::vector<Conjunct>& cs) {
  long long total = 0;
  for (auto& c : cs) total += (long long)c.size() + 1;
  return total;
}

bool atom_less(const PathAtom& a, const PathAtom& b) {
  if (a.src != b.src) return a.src < b.src;
  if (a.dst != b.dst) return a.dst < b.dst;
  return a.path->uid < b.path->uid;
}
bool atom_eq(const PathAtom& a, const PathAtom& b) {
  return a.src == b.src && a.dst == b.dst && a.path == b.path;
}

void canonicalize(Conjunct& c) {
  std::sort(c.begin(), c.end(), atom_less);
  c.erase(std::unique(c.begin(), c.end(), atom_eq), c.end());
}

size_t conjunct_hash(const Conjunct& c) {
  size_t h = 1469598103934665603ull;
  for (auto& a : c) {
    h = (h ^ a.path->uid) * 1099511628211ull;
    h = (h ^ (size_t)(a.src * 31 + a.dst)) * 1099511628211ull;
  }
  return h;
}

// Comp-based consistency: propagate per-variable process masks; a conjunct
// whose masks empty out is unsatisfiable and is dropped.
bool comp_consistent(const Conjunct& c, int nvars, int np) {
  std::vector<unsigned> mask(nvars, (1u << np) - 1);
  for (int round = 0; round < 3; ++round) {
    bool changed = false;
    for (auto& a : c) {
      if (a.path->kind == PdlPathKind::Test && a.path->guard->kind == PdlEventKind::False)
        return false;
      CompRel comp = comp_relation(a.path, np);
      unsigned before_s = mask[a.src], before_d = mask[a.dst];
      switch (comp.kind) {
        case CompRel::Empty:
          return false;
        case CompRel::Single:
          mask[a.src] &= 1u << comp.p;
          mask[a.dst] &= 1u << comp.q;
          break;
        case CompRel::Id: {
          unsigned joint = mask[a.src] & mask[a.dst];
          mask[a.src] = joint;
          mask[a.dst] = joint;
          break;
        }
      }
      if (mask[a.src] == 0 || mask[a.dst] == 0) return false;
      changed |= mask[a.src] != before_s || mask[a.dst] != before_d;
    }
    if (!changed) break;
  }
  return true;
}

// Accumulator with exact dedup; subsume() keeps an antichain (a conjunct
// whose atoms include another's is implied by it and dropped).
struct DnfAcc {
  std::vector<Conjunct> cs;
  std::unordered_set<size_t> seen;
  int nvars;
  int np;

  void add(Conjunct c) {
    canonicalize(c);
    if (!comp_consistent(c, nvars, np)) return;
    size_t h = conjunct_hash(c);
    if (!seen.insert(h).second) {
      for (auto& other : cs)
        if (other.size() == c.size() && std::equal(other.begin(), other.end(), c.begin(), atom_eq))
          return;
    }
    cs.push_back(std::move(c));
  }

  void subsume() {
    std::sort(cs.begin(), cs.end(),
              [](const Conjunct& a, const Conjunct& b) { return a.size() < b.size(); });
    std::vector<Conjunct> keep;
    for (auto& c : cs) {
      bool dominated = false;
      for (auto& k : keep) {
        if (k.size() > c.size()) break;
        size_t i = 0, j = 0;
        while (i < k.size() && j < c.size()) {
          if (atom_eq(k[i], c[j])) {
            ++i;
            ++j;
          } else if (atom_less(k[i], c[j])) {
            break;
          } else {
            ++j;
          }
        }
        if (i == k.size()) {
          dominated = true;
          break;
        }
      }
      if (!dominated) keep.push_back(std::move(c));
    }
    cs = std::move(keep);
    seen.clear();
    for (auto& c : cs) seen.insert(conjunct_hash(c));
  }
};

std::vector<Conjunct> dnf_or(std::vector<Conjunct> a, const std::vector<Conjunct>& b,
                             int nvars, int np) {
  DnfAcc acc{{}, {}, nvars, np};
  for (auto& c : a) acc.add(std::move(c));
  for (auto c : b) acc.add(std::move(c));
  return std::move(acc.cs);
}

std::vector<Conjunct> dnf_and(const std::vector<Conjunct>& a, const std::vector<Conjunct>& b,
                              int nvars, int np, const Budget& budget) {
  DnfAcc acc{{}, {}, nvars, np};
  for (auto& ca : a) {
    for (auto& cb : b) {
      Conjunct merged = ca;
      merged.insert(merged.end(), cb.begin(), cb.end());
      acc.add(std::move(merged));
      budget.check(atom_count(acc.cs));
    }
  }
  return std::move(acc.cs);
}

// Orientation: atoms point from the lower variable index to the higher one.
void orient_conjunct(Conjunct& c) {
  for (auto& a : c) {
    if (a.src > a.dst) {
      a.path = converse(a.path);
      std::swap(a.src, a.dst);
    }
  }
  canonicalize(c);
}
void orient(std::vector<Conjunct>& cs) {
  for (auto& c : cs) orient_conjunct(c);
}

// ---------------------------------------------------------------------------
// Atomic translations

// All repetition-free channel chains from p to q: optional leading/trailing
// moves around message hops separated by strict forward moves.
void chain_paths_rec(int q, int np, std::vector<int>& seq, unsigned used,
                     std::vector<PathPtr>& out) {
  if (seq.back() == q && seq.size() >= 2) {
    for (PathPtr head : {path_test(ev_true()), path_plus_right()}) {
      for (PathPtr tail : {path_test(ev_true()), path_plus_right()}) {
        std::vector<PathPtr> parts;
        parts.push_back(head);
        for (size_t i = 0; i + 1 < seq.size(); ++i) {
          parts.push_back(path_msg(seq[i], seq[i + 1]));
          if (i + 2 < seq.size()) parts.push_back(path_plus_right());
        }
        parts.push_back(tail);
        out.push_back(path_cat_all(parts));
      }
    }
    return;  // repetition-free sequences end at their first visit to q
  }
  for (int r = 0; r < np; ++r) {
    if (used & (1u << r)) continue;
    seq.push_back(r);
    chain_paths_rec(q, np, seq, used | (1u << r), out);
    seq.pop_back();
  }
}

std::vector<PathPtr> le_chains(int p, int q, int np) {
  std::vector<PathPtr> out;
  if (p == q) {
    out.push_back(path_test(ev_true()));
    out.push_back(path_plus_right());
    return out;
  }
  std::vector<int> seq{p};
  std::vector<PathPtr> raw;
  chain_paths_rec(q, np, seq, 1u << p, raw);
  std::set<uint64_t> seen;
  for (auto& path : raw)
    if (seen.insert(path->uid).second) out.push_back(path);
  return out;
}

std::vector<Conjunct> le_atoms(int src, int dst, int np) {
  std::vector<Conjunct> out;
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q)
      for (auto& chain : le_chains(p, q, np)) out.push_back({{chain, src, dst}});
  return out;
}

// Negated x<=y, grouped per process pair: either no chain image at all, or
// the target lies strictly before the least chain image.  That is complete
// because the chain-image union is upward closed on the target process.
std::vector<Conjunct> not_le_atoms(int src, int dst, int np) {
  std::vector<Conjunct> out;
  out.push_back({{path_plus_left(), src, dst}});  // same process: y before x
  for (int p = 0; p < np; ++p) {
    for (int q = 0; q < np; ++q) {
      if (p == q) continue;
      auto chains = le_chains(p, q, np);
      std::vector<PathPtr> mins;
      mins.reserve(chains.size());
      for (auto& chain : chains) mins.push_back(min_path(chain));
      for (size_t i = 0; i < chains.size(); ++i) {
        Conjunct c;
        c.push_back({path_cat(mins[i], path_plus_left()), src, dst});
        for (size_t j = 0; j < chains.size(); ++j) {
          if (j == i) continue;
          EvPtr ok = ev_or_all(
              {ev_not(ev_ex(chains[j])), ev_loop(path_cat(mins[i], converse(mins[j]))),
               ev_loop(path_cat(mins[i], path_cat(path_plus_right(), converse(mins[j]))))});
          c.push_back({path_test(ok), src, src});
        }
        out.push_back(std::move(c));
      }
      std::vector<EvPtr> none;
      none.reserve(chains.size());
      for (auto& chain : chains) none.push_back(ev_not(ev_ex(chain)));
      out.push_back({{path_cat(path_test(ev_and_all(none)), path_jump(p, q)), src, dst}});
    }
  }
  return out;
}

std::vector<Conjunct> atomic_conjuncts(const FoPtr& atom, bool negated, int src, int dst,
                                       const Signature& sig) {
  int np = sig.processes.size();
  switch (atom->kind) {
    case FoKind::ProcTest: {
      std::vector<Conjunct> out;
      if (!negated) {
        out.push_back({{path_test(ev_proc(atom->proc)), src, src}});
      } else {
        for (int p = 0; p < np; ++p)
          if (p != atom->proc) out.push_back({{path_test(ev_proc(p)), src, src}});
      }
      return out;
    }
    case FoKind::LabelTest: {
      std::vector<Conjunct> out;
      if (!negated) {
        out.push_back({{path_test(ev_label(atom->label)), src, src}});
      } else {
        for (int a = 0; a < sig.labels.size(); ++a)
          if (a != atom->label) out.push_back({{path_test(ev_label(a)), src, src}});
      }
      return out;
    }
    case FoKind::Eq: {
      std::vector<Conjunct> out;
      if (!negated) {
        out.push_back({{path_test(ev_true()), src, dst}});
      } else {
        for (auto& part : complement_decompose(path_test(ev_true()), np))
          out.push_back({{part, src, dst}});
      }
      return out;
    }
    case FoKind::ProcEdge: {
      std::vector<Conjunct> out;
      if (!negated) {
        out.push_back({{path_next(), src, dst}});
      } else {
        for (auto& part : complement_decompose(path_next(), np))
          out.push_back({{part, src, dst}});
      }
      return out;
    }
    case FoKind::MsgEdge: {
      std::vector<Conjunct> out;
      if (!negated) {
        for (int p = 0; p < np; ++p)
          for (int q = 0; q < np; ++q)
            if (p != q) out.push_back({{path_msg(p, q), src, dst}});
      } else {
        for (int p = 0; p < np; ++p) out.push_back({{path_jump(p, p), src, dst}});
        for (int p = 0; p < np; ++p)
          for (int q = 0; q < np; ++q) {
            if (p == q) continue;
            for (auto& part : complement_decompose(path_msg(p, q), np)) {
              CompRel comp = comp_relation(part, np);
              if (comp.kind == CompRel::Single && comp.p == p && comp.q == q)
                out.push_back({{part, src, dst}});
            }
          }
      }
      return out;
    }
    case FoKind::Le:
      return negated ? not_le_atoms(src, dst, np) : le_atoms(src, dst, np);
    default:
      throw Error(ErrorKind::Internal, "expected an atom");
  }
}

// ---------------------------------------------------------------------------
// Negation of a whole DNF (general fallback), factored by the process each
// variable sits on: within one assignment only matching decomposition
// components stay alive.  Self-pair atoms complement to a single test.

std::vector<int> vars_used(const std::vector<Conjunct>& cs, int nvars) {
  std::vector<bool> used(nvars, false);
  for (auto& c : cs)
    for (auto& a : c) used[a.src] = used[a.dst] = true;
  std::vector<int> out;
  for (int v = 0; v < nvars; ++v)
    if (used[v]) out.push_back(v);
  return out;
}

std::vector<Conjunct> dnf_negate(const std::vector<Conjunct>& cs, int nvars,
                                 const Signature& sig, Budget budget) {
  budget.stage = "negate";
  int np = sig.processes.size();
  if (cs.empty()) return {{}};  // not(false) = true

  std::vector<int> active = vars_used(cs, nvars);
  if (active.empty()) return {};  // cs is a nonempty set of empty conjuncts: true

  std::map<std::pair<uint64_t, std::pair<int, int>>, std::vector<PathAtom>> comp_cache;
  auto components_of = [&](const PathAtom& a) -> const std::vector<PathAtom>& {
    auto key = std::make_pair(a.path->uid, std::make_pair(a.src, a.dst));
    auto it = comp_cache.find(key);
    if (it != comp_cache.end()) return it->second;
    std::vector<PathAtom> parts;
    if (a.src == a.dst) {
      // Complement of a self pair is a plain loop test.
      parts.push_back({path_test(ev_not(ev_loop(a.path))), a.src, a.src});
    } else {
      for (auto& part : complement_decompose(a.path, np)) parts.push_back({part, a.src, a.dst});
    }
    return comp_cache.emplace(key, std::move(parts)).first->second;
  };

  DnfAcc result{{}, {}, nvars, np};
  std::vector<int> pin(active.size(), 0);
  while (true) {
    auto pin_of = [&](int v) {
      for (size_t i = 0; i < active.size(); ++i)
        if (active[i] == v) return pin[i];
      return 0;
    };
    auto atom_false_on_pin = [&](const PathAtom& a) {
      CompRel comp = comp_relation(a.path, np);
      switch (comp.kind) {
        case CompRel::Empty: return true;
        case CompRel::Single: return pin_of(a.src) != comp.p || pin_of(a.dst) != comp.q;
        case CompRel::Id: return pin_of(a.src) != pin_of(a.dst);
      }
      return false;
    };

    DnfAcc acc{{}, {}, nvars, np};
    {
      Conjunct base;
      for (size_t i = 0; i < active.size(); ++i)
        base.push_back({path_test(ev_proc(pin[i])), active[i], active[i]});
      acc.add(std::move(base));
    }
    int steps = 0;
    for (auto& c : cs) {
      if (acc.cs.empty()) break;
      bool clause_true = false;
      for (auto& a : c)
        if (atom_false_on_pin(a)) {
          clause_true = true;
          break;
        }
      if (clause_true) continue;
      std::vector<PathAtom> options;
      for (auto& a : c)
        for (auto& part : components_of(a))
          if (!atom_false_on_pin(part)) options.push_back(part);
      DnfAcc next{{}, {}, nvars, np};
      for (auto& prev : acc.cs) {
        for (auto& opt : options) {
          Conjunct merged = prev;
          merged.push_back(opt);
          next.add(std::move(merged));
        }
        budget.check(atom_count(next.cs));
      }
      acc = std::move(next);
      if (++steps % 4 == 0 || (long long)acc.cs.size() > 2000) acc.subsume();
    }
    acc.subsume();
    for (auto& c : acc.cs) result.add(std::move(c));
    budget.check(atom_count(result.cs));

    size_t i = 0;
    while (i < active.size() && ++pin[i] == np) pin[i++] = 0;
    if (i == active.size()) break;
  }
  return std::move(result.cs);
}

// ---------------------------------------------------------------------------
// Existential quantifier elimination

std::vector<Conjunct> eliminate(std::vector<Conjunct> cs, int x, int nvars,
                                const Signature& sig, Budget budget) {
  budget.stage = "eliminate";
  int np = sig.processes.size();
  orient(cs);
  DnfAcc out{{}, {}, nvars, np};

  for (auto& c : cs) {
    Conjunct keep;
    std::vector<PathAtom> to_x;
    std::vector<PathPtr> self_x;
    for (auto& a : c) {
      if (a.dst != x) {
        keep.push_back(a);
      } else if (a.src == x) {
        self_x.push_back(a.path);
      } else {
        to_x.push_back(a);
      }
    }

    if (to_x.empty() && self_x.empty()) {
      out.add(std::move(keep));  // x absent; the events set is nonempty
      continue;
    }

    if (to_x.empty()) {
      // Only loop constraints on x: witnessed anywhere, reached by a
      // round-trip jump from the first variable.
      std::vector<EvPtr> loops;
      loops.reserve(self_x.size());
      for (auto& pi : self_x) loops.push_back(ev_loop(pi));
      EvPtr all = ev_and_all(loops);
      for (int p = 0; p < np; ++p)
        for (int q = 0; q < np; ++q) {
          Conjunct c2 = keep;
          c2.push_back({path_cat_all({path_jump(p, q), path_test(all), path_jump(q, p)}), 0, 0});
          out.add(std::move(c2));
        }
      budget.check(atom_count(out.cs));
      continue;
    }

    // Guess the atom whose least image is greatest (k) and the one whose
    // greatest image is least (l); a witness for x sits between them and
    // satisfies every backward and loop constraint.
    std::vector<EvPtr> witness;
    for (auto& a : to_x) witness.push_back(ev_ex(converse(a.path)));
    for (auto& pi : self_x) witness.push_back(ev_loop(pi));
    EvPtr psi = ev_and_all(witness);

    size_t nj = to_x.size();
    std::vector<PathPtr> mins(nj), maxs(nj);
    for (size_t j = 0; j < nj; ++j) {
      mins[j] = min_path(to_x[j].path);
      maxs[j] = max_path(to_x[j].path);
    }

    for (size_t k = 0; k < nj; ++k) {
      for (size_t l = 0; l < nj; ++l) {
        std::vector<std::pair<PathAtom, PathAtom>> star_pairs;  // ->* expansions
        for (size_t j = 0; j < nj; ++j) {
          if (j != k) {
            PathAtom without{path_cat(mins[j], converse(mins[k])), to_x[j].src, to_x[k].src};
            PathAtom with{path_cat(mins[j], path_cat(path_plus_right(), converse(mins[k]))),
                          to_x[j].src, to_x[k].src};
            star_pairs.push_back({without, with});
          }
          if (j != l) {
            PathAtom without{path_cat(maxs[l], converse(maxs[j])), to_x[l].src, to_x[j].src};
            PathAtom with{path_cat(maxs[l], path_cat(path_plus_right(), converse(maxs[j]))),
                          to_x[l].src, to_x[j].src};
            star_pairs.push_back({without, with});
          }
        }
        PathAtom middle{
            path_cat(to_x[k].path, path_cat(path_test(psi), converse(to_x[l].path))),
            to_x[k].src, to_x[l].src};

        size_t combos = size_t(1) << star_pairs.size();
        for (size_t bits = 0; bits < combos; ++bits) {
          Conjunct c2 = keep;
          c2.push_back(middle);
          for (size_t s = 0; s < star_pairs.size(); ++s)
            c2.push_back(bits & (size_t(1) << s) ? star_pairs[s].second : star_pairs[s].first);
          orient_conjunct(c2);
          out.add(std::move(c2));
        }
        budget.check(atom_count(out.cs));
      }
    }
  }
  out.subsume();
  return std::move(out.cs);
}

// ---------------------------------------------------------------------------
// Bounded universal elimination: forall z ((C) implies z <= w), and the
// mirrored forall z ((C) implies w <= z).  On each process chain the
// quantifier collapses to a statement about the greatest (least) element of
// the set described by C; that element is named by a max/min path formula,
// so no DNF complementation is needed.

struct BoundedCase {
  // One conjunct of C: atoms u -> z sharing a single anchor u, plus loop
  // constraints on z.
  int anchor = -1;
  std::vector<PathPtr> arrows;  // pi_j with (anchor, z) orientation
  std::vector<PathPtr> selfs;   // pi(z, z)
};

// ->* comparison: image_a(u) <=proc image_b(u), both single-image paths.
EvPtr le_image_test(const PathPtr& a, const PathPtr& b) {
  return ev_or(ev_loop(path_cat(a, converse(b))),
               ev_loop(path_cat(a, path_cat(path_plus_right(), converse(b)))));
}

struct BoundedPieces {
  EvPtr nonempty;                      // S_i nonempty (test at the anchor)
  std::vector<PathPtr> extreme_paths;  // candidate max/min witness paths, per l-guess
  std::vector<EvPtr> extreme_valid;    // alignment test for each l-guess
};

BoundedPieces bounded_pieces(const BoundedCase& bc, bool want_max) {
  BoundedPieces out;
  std::vector<EvPtr> witness;
  for (auto& pi : bc.arrows) witness.push_back(ev_ex(converse(pi)));
  for (auto& pi : bc.selfs) witness.push_back(ev_loop(pi));
  EvPtr psi = ev_and_all(witness);

  size_t nj = bc.arrows.size();
  std::vector<PathPtr> mins(nj), maxs(nj);
  for (size_t j = 0; j < nj; ++j) {
    mins[j] = min_path(bc.arrows[j]);
    maxs[j] = max_path(bc.arrows[j]);
  }

  // Nonemptiness: some witness point lies in every image interval.
  std::vector<EvPtr> ne;
  for (size_t k = 0; k < nj; ++k)
    for (size_t l = 0; l < nj; ++l) {
      std::vector<EvPtr> parts;
      for (size_t j = 0; j < nj; ++j) {
        if (j != k) parts.push_back(le_image_test(mins[j], mins[k]));
        if (j != l) parts.push_back(le_image_test(maxs[l], maxs[j]));
      }
      parts.push_back(ev_loop(
          path_cat(bc.arrows[k], path_cat(path_test(psi), converse(bc.arrows[l])))));
      ne.push_back(ev_and_all(parts));
    }
  out.nonempty = ev_or_all(ne);

  // Extreme element: for the guess that atom l attains the least maximum
  // (greatest minimum), the witness path is the psi-filtered max (min) of
  // that atom.
  for (size_t l = 0; l < nj; ++l) {
    std::vector<EvPtr> align;
    for (size_t j = 0; j < nj; ++j) {
      if (j == l) continue;
      align.push_back(want_max ? le_image_test(maxs[l], maxs[j])
                               : le_image_test(mins[j], mins[l]));
    }
    PathPtr filtered = path_cat(bc.arrows[l], path_test(psi));
    out.extreme_paths.push_back(want_max ? max_path(filtered) : min_path(filtered));
    out.extreme_valid.push_back(ev_and_all(align));
  }
  return out;
}

// Tries the chain-bounded rewrite; empty optional means "not applicable".
std::optional<std::vector<Conjunct>> eliminate_bounded_forall(
    const std::vector<Conjunct>& c_dnf, int z, int w, bool le_zw, int nvars,
    const Signature& sig, Budget budget) {
  budget.stage = "bounded-forall";
  int np = sig.processes.size();
  bool want_max = le_zw;  // z <= w bounds the greatest element; w <= z the least

  std::vector<BoundedCase> cases;
  std::vector<EvPtr> pure_tests;  // conjuncts with loop constraints only
  for (auto c : c_dnf) {
    orient_conjunct(c);
    BoundedCase bc;
    std::vector<EvPtr> selfs_ev;
    bool ok = true;
    for (auto& a : c) {
      if (a.dst == z && a.src == z) {
        bc.selfs.push_back(a.path);
        selfs_ev.push_back(ev_loop(a.path));
      } else if (a.dst == z) {
        if (bc.anchor == -1) bc.anchor = a.src;
        if (bc.anchor != a.src) ok = false;  // several anchors: fall back
        bc.arrows.push_back(a.path);
      } else if (a.src == z) {
        ok = false;
      } else {
        ok = false;  // side conditions on other variables: fall back
      }
    }
    if (!ok) return std::nullopt;
    if (bc.arrows.empty()) {
      pure_tests.push_back(ev_and_all(selfs_ev));
      continue;
    }
    cases.push_back(std::move(bc));
  }

  DnfAcc out{{}, {}, nvars, np};

  // Pure-test cases: bound every matching event per process, anchored at w.
  EvPtr tests_all_bounded = ev_true();
  if (!pure_tests.empty()) {
    EvPtr t = ev_or_all(pure_tests);
    EvPtr frontier =
        want_max ? ev_and(t, ev_not(ev_ex(path_plus_right(), t)))   // last such event
                 : ev_and(t, ev_not(ev_ex(path_plus_left(), t)));   // first such event
    std::vector<EvPtr> per_r;
    for (int r = 0; r < np; ++r) {
      std::vector<EvPtr> conds{ev_proc(r)};
      for (int p = 0; p < np; ++p) {
        EvPtr none = ev_not(ev_ex(path_jump(r, p), t));
        std::vector<EvPtr> bounded{none};
        for (auto& chain : le_chains(p, r, np)) {
          PathPtr reach = want_max
                              ? path_cat_all({path_jump(r, p), path_test(frontier), chain})
                              : path_cat_all({path_jump(r, p), path_test(frontier),
                                              converse(chain)});
          // want_max: frontier event reaches w forwards (z* <= w);
          // otherwise w reaches the frontier event (w <= z*).
          bounded.push_back(ev_loop(reach));
        }
        conds.push_back(ev_or_all(bounded));
      }
      per_r.push_back(ev_and_all(conds));
    }
    tests_all_bounded = ev_or_all(per_r);
  }

  if (cases.empty()) {
    Conjunct c{{path_test(tests_all_bounded), w, w}};
    out.add(std::move(c));
    return std::move(out.cs);
  }

  // Mixed anchored + pure-test cases interact only through the shared bound
  // w; the pure-test side contributes a test at w on every conjunct.
  std::vector<BoundedPieces> pieces;
  pieces.reserve(cases.size());
  for (auto& bc : cases) pieces.push_back(bounded_pieces(bc, want_max));

  // All-empty disjunct: no case has any element, bound holds vacuously.
  {
    Conjunct c;
    c.push_back({path_test(tests_all_bounded), w, w});
    for (size_t i = 0; i < cases.size(); ++i)
      c.push_back({path_test(ev_not(pieces[i].nonempty)), cases[i].anchor, cases[i].anchor});
    out.add(std::move(c));
  }

  // Case i attains the global extreme with guess l; its witness must obey
  // the bound.  Cross-case comparisons need a common anchor.
  for (size_t i = 0; i < cases.size(); ++i) {
    for (size_t j = 0; j < cases.size(); ++j)
      if (cases[i].anchor != cases[j].anchor) return std::nullopt;
  }
  int u = cases.empty() ? 0 : cases[0].anchor;

  for (size_t i = 0; i < cases.size(); ++i) {
    for (size_t li = 0; li < pieces[i].extreme_paths.size(); ++li) {
      PathPtr wi = pieces[i].extreme_paths[li];
      std::vector<EvPtr> sel{pieces[i].nonempty, pieces[i].extreme_valid[li]};
      for (size_t j = 0; j < cases.size(); ++j) {
        if (j == i) continue;
        std::vector<EvPtr> dominated{ev_not(pieces[j].nonempty)};
        for (size_t lj = 0; lj < pieces[j].extreme_paths.size(); ++lj) {
          EvPtr cmp = want_max
                          ? le_image_test(pieces[j].extreme_paths[lj], wi)
                          : le_image_test(wi, pieces[j].extreme_paths[lj]);
          dominated.push_back(ev_and(pieces[j].extreme_valid[lj], cmp));
        }
        sel.push_back(ev_or_all(dominated));
      }
      for (int p = 0; p < np; ++p) {
        for (int q = 0; q < np; ++q) {
          for (auto& chain : le_chains(p, q, np)) {
            Conjunct c;
            c.push_back({path_test(ev_and_all(sel)), u, u});
            c.push_back({path_test(tests_all_bounded), w, w});
            PathPtr link = want_max ? path_cat(wi, chain) : path_cat(wi, converse(chain));
            c.push_back({link, u, w});
            orient_conjunct(c);
            out.add(std::move(c));
          }
        }
      }
      budget.check(atom_count(out.cs));
    }
  }
  out.subsume();
  return std::move(out.cs);
}

// ---------------------------------------------------------------------------
// Recursive translation

struct VarTable {
  std::vector<std::string> names;  // slot index -> current owner (debugging)
  std::map<std::string, std::vector<int>> scopes;

  int index_of(const std::string& v) const {
    auto it = scopes.find(v);
    if (it == scopes.end() || it->second.empty())
      throw Error(ErrorKind::Internal, "unbound translation variable " + v);
    return it->second.back();
  }
};

struct Translator {
  const Signature& sig;
  Budget budget;
  VarTable vars;
  int free_count = 0;

  int nvars() const { return (int)vars.names.size(); }

  std::vector<Conjunct> translate(const FoPtr& f, bool negated, int depth);
  std::vector<Conjunct> quantified(const std::string& z, const FoPtr& body, bool universal,
                                   int depth);
};

// Splits a universal body into (C, bound atom, direction); the body must be
// a disjunction whose only z-atom disjunct is a single le-atom.
struct BoundPattern {
  FoPtr c;  // antecedent (may contain quantifiers)
  std::string w;
  bool le_zw;
};

void flatten_or(const FoPtr& f, std::vector<FoPtr>& out) {
  if (f->kind == FoKind::Or) {
    flatten_or(f->lhs, out);
    flatten_or(f->rhs, out);
  } else if (f->kind == FoKind::Implies) {
    out.push_back(fo_not(f->lhs));
    flatten_or(f->rhs, out);
  } else {
    out.push_back(f);
  }
}

std::optional<BoundPattern> match_bounded(const FoPtr& body, const std::string& z) {
  std::vector<FoPtr> parts;
  flatten_or(body, parts);
  int le_at = -1;
  for (int i = 0; i < (int)parts.size(); ++i) {
    bool has_z = std::binary_search(parts[i]->free_sorted.begin(),
                                    parts[i]->free_sorted.end(), z);
    if (!has_z) continue;
    if (parts[i]->kind == FoKind::Le &&
        (parts[i]->var == z) != (parts[i]->var2 == z)) {  // exactly one side is z
      if (le_at != -1) return std::nullopt;
      le_at = i;
    }
  }
  if (le_at == -1) return std::nullopt;
  BoundPattern out;
  out.le_zw = parts[le_at]->var == z;
  out.w = out.le_zw ? parts[le_at]->var2 : parts[le_at]->var;
  std::vector<FoPtr> rest;
  for (int i = 0; i < (int)parts.size(); ++i)
    if (i != le_at) rest.push_back(fo_not(parts[i]));
  if (rest.empty()) return std::nullopt;
  out.c = fo_and_all(rest);
  if (std::binary_search(out.c->free_sorted.begin(), out.c->free_sorted.end(), z) == false)
    return std::nullopt;
  return out;
}

std::vector<Conjunct> Translator::quantified(const std::string& z, const FoPtr& body,
                                             bool universal, int depth) {
  if (!std::binary_search(body->free_sorted.begin(), body->free_sorted.end(), z))
    return translate(body, false, depth);  // inert quantifier

  int slot = free_count + depth;
  while (nvars() <= slot) vars.names.push_back("");
  vars.names[slot] = z;
  vars.scopes[z].push_back(slot);

  std::vector<Conjunct> result;
  if (!universal) {
    std::vector<Conjunct> d = translate(body, false, depth + 1);
    result = eliminate(std::move(d), slot, nvars(), sig, budget);
  } else {
    auto pattern = match_bounded(body, z);
    bool done = false;
    if (pattern) {
      int w_slot = vars.index_of(pattern->w);
      std::vector<Conjunct> c_dnf = translate(pattern->c, false, depth + 1);
      auto bounded = eliminate_bounded_forall(c_dnf, slot, w_slot, pattern->le_zw, nvars(),
                                              sig, budget);
      if (bounded) {
        result = std::move(*bounded);
        done = true;
      }
    }
    if (!done) {
      std::vector<Conjunct> d = translate(body, true, depth + 1);
      std::vector<Conjunct> e = eliminate(std::move(d), slot, nvars(), sig, budget);
      result = dnf_negate(e, nvars(), sig, budget);
    }
  }
  vars.scopes[z].pop_back();
  return result;
}

std::vector<Conjunct> Translator::translate(const FoPtr& f, bool negated, int depth) {
  int np = sig.processes.size();
  switch (f->kind) {
    case FoKind::Or:
      return negated ? dnf_and(translate(f->lhs, true, depth), translate(f->rhs, true, depth),
                               nvars(), np, budget)
                     : dnf_or(translate(f->lhs, false, depth), translate(f->rhs, false, depth),
                              nvars(), np);
    case FoKind::And:
      return negated ? dnf_or(translate(f->lhs, true, depth), translate(f->rhs, true, depth),
                              nvars(), np)
                     : dnf_and(translate(f->lhs, false, depth),
                               translate(f->rhs, false, depth), nvars(), np, budget);
    case FoKind::Implies:
      return translate(fo_or(fo_not(f->lhs), f->rhs), negated, depth);
    case FoKind::Not:
      return translate(f->lhs, !negated, depth);
    case FoKind::Exists:
    case FoKind::Forall: {
      // A negation flips the quantifier and moves onto the body.
      bool universal = (f->kind == FoKind::Forall) != negated;
      FoPtr body = negated ? fo_not(f->lhs) : f->lhs;
      return quantified(f->var, body, universal, depth);
    }
    default: {
      int src = vars.index_of(f->var);
      int dst = f->var2.empty() ? src : vars.index_of(f->var2);
      auto out = atomic_conjuncts(f, negated, src, dst, sig);
      for (auto& c : out) orient_conjunct(c);
      return out;
    }
  }
}

}  // namespace

GuardedDnf translate_atomic(const FoPtr& atom, bool negated,
                            const std::vector<std::string>& vars, const Signature& sig) {
  GuardedDnf out;
  out.vars = vars;
  auto idx = [&](const std::string& v) {
    int i = out.var_index(v);
    if (i < 0) throw Error(ErrorKind::Internal, "variable missing from translation order");
    return i;
  };
  int src = idx(atom->var);
  int dst = atom->var2.empty() ? src : idx(atom->var2);
  out.conjuncts = atomic_conjuncts(atom, negated, src, dst, sig);
  return out;
}

GuardedDnf eliminate_exists(GuardedDnf d, int x_index, const Signature& sig,
                            TranslateLimits limits) {
  Budget budget{limits.max_atoms};
  d.conjuncts = eliminate(std::move(d.conjuncts), x_index, (int)d.vars.size(), sig, budget);
  return d;
}

namespace {

std::vector<std::string> ordered_free_vars(const FoPtr& f) {
  std::vector<std::string> order;
  std::function<void(const FoPtr&)> walk = [&](const FoPtr& g) {
    auto note = [&](const std::string& v) {
      if (!v.empty() && std::find(order.begin(), order.end(), v) == order.end())
        order.push_back(v);
    };
    switch (g->kind) {
      case FoKind::ProcTest:
      case FoKind::LabelTest:
        note(g->var);
        return;
      case FoKind::Eq:
      case FoKind::ProcEdge:
      case FoKind::MsgEdge:
      case FoKind::Le:
        note(g->var);
        note(g->var2);
        return;
      default:
        if (g->lhs) walk(g->lhs);
        if (g->rhs) walk(g->rhs);
        return;
    }
  };
  walk(f);
  std::vector<std::string> out;
  for (auto& v : order)
    if (std::binary_search(f->free_sorted.begin(), f->free_sorted.end(), v)) out.push_back(v);
  return out;
}

// Bound variables must not shadow a variable that is in scope (the slot
// table keys on names); rename shadowing binders apart.
FoPtr rename_apart(const FoPtr& f) {
  std::set<std::string> used;
  std::function<void(const FoPtr&)> collect = [&](const FoPtr& g) {
    if (!g->var.empty()) used.insert(g->var);
    if (!g->var2.empty()) used.insert(g->var2);
    if (g->lhs) collect(g->lhs);
    if (g->rhs) collect(g->rhs);
  };
  collect(f);

  std::function<FoPtr(const FoPtr&, std::map<std::string, std::string>&,
                      std::set<std::string>&)>
      go = [&](const FoPtr& g, std::map<std::string, std::string>& sub,
               std::set<std::string>& in_scope) -> FoPtr {
    auto rn = [&](const std::string& v) {
      auto it = sub.find(v);
      return it == sub.end() ? v : it->second;
    };
    switch (g->kind) {
      case FoKind::ProcTest: return fo_proc(g->proc, rn(g->var));
      case FoKind::LabelTest: return fo_label(g->label, rn(g->var));
      case FoKind::Eq: return fo_eq(rn(g->var), rn(g->var2));
      case FoKind::ProcEdge: return fo_edge(rn(g->var), rn(g->var2));
      case FoKind::MsgEdge: return fo_msg(rn(g->var), rn(g->var2));
      case FoKind::Le: return fo_le(rn(g->var), rn(g->var2));
      case FoKind::Or: return fo_or(go(g->lhs, sub, in_scope), go(g->rhs, sub, in_scope));
      case FoKind::And: return fo_and(go(g->lhs, sub, in_scope), go(g->rhs, sub, in_scope));
      case FoKind::Implies:
        return fo_implies(go(g->lhs, sub, in_scope), go(g->rhs, sub, in_scope));
      case FoKind::Not: return fo_not(go(g->lhs, sub, in_scope));
      case FoKind::Exists:
      case FoKind::Forall: {
        std::string name = g->var;
        std::string fresh = name;
        if (in_scope.count(name)) {
          int k = 2;
          do fresh = name + "_" + std::to_string(k++);
          while (used.count(fresh));
          used.insert(fresh);
        }
        auto saved = sub.find(name) != sub.end() ? std::optional(sub[name]) : std::nullopt;
        sub[name] = fresh;
        bool added = in_scope.insert(fresh).second;
        FoPtr body = go(g->lhs, sub, in_scope);
        if (added) in_scope.erase(fresh);
        if (saved)
          sub[name] = *saved;
        else
          sub.erase(name);
        return g->kind == FoKind::Exists ? fo_exists(fresh, body) : fo_forall(fresh, body);
      }
    }
    return g;
  };
  std::map<std::string, std::string> sub;
  std::set<std::string> in_scope(f->free_sorted.begin(), f->free_sorted.end());
  return go(f, sub, in_scope);
}

}  // namespace

GuardedDnf translate_formula(const FoPtr& phi, const Signature& sig, TranslateLimits limits) {
  if (phi->free_sorted.empty())
    throw Error(ErrorKind::Internal, "translate_formula needs at least one free variable");

  FoPtr f = rename_apart(phi);
  std::vector<std::string> frees = ordered_free_vars(f);

  Translator tr{sig, Budget{limits.max_atoms}, {}, (int)frees.size()};
  for (int i = 0; i < (int)frees.size(); ++i) {
    tr.vars.names.push_back(frees[i]);
    tr.vars.scopes[frees[i]].push_back(i);
  }

  std::vector<Conjunct> cs = tr.translate(f, false, 0);
  orient(cs);

  GuardedDnf out;
  out.vars = frees;
  for (auto& c : cs)
    for (auto& a : c)
      if (a.src >= (int)frees.size() || a.dst >= (int)frees.size())
        throw Error(ErrorKind::Internal, "translation left a bound-variable atom");
  out.conjuncts = std::move(cs);
  return out;
}

EvPtr translate_to_event(const FoPtr& phi, const Signature& sig, TranslateLimits limits) {
  if (phi->free_sorted.size() != 1)
    throw Error(ErrorKind::Internal, "translate_to_event expects exactly one free variable");
  // Absorb outer boolean structure and universal quantifiers at the event
  // level, where negation is native.
  switch (phi->kind) {
    case FoKind::Or:
      if (phi->lhs->free_sorted == phi->free_sorted &&
          phi->rhs->free_sorted == phi->free_sorted)
        return ev_or(translate_to_event(phi->lhs, sig, limits),
                     translate_to_event(phi->rhs, sig, limits));
      break;
    case FoKind::And:
      if (phi->lhs->free_sorted == phi->free_sorted &&
          phi->rhs->free_sorted == phi->free_sorted)
        return ev_and(translate_to_event(phi->lhs, sig, limits),
                      translate_to_event(phi->rhs, sig, limits));
      break;
    case FoKind::Implies:
      return translate_to_event(fo_or(fo_not(phi->lhs), phi->rhs), sig, limits);
    case FoKind::Not:
      return ev_not(translate_to_event(phi->lhs, sig, limits));
    case FoKind::Forall:
      if (std::binary_search(phi->lhs->free_sorted.begin(), phi->lhs->free_sorted.end(),
                             phi->var)) {
        // Try the bounded rule first through the DNF route; fall back to
        // the dual existential under an event-level negation.
        auto pattern = match_bounded(phi->lhs, phi->var);
        if (!pattern)
          return ev_not(translate_to_event(fo_exists(phi->var, fo_not(phi->lhs)), sig, limits));
      }
      break;
    default:
      break;
  }

  GuardedDnf d = translate_formula(phi, sig, limits);
  std::vector<EvPtr> disjuncts;
  for (auto& c : d.conjuncts) {
    std::vector<EvPtr> loops;
    for (auto& a : c) {
      if (a.src != 0 || a.dst != 0)
        throw Error(ErrorKind::Internal, "one-variable translation left a stray atom");
      loops.push_back(ev_loop(a.path));
    }
    disjuncts.push_back(ev_and_all(loops));
  }
  return ev_or_all(disjuncts);
}

SentPtr translate_to_sentence(const FoPtr& phi, const Signature& sig, TranslateLimits limits) {
  if (!phi->free_sorted.empty())
    throw Error(ErrorKind::Internal, "translate_to_sentence expects a sentence");
  switch (phi->kind) {
    case FoKind::Or:
      return sent_or(translate_to_sentence(phi->lhs, sig, limits),
                     translate_to_sentence(phi->rhs, sig, limits));
    case FoKind::And:
      return sent_and(translate_to_sentence(phi->lhs, sig, limits),
                      translate_to_sentence(phi->rhs, sig, limits));
    case FoKind::Implies:
      return sent_or(sent_not(translate_to_sentence(phi->lhs, sig, limits)),
                     translate_to_sentence(phi->rhs, sig, limits));
    case FoKind::Not:
      return sent_not(translate_to_sentence(phi->lhs, sig, limits));
    case FoKind::Exists: {
      if (!std::binary_search(phi->lhs->free_sorted.begin(), phi->lhs->free_sorted.end(),
                              phi->var))
        return translate_to_sentence(phi->lhs, sig, limits);
      return sent_e(translate_to_event(phi->lhs, sig, limits));
    }
    case FoKind::Forall: {
      if (!std::binary_search(phi->lhs->free_sorted.begin(), phi->lhs->free_sorted.end(),
                              phi->var))
        return translate_to_sentence(phi->lhs, sig, limits);
      return sent_not(sent_e(translate_to_event(fo_not(phi->lhs), sig, limits)));
    }
    default:
      throw Error(ErrorKind::Internal, "not a sentence");
  }
}

PathUnion translate_to_path(const FoPtr& phi, const Signature& sig, TranslateLimits limits) {
  if (phi->free_sorted.size() != 2)
    throw Error(ErrorKind::Internal, "translate_to_path expects exactly two free variables");
  GuardedDnf d = translate_formula(phi, sig, limits);
  int np = sig.processes.size();

  PathUnion out;
  for (auto& c : d.conjuncts) {
    // Fold self-pair atoms into tests decorating the cross atoms; a
    // conjunct without any cross atom needs the jump expansion.
    std::vector<EvPtr> at_src, at_dst;
    std::vector<PathPtr> cross;
    for (auto& a : c) {
      if (a.src == 0 && a.dst == 1) {
        cross.push_back(a.path);
      } else if (a.src == 0 && a.dst == 0) {
        at_src.push_back(ev_loop(a.path));
      } else if (a.src == 1 && a.dst == 1) {
        at_dst.push_back(ev_loop(a.path));
      } else {
        throw Error(ErrorKind::Internal, "two-variable translation left a stray atom");
      }
    }
    PathPtr src_test = path_test(ev_and_all(at_src));
    PathPtr dst_test = path_test(ev_and_all(at_dst));
    if (cross.empty()) {
      for (int p = 0; p < np; ++p)
        for (int q = 0; q < np; ++q)
          out.terms.push_back({path_cat_all({src_test, path_jump(p, q), dst_test})});
    } else {
      std::vector<PathPtr> term;
      term.reserve(cross.size());
      for (auto& path : cross) term.push_back(path_cat_all({src_test, path, dst_test}));
      out.terms.push_back(std::move(term));
    }
    if ((long long)out.terms.size() > limits.max_atoms) throw ResourceLimitError("fo2pdl/shape");
  }
  return out;
}

bool eval_dnf(PdlEvalContext& ctx, const GuardedDnf& d, const std::vector<EventId>& binding) {
  for (auto& c : d.conjuncts) {
    bool all = true;
    for (auto& a : c) {
      if (!ctx.path(a.path).contains(binding[a.src], binding[a.dst])) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

EventRel eval_path_union(PdlEvalContext& ctx, const PathUnion& u) {
  int n = ctx.msc().event_count();
  EventRel acc(n);
  for (auto& term : u.terms) {
    EventRel cur = EventRel::full(n);
    for (auto& path : term) cur = cur.intersect(ctx.path(path));
    acc = acc.unite(cur);
  }
  return acc;
}

std::string print_dnf(const GuardedDnf& d, const Signature& sig) {
  std::string out = "(dnf";
  for (auto& c : d.conjuncts) {
    out += " (conj";
    for (auto& a : c)
      out += " (atom " + d.vars[a.src] + " " + d.vars[a.dst] + " " + print_pdl(a.path, sig) + ")";
    out += ")";
  }
  out += ")";
  return out;
}

}  // namespace msc
