#include "msc/pdl.hpp"

#include <algorithm>
#include <mutex>

#include "msc/sexpr.hpp"

namespace msc {

// ---------------------------------------------------------------------------
// Interner: structurally equal nodes share one allocation, so equality is
// pointer equality and memo tables can key on uids.  Interned nodes stay
// alive for the process lifetime.

namespace {

size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

struct EvKey {
  PdlEventKind kind;
  int proc, label;
  uint64_t lhs, rhs, path;
  bool operator==(const EvKey& o) const {
    return kind == o.kind && proc == o.proc && label == o.label && lhs == o.lhs &&
           rhs == o.rhs && path == o.path;
  }
};
struct PathKey {
  PdlPathKind kind;
  int p, q;
  uint64_t guard, lhs, rhs;
  bool operator==(const PathKey& o) const {
    return kind == o.kind && p == o.p && q == o.q && guard == o.guard && lhs == o.lhs &&
           rhs == o.rhs;
  }
};
struct SentKey {
  PdlSentenceKind kind;
  uint64_t event, lhs, rhs;
  bool operator==(const SentKey& o) const {
    return kind == o.kind && event == o.event && lhs == o.lhs && rhs == o.rhs;
  }
};

struct EvKeyHash {
  size_t operator()(const EvKey& k) const {
    size_t h = hash_mix((size_t)k.kind, (size_t)(k.proc + 3) * 37 + k.label + 11);
    h = hash_mix(h, k.lhs);
    h = hash_mix(h, k.rhs);
    return hash_mix(h, k.path);
  }
};
struct PathKeyHash {
  size_t operator()(const PathKey& k) const {
    size_t h = hash_mix((size_t)k.kind + 101, (size_t)(k.p + 3) * 37 + k.q + 11);
    h = hash_mix(h, k.guard);
    h = hash_mix(h, k.lhs);
    return hash_mix(h, k.rhs);
  }
};
struct SentKeyHash {
  size_t operator()(const SentKey& k) const {
    size_t h = hash_mix((size_t)k.kind + 501, k.event);
    h = hash_mix(h, k.lhs);
    return hash_mix(h, k.rhs);
  }
};

struct Interner {
  std::mutex mu;
  uint64_t next_uid = 1;
  std::unordered_map<EvKey, EvPtr, EvKeyHash> events;
  std::unordered_map<PathKey, PathPtr, PathKeyHash> paths;
  std::unordered_map<SentKey, SentPtr, SentKeyHash> sentences;
  std::unordered_map<uint64_t, MinMaxImage> minmax_registry;

  static Interner& get() {
    static Interner instance;
    return instance;
  }
};

uint64_t uid_of(const EvPtr& p) { return p ? p->uid : 0; }
uint64_t uid_of(const PathPtr& p) { return p ? p->uid : 0; }
uint64_t uid_of(const SentPtr& p) { return p ? p->uid : 0; }

EvPtr intern_event(PdlEventKind kind, int proc, int label, EvPtr lhs, EvPtr rhs,
                   PathPtr path) {
  Interner& in = Interner::get();
  std::lock_guard<std::mutex> lock(in.mu);
  EvKey key{kind, proc, label, uid_of(lhs), uid_of(rhs), uid_of(path)};
  auto it = in.events.find(key);
  if (it != in.events.end()) return it->second;
  auto n = std::make_shared<PdlEventNode>();
  n->kind = kind;
  n->proc = proc;
  n->label = label;
  n->lhs = lhs;
  n->rhs = rhs;
  n->path = path;
  n->frag = (kind == PdlEventKind::Loop ? kFragLoop : 0u) | (lhs ? lhs->frag : 0u) |
            (rhs ? rhs->frag : 0u) | (path ? path->frag : 0u);
  n->size = 1 + (lhs ? lhs->size : 0) + (rhs ? rhs->size : 0) + (path ? path->size : 0);
  n->hash = EvKeyHash()(key);
  n->uid = in.next_uid++;
  in.events.emplace(key, n);
  return n;
}

PathPtr intern_path(PdlPathKind kind, int p, int q, EvPtr guard, PathPtr lhs, PathPtr rhs) {
  Interner& in = Interner::get();
  std::lock_guard<std::mutex> lock(in.mu);
  PathKey key{kind, p, q, uid_of(guard), uid_of(lhs), uid_of(rhs)};
  auto it = in.paths.find(key);
  if (it != in.paths.end()) return it->second;
  auto n = std::make_shared<PdlPathNode>();
  n->kind = kind;
  n->p = p;
  n->q = q;
  n->guard = guard;
  n->lhs = lhs;
  n->rhs = rhs;
  unsigned own = kind == PdlPathKind::Union        ? kFragUnion
                 : kind == PdlPathKind::Inter      ? kFragInter
                 : kind == PdlPathKind::Complement ? kFragComplement
                                                   : 0u;
  n->frag = own | (guard ? guard->frag : 0u) | (lhs ? lhs->frag : 0u) | (rhs ? rhs->frag : 0u);
  n->size = 1 + (guard ? guard->size : 0) + (lhs ? lhs->size : 0) + (rhs ? rhs->size : 0);
  n->hash = PathKeyHash()(key);
  n->uid = in.next_uid++;
  in.paths.emplace(key, n);
  return n;
}

SentPtr intern_sentence(PdlSentenceKind kind, EvPtr event, SentPtr lhs, SentPtr rhs) {
  Interner& in = Interner::get();
  std::lock_guard<std::mutex> lock(in.mu);
  SentKey key{kind, uid_of(event), uid_of(lhs), uid_of(rhs)};
  auto it = in.sentences.find(key);
  if (it != in.sentences.end()) return it->second;
  auto n = std::make_shared<PdlSentenceNode>();
  n->kind = kind;
  n->event = event;
  n->lhs = lhs;
  n->rhs = rhs;
  n->frag = (event ? event->frag : 0u) | (lhs ? lhs->frag : 0u) | (rhs ? rhs->frag : 0u);
  n->size = 1 + (event ? event->size : 0) + (lhs ? lhs->size : 0) + (rhs ? rhs->size : 0);
  n->hash = SentKeyHash()(key);
  n->uid = in.next_uid++;
  in.sentences.emplace(key, n);
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Constructors with size-reducing rewrites.  Every rewrite must be a
// semantic equivalence; the differential suites exercise them heavily.

EvPtr ev_true() { return intern_event(PdlEventKind::True, -1, -1, nullptr, nullptr, nullptr); }
EvPtr ev_false() { return intern_event(PdlEventKind::False, -1, -1, nullptr, nullptr, nullptr); }
EvPtr ev_proc(int p) {
  return intern_event(PdlEventKind::ProcTest, p, -1, nullptr, nullptr, nullptr);
}
EvPtr ev_label(int a) {
  return intern_event(PdlEventKind::LabelTest, -1, a, nullptr, nullptr, nullptr);
}

EvPtr ev_or(EvPtr a, EvPtr b) {
  if (a->kind == PdlEventKind::True || b->kind == PdlEventKind::True) return ev_true();
  if (a->kind == PdlEventKind::False) return b;
  if (b->kind == PdlEventKind::False) return a;
  if (a == b) return a;
  return intern_event(PdlEventKind::Or, -1, -1, a, b, nullptr);
}

EvPtr ev_not(EvPtr a) {
  if (a->kind == PdlEventKind::Not) return a->lhs;
  if (a->kind == PdlEventKind::True) return ev_false();
  if (a->kind == PdlEventKind::False) return ev_true();
  return intern_event(PdlEventKind::Not, -1, -1, a, nullptr, nullptr);
}

EvPtr ev_and(EvPtr a, EvPtr b) { return ev_not(ev_or(ev_not(a), ev_not(b))); }
EvPtr ev_implies(EvPtr a, EvPtr b) { return ev_or(ev_not(a), b); }
EvPtr ev_iff(EvPtr a, EvPtr b) { return ev_and(ev_implies(a, b), ev_implies(b, a)); }

EvPtr ev_ex(PathPtr pi, EvPtr phi) {
  if (phi->kind == PdlEventKind::False) return ev_false();
  if (pi->kind == PdlPathKind::Test) return ev_and(pi->guard, phi);
  return intern_event(PdlEventKind::Ex, -1, -1, phi, nullptr, pi);
}
EvPtr ev_ex(PathPtr pi) { return ev_ex(std::move(pi), ev_true()); }

EvPtr ev_loop(PathPtr pi) {
  if (pi->kind == PdlPathKind::Test) return pi->guard;
  return intern_event(PdlEventKind::Loop, -1, -1, nullptr, nullptr, pi);
}

EvPtr ev_or_all(const std::vector<EvPtr>& parts) {
  if (parts.empty()) return ev_false();
  EvPtr acc = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) acc = ev_or(acc, parts[i]);
  return acc;
}
EvPtr ev_and_all(const std::vector<EvPtr>& parts) {
  if (parts.empty()) return ev_true();
  EvPtr acc = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) acc = ev_and(acc, parts[i]);
  return acc;
}

PathPtr path_next() { return intern_path(PdlPathKind::Next, -1, -1, nullptr, nullptr, nullptr); }
PathPtr path_prev() { return intern_path(PdlPathKind::Prev, -1, -1, nullptr, nullptr, nullptr); }
PathPtr path_msg(int p, int q) {
  return intern_path(PdlPathKind::Msg, p, q, nullptr, nullptr, nullptr);
}
PathPtr path_msg_inv(int p, int q) {
  return intern_path(PdlPathKind::MsgInv, p, q, nullptr, nullptr, nullptr);
}

PathPtr path_guard_right(EvPtr phi) {
  if (phi->kind == PdlEventKind::False) return path_next();
  return intern_path(PdlPathKind::GuardRight, -1, -1, phi, nullptr, nullptr);
}
PathPtr path_guard_left(EvPtr phi) {
  if (phi->kind == PdlEventKind::False) return path_prev();
  return intern_path(PdlPathKind::GuardLeft, -1, -1, phi, nullptr, nullptr);
}
PathPtr path_jump(int p, int q) {
  return intern_path(PdlPathKind::Jump, p, q, nullptr, nullptr, nullptr);
}
PathPtr path_test(EvPtr phi) {
  return intern_path(PdlPathKind::Test, -1, -1, phi, nullptr, nullptr);
}

namespace {
bool is_test_true(const PathPtr& p) {
  return p->kind == PdlPathKind::Test && p->guard->kind == PdlEventKind::True;
}
bool is_test_false(const PathPtr& p) {
  return p->kind == PdlPathKind::Test && p->guard->kind == PdlEventKind::False;
}
}  // namespace

PathPtr path_cat(PathPtr a, PathPtr b) {
  if (is_test_true(a)) return b;
  if (is_test_true(b)) return a;
  if (is_test_false(a)) return a;
  if (is_test_false(b)) return b;
  if (a->kind == PdlPathKind::Concat)  // keep concatenations right-nested
    return path_cat(a->lhs, path_cat(a->rhs, b));
  return intern_path(PdlPathKind::Concat, -1, -1, nullptr, a, b);
}

PathPtr path_cat_all(const std::vector<PathPtr>& parts) {
  if (parts.empty()) return path_test(ev_true());
  PathPtr acc = parts.back();
  for (int i = (int)parts.size() - 2; i >= 0; --i) acc = path_cat(parts[i], acc);
  return acc;
}

PathPtr path_union(PathPtr a, PathPtr b) {
  if (a == b) return a;
  if (is_test_false(a)) return b;
  if (is_test_false(b)) return a;
  return intern_path(PdlPathKind::Union, -1, -1, nullptr, a, b);
}
PathPtr path_inter(PathPtr a, PathPtr b) {
  if (a == b) return a;
  return intern_path(PdlPathKind::Inter, -1, -1, nullptr, a, b);
}
PathPtr path_complement(PathPtr a) {
  if (a->kind == PdlPathKind::Complement) return a->lhs;
  return intern_path(PdlPathKind::Complement, -1, -1, nullptr, a, nullptr);
}

PathPtr path_plus_right() { return path_guard_right(ev_true()); }
PathPtr path_plus_left() { return path_guard_left(ev_true()); }
PathPtr path_star_right() { return path_union(path_plus_right(), path_test(ev_true())); }

SentPtr sent_e(EvPtr phi) {
  return intern_sentence(PdlSentenceKind::Exists, phi, nullptr, nullptr);
}
SentPtr sent_or(SentPtr a, SentPtr b) {
  if (a == b) return a;
  return intern_sentence(PdlSentenceKind::Or, nullptr, a, b);
}
SentPtr sent_not(SentPtr a) {
  if (a->kind == PdlSentenceKind::Not) return a->lhs;
  return intern_sentence(PdlSentenceKind::Not, nullptr, a, nullptr);
}
SentPtr sent_and(SentPtr a, SentPtr b) { return sent_not(sent_or(sent_not(a), sent_not(b))); }

// ---------------------------------------------------------------------------
// Evaluation

PdlEvalContext::PdlEvalContext(const Msc& m, PdlEvalLimits limits) : m_(m), limits_(limits) {}

bool PdlEvalContext::sentence(const SentPtr& s) {
  switch (s->kind) {
    case PdlSentenceKind::Exists: return event(s->event).any();
    case PdlSentenceKind::Or: return sentence(s->lhs) || sentence(s->rhs);
    case PdlSentenceKind::Not: return !sentence(s->lhs);
  }
  return false;
}

const EventSet& PdlEvalContext::event(const EvPtr& f) {
  auto it = ev_memo_.find(f->uid);
  if (it != ev_memo_.end()) return it->second;

  int n = m_.event_count();
  EventSet out(n);
  switch (f->kind) {
    case PdlEventKind::True:
      for (int e = 0; e < n; ++e) out.set(e);
      break;
    case PdlEventKind::False:
      break;
    case PdlEventKind::ProcTest:
      for (int e = 0; e < n; ++e)
        if (m_.loc(e) == f->proc) out.set(e);
      break;
    case PdlEventKind::LabelTest:
      for (int e = 0; e < n; ++e)
        if (m_.label(e) == f->label) out.set(e);
      break;
    case PdlEventKind::Or:
      out = event(f->lhs);
      out |= event(f->rhs);
      break;
    case PdlEventKind::Not:
      out = event(f->lhs);
      out.flip_all();
      break;
    case PdlEventKind::Ex: {
      const EventRel& rel = path(f->path);
      const EventSet& target = event(f->lhs);
      for (int e = 0; e < n; ++e)
        for (int g = rel.next_in_row(e, 0); g >= 0; g = rel.next_in_row(e, g + 1))
          if (target.test(g)) {
            out.set(e);
            break;
          }
      break;
    }
    case PdlEventKind::Loop:
      out = path(f->path).diagonal();
      break;
  }
  return ev_memo_.emplace(f->uid, std::move(out)).first->second;
}

const EventRel& PdlEvalContext::path(const PathPtr& p) {
  auto it = path_memo_.find(p->uid);
  if (it != path_memo_.end()) return it->second;
  if ((long long)path_memo_.size() >= limits_.max_relations)
    throw ResourceLimitError("eval-pdl");

  int n = m_.event_count();
  EventRel out(n);
  switch (p->kind) {
    case PdlPathKind::Next:
      for (int e = 0; e < n; ++e) {
        EventId f = m_.proc_next(e);
        if (f >= 0) out.set(e, f);
      }
      break;
    case PdlPathKind::Prev:
      for (int e = 0; e < n; ++e) {
        EventId f = m_.proc_prev(e);
        if (f >= 0) out.set(e, f);
      }
      break;
    case PdlPathKind::Msg:
      for (auto& [s, r] : m_.messages())
        if (m_.loc(s) == p->p && m_.loc(r) == p->q) out.set(s, r);
      break;
    case PdlPathKind::MsgInv:
      for (auto& [s, r] : m_.messages())
        if (m_.loc(s) == p->p && m_.loc(r) == p->q) out.set(r, s);
      break;
    case PdlPathKind::GuardRight: {
      const EventSet& ok = event(p->guard);
      for (int proc = 0; proc < m_.processes().size(); ++proc) {
        const auto& chain = m_.proc_events(proc);
        for (size_t i = 0; i < chain.size(); ++i)
          for (size_t j = i + 1; j < chain.size(); ++j) {
            out.set(chain[i], chain[j]);
            if (!ok.test(chain[j])) break;  // chain[j] blocks longer hops
          }
      }
      break;
    }
    case PdlPathKind::GuardLeft: {
      const EventSet& ok = event(p->guard);
      for (int proc = 0; proc < m_.processes().size(); ++proc) {
        const auto& chain = m_.proc_events(proc);
        for (int i = 0; i < (int)chain.size(); ++i)
          for (int j = i - 1; j >= 0; --j) {
            out.set(chain[i], chain[j]);
            if (!ok.test(chain[j])) break;
          }
      }
      break;
    }
    case PdlPathKind::Jump:
      for (EventId e : m_.proc_events(p->p))
        for (EventId f : m_.proc_events(p->q)) out.set(e, f);
      break;
    case PdlPathKind::Test: {
      const EventSet& ok = event(p->guard);
      for (int e = ok.next(0); e >= 0; e = ok.next(e + 1)) out.set(e, e);
      break;
    }
    case PdlPathKind::Concat:
      out = path(p->lhs).compose(path(p->rhs));
      break;
    case PdlPathKind::Union:
      out = path(p->lhs).unite(path(p->rhs));
      break;
    case PdlPathKind::Inter:
      out = path(p->lhs).intersect(path(p->rhs));
      break;
    case PdlPathKind::Complement:
      out = path(p->lhs).complement();
      break;
  }
  return path_memo_.emplace(p->uid, std::move(out)).first->second;
}

bool eval_sentence(const Msc& m, const SentPtr& s) { return PdlEvalContext(m).sentence(s); }
EventSet eval_event(const Msc& m, const EvPtr& f) { return PdlEvalContext(m).event(f); }
EventRel eval_path(const Msc& m, const PathPtr& p) { return PdlEvalContext(m).path(p); }

// ---------------------------------------------------------------------------
// Converse

PathPtr converse(const PathPtr& p) {
  switch (p->kind) {
    case PdlPathKind::Next: return path_prev();
    case PdlPathKind::Prev: return path_next();
    case PdlPathKind::Msg: return path_msg_inv(p->p, p->q);
    case PdlPathKind::MsgInv: return path_msg(p->p, p->q);
    case PdlPathKind::GuardRight: return path_guard_left(p->guard);
    case PdlPathKind::GuardLeft: return path_guard_right(p->guard);
    case PdlPathKind::Jump: return path_jump(p->q, p->p);
    case PdlPathKind::Test: return p;
    case PdlPathKind::Concat: return path_cat(converse(p->rhs), converse(p->lhs));
    case PdlPathKind::Union: return path_union(converse(p->lhs), converse(p->rhs));
    case PdlPathKind::Inter: return path_inter(converse(p->lhs), converse(p->rhs));
    case PdlPathKind::Complement: return path_complement(converse(p->lhs));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Comp

CompRel comp_compose(const CompRel& a, const CompRel& b) {
  if (a.kind == CompRel::Empty || b.kind == CompRel::Empty) return {CompRel::Empty, -1, -1};
  if (a.kind == CompRel::Id) return b;
  if (b.kind == CompRel::Id) return a;
  if (a.q == b.p) return {CompRel::Single, a.p, b.q};
  return {CompRel::Empty, -1, -1};
}

CompRel comp_relation(const PathPtr& p, int process_count) {
  if (p->frag & (kFragUnion | kFragInter | kFragComplement))
    throw Error(ErrorKind::UnsupportedFragment,
                "Comp is defined on the Loop fragment only");
  switch (p->kind) {
    case PdlPathKind::Next:
    case PdlPathKind::Prev:
    case PdlPathKind::GuardRight:
    case PdlPathKind::GuardLeft:
    case PdlPathKind::Test:
      return {CompRel::Id, -1, -1};
    case PdlPathKind::Msg:
      return {CompRel::Single, p->p, p->q};
    case PdlPathKind::MsgInv:
      return {CompRel::Single, p->q, p->p};
    case PdlPathKind::Jump:
      return {CompRel::Single, p->p, p->q};
    case PdlPathKind::Concat:
      return comp_compose(comp_relation(p->lhs, process_count),
                          comp_relation(p->rhs, process_count));
    default:
      throw Error(ErrorKind::Internal, "unreachable comp case");
  }
}

// ---------------------------------------------------------------------------
// min / max path formulas

namespace {

void require_loop_fragment(const PathPtr& p, const char* what) {
  if (p->frag & (kFragUnion | kFragInter | kFragComplement))
    throw Error(ErrorKind::UnsupportedFragment,
                std::string(what) + " is defined on the Loop fragment only");
}

// min(pi . {psi}?) by structural induction; the trailing test is carried.
PathPtr min_carry(const PathPtr& pi, const EvPtr& psi) {
  switch (pi->kind) {
    case PdlPathKind::Next:
    case PdlPathKind::Prev:
    case PdlPathKind::Msg:
    case PdlPathKind::MsgInv:
    case PdlPathKind::Test:
      return path_cat(pi, path_test(psi));
    case PdlPathKind::GuardRight:
      return path_cat(path_guard_right(ev_and(pi->guard, ev_not(psi))), path_test(psi));
    case PdlPathKind::GuardLeft:
      return path_cat(
          pi,
          path_test(ev_and(psi, ev_or(ev_not(pi->guard),
                                      ev_not(ev_ex(path_guard_left(pi->guard), psi))))));
    case PdlPathKind::Jump:
      return path_cat(pi, path_test(ev_and(psi, ev_not(ev_ex(path_plus_left(), psi)))));
    case PdlPathKind::Concat:
      return path_cat(min_carry(pi->lhs, ev_ex(pi->rhs, psi)), min_carry(pi->rhs, psi));
    default:
      throw Error(ErrorKind::Internal, "unreachable min case");
  }
}

// Mirror of min_carry.
PathPtr max_carry(const PathPtr& pi, const EvPtr& psi) {
  switch (pi->kind) {
    case PdlPathKind::Next:
    case PdlPathKind::Prev:
    case PdlPathKind::Msg:
    case PdlPathKind::MsgInv:
    case PdlPathKind::Test:
      return path_cat(pi, path_test(psi));
    case PdlPathKind::GuardRight:
      return path_cat(
          pi,
          path_test(ev_and(psi, ev_or(ev_not(pi->guard),
                                      ev_not(ev_ex(path_guard_right(pi->guard), psi))))));
    case PdlPathKind::GuardLeft:
      return path_cat(path_guard_left(ev_and(pi->guard, ev_not(psi))), path_test(psi));
    case PdlPathKind::Jump:
      return path_cat(pi, path_test(ev_and(psi, ev_not(ev_ex(path_plus_right(), psi)))));
    case PdlPathKind::Concat:
      return path_cat(max_carry(pi->lhs, ev_ex(pi->rhs, psi)), max_carry(pi->rhs, psi));
    default:
      throw Error(ErrorKind::Internal, "unreachable max case");
  }
}

void register_minmax(const PathPtr& image, MinMaxKind kind, const PathPtr& core) {
  Interner& in = Interner::get();
  std::lock_guard<std::mutex> lock(in.mu);
  in.minmax_registry.emplace(image->uid, MinMaxImage{kind, core});
}

}  // namespace

PathPtr min_path(const PathPtr& pi) {
  require_loop_fragment(pi, "min");
  PathPtr out = min_carry(pi, ev_true());
  register_minmax(out, MinMaxKind::Min, pi);
  return out;
}

PathPtr max_path(const PathPtr& pi) {
  require_loop_fragment(pi, "max");
  PathPtr out = max_carry(pi, ev_true());
  register_minmax(out, MinMaxKind::Max, pi);
  return out;
}

std::optional<MinMaxImage> minmax_image_of(const PathPtr& p) {
  Interner& in = Interner::get();
  std::lock_guard<std::mutex> lock(in.mu);
  auto it = in.minmax_registry.find(p->uid);
  if (it == in.minmax_registry.end()) return std::nullopt;
  return it->second;
}

void note_minmax_image(const PathPtr& image, MinMaxKind kind, const PathPtr& core) {
  register_minmax(image, kind, core);
}

// ---------------------------------------------------------------------------
// Complement decomposition: everything strictly before the least image,
// strictly after the greatest, inside the interval but not backwards
// reachable, plus the process pairs without any image.

std::vector<PathPtr> complement_decompose(const PathPtr& pi, int process_count) {
  require_loop_fragment(pi, "complement decomposition");
  std::vector<PathPtr> out;
  out.reserve(process_count * process_count + 3);
  out.push_back(path_cat(min_path(pi), path_plus_left()));
  out.push_back(path_cat(max_path(pi), path_plus_right()));
  out.push_back(
      path_cat(pi, path_cat(path_plus_right(), path_test(ev_not(ev_ex(converse(pi)))))));
  for (int p = 0; p < process_count; ++p)
    for (int q = 0; q < process_count; ++q)
      out.push_back(path_cat(path_test(ev_not(ev_ex(pi, ev_proc(q)))), path_jump(p, q)));
  return out;
}

// ---------------------------------------------------------------------------
// PDL -> FO^3: the translation reuses the fixed variables x, y, z,
// requantifying them as it descends.

namespace {

const char* kVars[3] = {"x", "y", "z"};

std::string other_var(const std::string& u) {
  for (auto* v : kVars)
    if (u != v) return v;
  return "y";
}
std::string third_var(const std::string& u, const std::string& v) {
  for (auto* w : kVars)
    if (u != w && v != w) return w;
  return "z";
}

FoPtr fo_true_at(const std::string& u) { return fo_or(fo_proc(0, u), fo_not(fo_proc(0, u))); }

FoPtr same_proc(const std::string& u, const std::string& v, int np) {
  std::vector<FoPtr> parts;
  for (int p = 0; p < np; ++p) parts.push_back(fo_and(fo_proc(p, u), fo_proc(p, v)));
  return fo_or_all(parts);
}

FoPtr lt_proc(const std::string& u, const std::string& v, int np) {
  return fo_and_all({fo_le(u, v), fo_not(fo_eq(u, v)), same_proc(u, v, np)});
}

FoPtr fo_of_event(const EvPtr& f, const std::string& u, int np);

FoPtr fo_of_path(const PathPtr& p, const std::string& u, const std::string& v, int np) {
  switch (p->kind) {
    case PdlPathKind::Next: return fo_edge(u, v);
    case PdlPathKind::Prev: return fo_edge(v, u);
    case PdlPathKind::Msg:
      return fo_and_all({fo_msg(u, v), fo_proc(p->p, u), fo_proc(p->q, v)});
    case PdlPathKind::MsgInv:
      return fo_and_all({fo_msg(v, u), fo_proc(p->p, v), fo_proc(p->q, u)});
    case PdlPathKind::GuardRight: {
      std::string w = third_var(u, v);
      return fo_and(lt_proc(u, v, np),
                    fo_forall(w, fo_implies(fo_and(lt_proc(u, w, np), lt_proc(w, v, np)),
                                            fo_of_event(p->guard, w, np))));
    }
    case PdlPathKind::GuardLeft: {
      std::string w = third_var(u, v);
      return fo_and(lt_proc(v, u, np),
                    fo_forall(w, fo_implies(fo_and(lt_proc(v, w, np), lt_proc(w, u, np)),
                                            fo_of_event(p->guard, w, np))));
    }
    case PdlPathKind::Jump:
      return fo_and(fo_proc(p->p, u), fo_proc(p->q, v));
    case PdlPathKind::Test:
      return fo_and(fo_eq(u, v), fo_of_event(p->guard, u, np));
    case PdlPathKind::Concat: {
      std::string w = third_var(u, v);
      return fo_exists(w, fo_and(fo_of_path(p->lhs, u, w, np), fo_of_path(p->rhs, w, v, np)));
    }
    case PdlPathKind::Union:
      return fo_or(fo_of_path(p->lhs, u, v, np), fo_of_path(p->rhs, u, v, np));
    case PdlPathKind::Inter:
      return fo_and(fo_of_path(p->lhs, u, v, np), fo_of_path(p->rhs, u, v, np));
    case PdlPathKind::Complement:
      return fo_not(fo_of_path(p->lhs, u, v, np));
  }
  throw Error(ErrorKind::Internal, "unreachable path case");
}

FoPtr fo_of_event(const EvPtr& f, const std::string& u, int np) {
  switch (f->kind) {
    case PdlEventKind::True: return fo_true_at(u);
    case PdlEventKind::False: return fo_not(fo_true_at(u));
    case PdlEventKind::ProcTest: return fo_proc(f->proc, u);
    case PdlEventKind::LabelTest: return fo_label(f->label, u);
    case PdlEventKind::Or:
      return fo_or(fo_of_event(f->lhs, u, np), fo_of_event(f->rhs, u, np));
    case PdlEventKind::Not: return fo_not(fo_of_event(f->lhs, u, np));
    case PdlEventKind::Ex: {
      std::string v = other_var(u);
      return fo_exists(v, fo_and(fo_of_path(f->path, u, v, np), fo_of_event(f->lhs, v, np)));
    }
    case PdlEventKind::Loop:
      return fo_of_path(f->path, u, u, np);
  }
  throw Error(ErrorKind::Internal, "unreachable event case");
}

}  // namespace

FoPtr pdl_to_fo_path(const PathPtr& p, const std::string& x, const std::string& y,
                     int process_count) {
  return fo_of_path(p, x, y, process_count);
}
FoPtr pdl_to_fo_event(const EvPtr& f, const std::string& x, int process_count) {
  return fo_of_event(f, x, process_count);
}
FoPtr pdl_to_fo(const SentPtr& s, int process_count) {
  switch (s->kind) {
    case PdlSentenceKind::Exists:
      return fo_exists("x", fo_of_event(s->event, "x", process_count));
    case PdlSentenceKind::Or:
      return fo_or(pdl_to_fo(s->lhs, process_count), pdl_to_fo(s->rhs, process_count));
    case PdlSentenceKind::Not:
      return fo_not(pdl_to_fo(s->lhs, process_count));
  }
  throw Error(ErrorKind::Internal, "unreachable sentence case");
}

// ---------------------------------------------------------------------------
// Parsing / printing

namespace {

EvPtr parse_event_node(const Sexpr& s, const Signature& sig);

PathPtr parse_path_node(const Sexpr& s, const Signature& sig) {
  if (s.is_atom) {
    if (s.atom == "next") return path_next();
    if (s.atom == "prev") return path_prev();
    if (s.atom == "plus+") return path_plus_right();
    if (s.atom == "star*") return path_star_right();
    throw SyntaxError("unknown path '" + s.atom + "'", s.line, s.column);
  }
  const std::string& op = s.head();
  auto proc_at = [&](size_t i) {
    int p = sig.processes.index_of(s.at(i).atom);
    if (p < 0) throw Error(ErrorKind::UnknownProcess, "unknown process " + s.at(i).atom);
    return p;
  };
  if (op == "msg" || op == "msg-inv") {
    if (s.size() != 3) throw SyntaxError("'" + op + "' expects two processes", s.line, s.column);
    int p = proc_at(1), q = proc_at(2);
    return op == "msg" ? path_msg(p, q) : path_msg_inv(p, q);
  }
  if (op == "jump") {
    if (s.size() != 3) throw SyntaxError("'jump' expects two processes", s.line, s.column);
    return path_jump(proc_at(1), proc_at(2));
  }
  if (op == "guard->" || op == "guard<-") {
    if (s.size() != 2) throw SyntaxError("'" + op + "' expects a formula", s.line, s.column);
    EvPtr g = parse_event_node(s.at(1), sig);
    return op == "guard->" ? path_guard_right(g) : path_guard_left(g);
  }
  if (op == "test") {
    if (s.size() != 2) throw SyntaxError("'test' expects a formula", s.line, s.column);
    return path_test(parse_event_node(s.at(1), sig));
  }
  if (op == "cat") {
    if (s.size() < 3) throw SyntaxError("'cat' expects at least two paths", s.line, s.column);
    std::vector<PathPtr> parts;
    for (size_t i = 1; i < s.size(); ++i) parts.push_back(parse_path_node(s.at(i), sig));
    return path_cat_all(parts);
  }
  if (op == "cup" || op == "cap") {
    if (s.size() != 3) throw SyntaxError("'" + op + "' expects two paths", s.line, s.column);
    PathPtr a = parse_path_node(s.at(1), sig);
    PathPtr b = parse_path_node(s.at(2), sig);
    return op == "cup" ? path_union(a, b) : path_inter(a, b);
  }
  if (op == "comp") {
    if (s.size() != 2) throw SyntaxError("'comp' expects a path", s.line, s.column);
    return path_complement(parse_path_node(s.at(1), sig));
  }
  throw SyntaxError("unknown path operator '" + op + "'", s.line, s.column);
}

EvPtr parse_event_node(const Sexpr& s, const Signature& sig) {
  if (s.is_atom) {
    if (s.atom == "true") return ev_true();
    if (s.atom == "false") return ev_false();
    throw SyntaxError("unknown event formula '" + s.atom + "'", s.line, s.column);
  }
  const std::string& op = s.head();
  if (op == "at") {
    if (s.size() != 2) throw SyntaxError("'at' expects a process", s.line, s.column);
    int p = sig.processes.index_of(s.at(1).atom);
    if (p < 0) throw Error(ErrorKind::UnknownProcess, "unknown process " + s.at(1).atom);
    return ev_proc(p);
  }
  if (op == "lab") {
    if (s.size() != 2) throw SyntaxError("'lab' expects a label", s.line, s.column);
    int a = sig.labels.index_of(s.at(1).atom);
    if (a < 0) throw Error(ErrorKind::UnknownLabel, "unknown label " + s.at(1).atom);
    return ev_label(a);
  }
  if (op == "or" || op == "and") {
    if (s.size() < 3)
      throw SyntaxError("'" + op + "' expects at least two formulas", s.line, s.column);
    EvPtr acc = parse_event_node(s.at(1), sig);
    for (size_t i = 2; i < s.size(); ++i) {
      EvPtr next = parse_event_node(s.at(i), sig);
      acc = op == "or" ? ev_or(acc, next) : ev_and(acc, next);
    }
    return acc;
  }
  if (op == "not") {
    if (s.size() != 2) throw SyntaxError("'not' expects a formula", s.line, s.column);
    return ev_not(parse_event_node(s.at(1), sig));
  }
  if (op == "implies") {
    if (s.size() != 3) throw SyntaxError("'implies' expects two formulas", s.line, s.column);
    return ev_implies(parse_event_node(s.at(1), sig), parse_event_node(s.at(2), sig));
  }
  if (op == "ex") {
    if (s.size() != 3) throw SyntaxError("'ex' expects a path and a formula", s.line, s.column);
    return ev_ex(parse_path_node(s.at(1), sig), parse_event_node(s.at(2), sig));
  }
  if (op == "loop") {
    if (s.size() != 2) throw SyntaxError("'loop' expects a path", s.line, s.column);
    return ev_loop(parse_path_node(s.at(1), sig));
  }
  throw SyntaxError("unknown event operator '" + op + "'", s.line, s.column);
}

SentPtr parse_sentence_node(const Sexpr& s, const Signature& sig) {
  if (s.is_atom) throw SyntaxError("expected a sentence", s.line, s.column);
  const std::string& op = s.head();
  if (op == "E") {
    if (s.size() != 2) throw SyntaxError("'E' expects an event formula", s.line, s.column);
    return sent_e(parse_event_node(s.at(1), sig));
  }
  if (op == "or" || op == "and") {
    if (s.size() < 3)
      throw SyntaxError("'" + op + "' expects at least two sentences", s.line, s.column);
    SentPtr acc = parse_sentence_node(s.at(1), sig);
    for (size_t i = 2; i < s.size(); ++i) {
      SentPtr next = parse_sentence_node(s.at(i), sig);
      acc = op == "or" ? sent_or(acc, next) : sent_and(acc, next);
    }
    return acc;
  }
  if (op == "not") {
    if (s.size() != 2) throw SyntaxError("'not' expects a sentence", s.line, s.column);
    return sent_not(parse_sentence_node(s.at(1), sig));
  }
  throw SyntaxError("unknown sentence operator '" + op + "'", s.line, s.column);
}

void print_event_rec(const EvPtr& f, const Signature& sig, std::string& out);

void print_path_rec(const PathPtr& p, const Signature& sig, std::string& out) {
  switch (p->kind) {
    case PdlPathKind::Next: out += "next"; return;
    case PdlPathKind::Prev: out += "prev"; return;
    case PdlPathKind::Msg:
      out += "(msg " + sig.processes.names[p->p] + " " + sig.processes.names[p->q] + ")";
      return;
    case PdlPathKind::MsgInv:
      out += "(msg-inv " + sig.processes.names[p->p] + " " + sig.processes.names[p->q] + ")";
      return;
    case PdlPathKind::GuardRight:
      if (p->guard->kind == PdlEventKind::True) {
        out += "plus+";
        return;
      }
      out += "(guard-> ";
      print_event_rec(p->guard, sig, out);
      out += ')';
      return;
    case PdlPathKind::GuardLeft:
      out += "(guard<- ";
      print_event_rec(p->guard, sig, out);
      out += ')';
      return;
    case PdlPathKind::Jump:
      out += "(jump " + sig.processes.names[p->p] + " " + sig.processes.names[p->q] + ")";
      return;
    case PdlPathKind::Test:
      out += "(test ";
      print_event_rec(p->guard, sig, out);
      out += ')';
      return;
    case PdlPathKind::Concat: {
      out += "(cat";
      PathPtr walk = p;
      while (walk->kind == PdlPathKind::Concat) {
        out += ' ';
        print_path_rec(walk->lhs, sig, out);
        walk = walk->rhs;
      }
      out += ' ';
      print_path_rec(walk, sig, out);
      out += ')';
      return;
    }
    case PdlPathKind::Union:
      if (p == path_star_right()) {
        out += "star*";
        return;
      }
      out += "(cup ";
      print_path_rec(p->lhs, sig, out);
      out += ' ';
      print_path_rec(p->rhs, sig, out);
      out += ')';
      return;
    case PdlPathKind::Inter:
      out += "(cap ";
      print_path_rec(p->lhs, sig, out);
      out += ' ';
      print_path_rec(p->rhs, sig, out);
      out += ')';
      return;
    case PdlPathKind::Complement:
      out += "(comp ";
      print_path_rec(p->lhs, sig, out);
      out += ')';
      return;
  }
}

void print_event_rec(const EvPtr& f, const Signature& sig, std::string& out) {
  switch (f->kind) {
    case PdlEventKind::True: out += "true"; return;
    case PdlEventKind::False: out += "false"; return;
    case PdlEventKind::ProcTest:
      out += "(at " + sig.processes.names[f->proc] + ")";
      return;
    case PdlEventKind::LabelTest:
      out += "(lab " + sig.labels.names[f->label] + ")";
      return;
    case PdlEventKind::Or: {
      std::vector<EvPtr> parts;
      EvPtr walk = f;
      while (walk->kind == PdlEventKind::Or) {
        parts.push_back(walk->rhs);
        walk = walk->lhs;
      }
      parts.push_back(walk);
      std::reverse(parts.begin(), parts.end());
      out += "(or";
      for (auto& part : parts) {
        out += ' ';
        print_event_rec(part, sig, out);
      }
      out += ')';
      return;
    }
    case PdlEventKind::Not:
      out += "(not ";
      print_event_rec(f->lhs, sig, out);
      out += ')';
      return;
    case PdlEventKind::Ex:
      out += "(ex ";
      print_path_rec(f->path, sig, out);
      out += ' ';
      print_event_rec(f->lhs, sig, out);
      out += ')';
      return;
    case PdlEventKind::Loop:
      out += "(loop ";
      print_path_rec(f->path, sig, out);
      out += ')';
      return;
  }
}

void print_sentence_rec(const SentPtr& s, const Signature& sig, std::string& out) {
  switch (s->kind) {
    case PdlSentenceKind::Exists:
      out += "(E ";
      print_event_rec(s->event, sig, out);
      out += ')';
      return;
    case PdlSentenceKind::Or:
      out += "(or ";
      print_sentence_rec(s->lhs, sig, out);
      out += ' ';
      print_sentence_rec(s->rhs, sig, out);
      out += ')';
      return;
    case PdlSentenceKind::Not:
      out += "(not ";
      print_sentence_rec(s->lhs, sig, out);
      out += ')';
      return;
  }
}

}  // namespace

SentPtr parse_pdl_sentence(const std::string& text, const Signature& sig) {
  return parse_sentence_node(parse_sexpr(text), sig);
}
EvPtr parse_pdl_event(const std::string& text, const Signature& sig) {
  return parse_event_node(parse_sexpr(text), sig);
}
PathPtr parse_pdl_path(const std::string& text, const Signature& sig) {
  return parse_path_node(parse_sexpr(text), sig);
}

std::string print_pdl(const SentPtr& s, const Signature& sig) {
  std::string out;
  print_sentence_rec(s, sig, out);
  return out;
}
std::string print_pdl(const EvPtr& f, const Signature& sig) {
  std::string out;
  print_event_rec(f, sig, out);
  return out;
}
std::string print_pdl(const PathPtr& p, const Signature& sig) {
  std::string out;
  print_path_rec(p, sig, out);
  return out;
}

}  // namespace msc
