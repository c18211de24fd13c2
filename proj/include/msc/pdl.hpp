#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "msc/bitrel.hpp"
#include "msc/fo.hpp"
#include "msc/msc.hpp"

namespace msc {

// Star-free PDL over MSCs: three sorts (sentences / event formulas / path
// formulas).  Nodes are hash-consed through a global interner, so
// structurally equal formulas are pointer-equal; uids give a stable order.

enum class PdlSentenceKind { Exists, Or, Not };
enum class PdlEventKind { True, False, ProcTest, LabelTest, Or, Not, Ex, Loop };
enum class PdlPathKind {
  Next,        // ->
  Prev,        // <-
  Msg,         // |>_{p,q}
  MsgInv,      // |>^{-1}_{p,q}
  GuardRight,  // ->_phi
  GuardLeft,   // <-_phi
  Jump,        // jump_{p,q}
  Test,        // {phi}?
  Concat,
  Union,
  Inter,
  Complement,
};

// Fragment tag bits: which of {Loop, Union, Inter, Complement} occur in a
// subtree (guards included).
enum : unsigned {
  kFragLoop = 1,
  kFragUnion = 2,
  kFragInter = 4,
  kFragComplement = 8,
};

struct PdlEventNode;
struct PdlPathNode;
struct PdlSentenceNode;
using EvPtr = std::shared_ptr<const PdlEventNode>;
using PathPtr = std::shared_ptr<const PdlPathNode>;
using SentPtr = std::shared_ptr<const PdlSentenceNode>;

struct PdlEventNode {
  PdlEventKind kind;
  int proc = -1;
  int label = -1;
  EvPtr lhs, rhs;  // Or; Not/Ex use lhs
  PathPtr path;    // Ex, Loop
  unsigned frag = 0;
  int size = 1;  // subtree node count (tree-counted)
  size_t hash = 0;
  uint64_t uid = 0;
};

struct PdlPathNode {
  PdlPathKind kind;
  int p = -1, q = -1;  // Msg/MsgInv/Jump
  EvPtr guard;         // GuardRight/GuardLeft/Test
  PathPtr lhs, rhs;    // Concat/Union/Inter; Complement uses lhs
  unsigned frag = 0;
  int size = 1;
  size_t hash = 0;
  uint64_t uid = 0;
};

struct PdlSentenceNode {
  PdlSentenceKind kind;
  EvPtr event;     // Exists
  SentPtr lhs, rhs;
  unsigned frag = 0;
  int size = 1;
  size_t hash = 0;
  uint64_t uid = 0;
};

// Event formula constructors (simplifying):
EvPtr ev_true();
EvPtr ev_false();
EvPtr ev_proc(int p);
EvPtr ev_label(int a);
EvPtr ev_or(EvPtr a, EvPtr b);
EvPtr ev_not(EvPtr a);
EvPtr ev_and(EvPtr a, EvPtr b);              // sugar: not(or(not a, not b))
EvPtr ev_implies(EvPtr a, EvPtr b);          // sugar: or(not a, b)
EvPtr ev_iff(EvPtr a, EvPtr b);
EvPtr ev_ex(PathPtr pi, EvPtr phi);          // <pi> phi
EvPtr ev_ex(PathPtr pi);                     // <pi> true
EvPtr ev_loop(PathPtr pi);
EvPtr ev_or_all(const std::vector<EvPtr>& parts);
EvPtr ev_and_all(const std::vector<EvPtr>& parts);

// Path formula constructors (simplifying):
PathPtr path_next();
PathPtr path_prev();
PathPtr path_msg(int p, int q);
PathPtr path_msg_inv(int p, int q);
PathPtr path_guard_right(EvPtr phi);
PathPtr path_guard_left(EvPtr phi);
PathPtr path_jump(int p, int q);
PathPtr path_test(EvPtr phi);
PathPtr path_cat(PathPtr a, PathPtr b);
PathPtr path_cat_all(const std::vector<PathPtr>& parts);
PathPtr path_union(PathPtr a, PathPtr b);
PathPtr path_inter(PathPtr a, PathPtr b);
PathPtr path_complement(PathPtr a);
PathPtr path_plus_right();  // ->+  ==  ->_true
PathPtr path_plus_left();   // <-+  ==  <-_true
PathPtr path_star_right();  // ->*  ==  ->+ u {true}?

// Sentences:
SentPtr sent_e(EvPtr phi);
SentPtr sent_or(SentPtr a, SentPtr b);
SentPtr sent_not(SentPtr a);
SentPtr sent_and(SentPtr a, SentPtr b);

// Parsing / printing (s-expression grammar; see README).
SentPtr parse_pdl_sentence(const std::string& text, const Signature& sig);
EvPtr parse_pdl_event(const std::string& text, const Signature& sig);
PathPtr parse_pdl_path(const std::string& text, const Signature& sig);
std::string print_pdl(const SentPtr& s, const Signature& sig);
std::string print_pdl(const EvPtr& f, const Signature& sig);
std::string print_pdl(const PathPtr& p, const Signature& sig);

using EventSet = Bitset;

struct PdlEvalLimits {
  long long max_relations = 2'000'000;  // distinct path subformulas per MSC
};

// Per-MSC evaluation context with memoized subformula relations.  Not for
// concurrent use; distinct contexts may run in parallel.
class PdlEvalContext {
 public:
  explicit PdlEvalContext(const Msc& m, PdlEvalLimits limits = {});

  bool sentence(const SentPtr& s);
  const EventSet& event(const EvPtr& f);
  const EventRel& path(const PathPtr& p);

  const Msc& msc() const { return m_; }

 private:
  void check_compatible(unsigned frag) const;

  const Msc& m_;
  PdlEvalLimits limits_;
  std::unordered_map<uint64_t, EventSet> ev_memo_;
  std::unordered_map<uint64_t, EventRel> path_memo_;
};

bool eval_sentence(const Msc& m, const SentPtr& s);
EventSet eval_event(const Msc& m, const EvPtr& f);
EventRel eval_path(const Msc& m, const PathPtr& p);

// Converse path formula: same fragment, transposed relation.
PathPtr converse(const PathPtr& p);

// Comp(pi): which process pairs a pi-path can connect.  Only defined on the
// Loop fragment (no union/intersection/complement).
struct CompRel {
  enum Kind { Empty, Single, Id } kind = Empty;
  int p = -1, q = -1;  // Single

  bool subset_of_id() const { return kind == Empty || (kind == Single && p == q) || kind == Id; }
};
CompRel comp_relation(const PathPtr& p, int process_count);
CompRel comp_compose(const CompRel& a, const CompRel& b);

// min/max path formulas: relate e to the least/greatest element of the
// pi-image of e (Loop fragment only).  Results are recorded in a registry
// so later passes can recognize them as deterministic single-image paths.
PathPtr min_path(const PathPtr& pi);
PathPtr max_path(const PathPtr& pi);

enum class MinMaxKind { Min, Max };
struct MinMaxImage {
  MinMaxKind kind;
  PathPtr core;
};
// Lookup: was this path produced by min_path/max_path (and of what)?
std::optional<MinMaxImage> minmax_image_of(const PathPtr& p);

// Records a path as a known min/max image.  Used when a registered image
// is rebuilt under a label refinement, which preserves the property.
void note_minmax_image(const PathPtr& image, MinMaxKind kind, const PathPtr& core);

// Complement decomposition: |P|^2 + 3 Loop-fragment paths whose union is
// the complement of pi.  Component order: min-side, max-side, interval gap,
// then one jump component per process pair in row-major order.
std::vector<PathPtr> complement_decompose(const PathPtr& pi, int process_count);

// PDL -> FO^3 translation; output uses at most the variables x, y, z,
// requantified as the translation descends.
FoPtr pdl_to_fo(const SentPtr& s, int process_count);
FoPtr pdl_to_fo_event(const EvPtr& f, const std::string& x, int process_count);
FoPtr pdl_to_fo_path(const PathPtr& p, const std::string& x, const std::string& y,
                     int process_count);

}  // namespace msc
