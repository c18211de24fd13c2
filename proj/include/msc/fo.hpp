#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "msc/msc.hpp"

namespace msc {

// First-order formulas over the event predicates p(x), a(x), x=y, x->y,
// x|>y (message), x<=y.  Variables are identifiers.  And/Implies/Forall are
// kept in the AST as sugar; they are normalized away before evaluation.
enum class FoKind {
  ProcTest,
  LabelTest,
  Eq,
  ProcEdge,
  MsgEdge,
  Le,
  Or,
  And,
  Not,
  Implies,
  Exists,
  Forall,
};

struct FoNode;
using FoPtr = std::shared_ptr<const FoNode>;

struct FoNode {
  FoKind kind;
  int proc = -1;   // ProcTest
  int label = -1;  // LabelTest
  std::string var, var2;  // atom variables / quantified variable
  FoPtr lhs, rhs;         // binary connectives; unary use lhs
  std::vector<std::string> free_sorted;  // cached free variables
  size_t hash = 0;
};

FoPtr fo_proc(int proc, std::string x);
FoPtr fo_label(int label, std::string x);
FoPtr fo_eq(std::string x, std::string y);
FoPtr fo_edge(std::string x, std::string y);
FoPtr fo_msg(std::string x, std::string y);
FoPtr fo_le(std::string x, std::string y);
FoPtr fo_or(FoPtr a, FoPtr b);
FoPtr fo_and(FoPtr a, FoPtr b);
FoPtr fo_not(FoPtr a);
FoPtr fo_implies(FoPtr a, FoPtr b);
FoPtr fo_exists(std::string x, FoPtr body);
FoPtr fo_forall(std::string x, FoPtr body);
FoPtr fo_or_all(std::vector<FoPtr> parts);   // empty -> contradiction via (not (= x x))? not allowed; requires >= 1
FoPtr fo_and_all(std::vector<FoPtr> parts);

bool fo_equal(const FoPtr& a, const FoPtr& b);
const std::vector<std::string>& free_vars(const FoPtr& f);

// S-expression syntax:  (p <proc> <var>) (a <label> <var>) (= v w)
// (proc-edge v w) (msg-edge v w) (le v w) (le-proc v w) (and ...) (or ...)
// (not f) (implies f g) (exists v f) (forall v f)
FoPtr parse_fo(const std::string& text, const Signature& sig);
std::string print_fo(const FoPtr& f, const Signature& sig);

struct Interpretation {
  std::map<std::string, EventId> bind;
};

struct FoEvalLimits {
  long long max_steps = 10'000'000;
};

// Evaluation context for one MSC; caches subformula results keyed by the
// restriction of the interpretation to the subformula's free variables, so
// repeated queries (e.g. all-pairs differentials) share work.
class FoEvalContext {
 public:
  explicit FoEvalContext(const Msc& m, FoEvalLimits limits = {});

  bool eval(const FoPtr& f, const Interpretation& nu);

  const Msc& msc() const { return m_; }

 private:
  // Keys hold shared ownership: a pointer-keyed cache would go stale if a
  // formula died and the allocator reused its address for another node.
  struct Key {
    FoPtr node;
    std::vector<EventId> env;
    bool operator==(const Key& o) const { return node == o.node && env == o.env; }
  };
  struct KeyHash {
    size_t operator()(const Key& k) const;
  };

  bool eval_rec(const FoPtr& f, std::map<std::string, EventId>& env);

  const Msc& m_;
  EventRel hb_;
  FoEvalLimits limits_;
  long long steps_ = 0;
  std::unordered_map<Key, bool, KeyHash> memo_;
};

bool eval_fo(const Msc& m, const FoPtr& f, const Interpretation& nu,
             FoEvalLimits limits = {});

// Equivalent prenex normal form; bound variables are renamed apart when
// needed to avoid capture.
FoPtr prenex(const FoPtr& f);

struct PrenexForm {
  struct Quantifier {
    bool universal;
    std::string var;
  };
  std::vector<Quantifier> prefix;
  FoPtr matrix;  // quantifier-free
};
PrenexForm prenex_split(const FoPtr& f);

// Number of distinct variable names (free or bound).
int variable_count(const FoPtr& f);

// Negation normal form of a quantifier-free formula: only And/Or above
// atoms and Not directly on atoms.
FoPtr fo_nnf(const FoPtr& f, bool negate);

}  // namespace msc
