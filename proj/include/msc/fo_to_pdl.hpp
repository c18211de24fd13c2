#pragma once

#include <string>
#include <vector>

#include "msc/fo.hpp"
#include "msc/pdl.hpp"

namespace msc {

// The FO -> star-free PDL compiler.  A formula with free variables becomes a
// positive disjunction of conjunctions of path atoms pi(x, y); sentences and
// one/two-variable formulas are then shaped into sentences, event formulas,
// and unions of intersections of paths.

struct PathAtom {
  PathPtr path;
  int src = 0;  // indices into GuardedDnf::vars
  int dst = 0;
};

struct GuardedDnf {
  std::vector<std::string> vars;  // translation variable order
  std::vector<std::vector<PathAtom>> conjuncts;  // positive only

  int var_index(const std::string& v) const {
    for (int i = 0; i < (int)vars.size(); ++i)
      if (vars[i] == v) return i;
    return -1;
  }
};

struct TranslateLimits {
  // Ceiling on the total number of atoms held in the working disjunction;
  // the translation is nonelementary, so this guard is load-bearing.
  long long max_atoms = 400'000;
};

// Union of intersections of Loop-fragment paths (the two-free-variable
// output shape).
struct PathUnion {
  std::vector<std::vector<PathPtr>> terms;
};

GuardedDnf translate_formula(const FoPtr& phi, const Signature& sig,
                             TranslateLimits limits = {});
EvPtr translate_to_event(const FoPtr& phi, const Signature& sig, TranslateLimits limits = {});
SentPtr translate_to_sentence(const FoPtr& phi, const Signature& sig,
                              TranslateLimits limits = {});
PathUnion translate_to_path(const FoPtr& phi, const Signature& sig,
                            TranslateLimits limits = {});

// Single-atom translation (one FO atom, possibly under negation), exposed
// for tests; vars fixes the variable order.
GuardedDnf translate_atomic(const FoPtr& atom, bool negated,
                            const std::vector<std::string>& vars, const Signature& sig);

// One quantifier-elimination step: removes every occurrence of the variable
// with the given index (which must be the highest-indexed one).
GuardedDnf eliminate_exists(GuardedDnf d, int x_index, const Signature& sig,
                            TranslateLimits limits = {});

bool eval_dnf(PdlEvalContext& ctx, const GuardedDnf& d, const std::vector<EventId>& binding);
EventRel eval_path_union(PdlEvalContext& ctx, const PathUnion& u);

std::string print_dnf(const GuardedDnf& d, const Signature& sig);

}  // namespace msc
