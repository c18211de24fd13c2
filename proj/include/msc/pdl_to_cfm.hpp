#pragma once

#include "msc/cfm.hpp"
#include "msc/fo_to_pdl.hpp"
#include "msc/pdl.hpp"

namespace msc {

// Compiles Loop-fragment star-free PDL into letter-to-letter transducers
// and CFMs.  Event formulas become functional transducers labeling every
// event with the formula's truth value; sentences become CFMs.

struct CompileLimits {
  CfmLimits cfm;
  TranslateLimits translate;  // for the FO entry point
};

LabelSet bit_labels();

// Base machines; each has O(1) states per process.
Transducer identity_transducer(const Signature& sig);
Transducer const_bit_transducer(const Signature& sig, int bit);
Transducer proc_test_transducer(const Signature& sig, int p);
Transducer label_test_transducer(const Signature& sig, int label);
Transducer neg_transducer(const ProcessSet& procs);
Transducer or2_transducer(const ProcessSet& procs);
Transducer msg_guess_transducer(const ProcessSet& procs, int p, int q);
Transducer msg_inv_transducer(const ProcessSet& procs, int p, int q);
Transducer strict_since_transducer(const ProcessSet& procs);
Transducer strict_until_transducer(const ProcessSet& procs);
Transducer jump_broadcast_transducer(const ProcessSet& procs, int p, int q);
Transducer color_guess_transducer(const Signature& sig, const LabelSet& colors);
Transducer project_colors_transducer(const Signature& sig, const LabelSet& colors,
                                     const std::vector<int>& bit_of_color);

// Loop-free event formulas (PDL_sf[0]) by composition of the base library.
Transducer compile_loopfree(const Signature& sig, const EvPtr& phi, CompileLimits limits = {});

// Loop over a min/max image of a loop-free core, via the four-color
// alternation construction.  Returns the constant-0 transducer when the
// core's Comp is not contained in the identity.
Transducer compile_minmax_loop(const Signature& sig, const PathPtr& core, MinMaxKind kind,
                               CompileLimits limits = {});

// Rewrites every loop into the shapes Loop(max-image) or
// Loop(max-image . <-+); semantics preserved.
EvPtr normalize_loops(const EvPtr& phi);

// Full Loop-fragment event formulas, by induction on loop subformulas.
Transducer compile_event(const Signature& sig, const EvPtr& phi, CompileLimits limits = {});

// Sentences: boolean combinations of E(phi), tracking per-process
// "some event output 1" flags in the acceptance condition.
Cfm compile_sentence(const Signature& sig, const SentPtr& xi, CompileLimits limits = {});

// FO sentences through the FO -> PDL translation.
Cfm compile_fo_sentence(const Signature& sig, const FoPtr& phi, CompileLimits limits = {});

}  // namespace msc
