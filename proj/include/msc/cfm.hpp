#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msc/msc.hpp"

namespace msc {

// Communicating finite-state machines: one finite transition system per
// process, exchanging messages from a finite alphabet over the (implicit)
// FIFO channels of the MSC being read.  Acceptance is a union of
// rectangles: per-process sets of admissible final states.

struct CfmAction {
  enum Kind { Internal, Send, Receive } kind = Internal;
  int label = 0;  // index into Cfm::alphabet
  int msg = -1;   // Send/Receive: index into Cfm::messages
  int peer = -1;  // Send: receiver process; Receive: sender process

  bool operator==(const CfmAction& o) const {
    return kind == o.kind && label == o.label && msg == o.msg && peer == o.peer;
  }
};

struct CfmTransition {
  int src = 0;
  CfmAction act;
  int dst = 0;

  bool operator==(const CfmTransition& o) const {
    return src == o.src && act == o.act && dst == o.dst;
  }
};

struct ProcessMachine {
  std::vector<std::string> state_names;
  int initial = 0;
  std::vector<CfmTransition> transitions;

  int state_count() const { return (int)state_names.size(); }
};

// One rectangle: the run is accepted if every process ends in one of its
// listed states (initial state for processes without events).
struct Rectangle {
  std::vector<std::vector<int>> states;  // per process, sorted

  bool admits(const std::vector<int>& finals) const {
    for (size_t p = 0; p < states.size(); ++p)
      if (!std::binary_search(states[p].begin(), states[p].end(), finals[p])) return false;
    return true;
  }
};

struct Cfm {
  ProcessSet processes;
  LabelSet alphabet;
  std::vector<std::string> messages;
  std::vector<ProcessMachine> machines;
  std::vector<Rectangle> acceptance;

  long long state_total() const {
    long long total = 0;
    for (auto& m : machines) total += m.state_count();
    return total;
  }
  long long transition_total() const {
    long long total = 0;
    for (auto& m : machines) total += (long long)m.transitions.size();
    return total;
  }

  std::string serialize() const;
};

Cfm parse_cfm(const std::string& text);

// A letter-to-letter MSC transducer is a CFM over the product alphabet
// input x output; the product is flattened as in * |output| + out.
struct Transducer {
  Cfm cfm;
  LabelSet input;
  LabelSet output;
  bool functional = false;  // construction guarantees one output per input

  int pair_label(int in, int out) const { return in * output.size() + out; }
  int in_of(int pair) const { return pair / output.size(); }
  int out_of(int pair) const { return pair % output.size(); }
};

LabelSet product_labels(const LabelSet& a, const LabelSet& b);

// A run assigns to each event a transition index of its process machine.
struct RunAssignment {
  std::vector<int> transition_of_event;
};

struct CfmLimits {
  long long max_configurations = 4'000'000;
  long long max_outputs = 200'000;
};

// Complete search for an accepting run on the given MSC via a layered
// reachability sweep over (per-process states, channel contents).
std::optional<RunAssignment> find_run(const Cfm& a, const Msc& m, CfmLimits limits = {});
bool accepts(const Cfm& a, const Msc& m, CfmLimits limits = {});

// Checks the run conditions for an explicit assignment (used by tests and
// by the CLI to print witnesses).
bool run_is_valid(const Cfm& a, const Msc& m, const RunAssignment& run, bool* accepting_out);

// All output labelings a transducer admits on the input MSC, sorted
// lexicographically and deduplicated.  With `use_functional_shortcut`, a
// functional transducer returns the labeling of the first accepting run.
std::vector<std::vector<int>> outputs(const Transducer& t, const Msc& m,
                                      CfmLimits limits = {},
                                      bool use_functional_shortcut = true);

// Synchronized product of two transducers over the same input alphabet
// (pairing the outputs), and relational composition.
Transducer product(const Transducer& a, const Transducer& b, CfmLimits limits = {});
Transducer compose(const Transducer& second, const Transducer& first, CfmLimits limits = {});

// Language intersection of two CFMs over the same alphabet.
Cfm intersect(const Cfm& a, const Cfm& b, CfmLimits limits = {});

// Applies a relabeling derived from the input MSC alphabet: the result
// reads `alphabet` and behaves like `a` whose labels are mapped through
// `map` (used to build identity-style wrappers).
Msc relabel_msc(const Msc& m, const LabelSet& labels, const std::vector<int>& map);

}  // namespace msc
