#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msc/bitrel.hpp"
#include "msc/error.hpp"

namespace msc {

// The fixed, totally ordered set of process names.  Declaration order doubles
// as the process order used by the bounds module when breaking ties.
struct ProcessSet {
  std::vector<std::string> names;

  int size() const { return (int)names.size(); }
  int index_of(const std::string& name) const {
    for (int i = 0; i < (int)names.size(); ++i)
      if (names[i] == name) return i;
    return -1;
  }
  bool operator==(const ProcessSet& o) const { return names == o.names; }
  bool operator!=(const ProcessSet& o) const { return !(*this == o); }
};

struct LabelSet {
  std::vector<std::string> names;

  int size() const { return (int)names.size(); }
  int index_of(const std::string& name) const {
    for (int i = 0; i < (int)names.size(); ++i)
      if (names[i] == name) return i;
    return -1;
  }
  bool operator==(const LabelSet& o) const { return names == o.names; }
  bool operator!=(const LabelSet& o) const { return !(*this == o); }
};

// A (P, Sigma) context shared by formulas and machines.
struct Signature {
  ProcessSet processes;
  LabelSet labels;

  bool operator==(const Signature& o) const {
    return processes == o.processes && labels == o.labels;
  }
  bool operator!=(const Signature& o) const { return !(*this == o); }
};

using EventId = int;

// Unvalidated description of an MSC, as produced by the text parser or
// built directly by tests.  Process edges are explicit here so that the
// validator can reject malformed inputs (e.g. an edge across processes).
struct RawMsc {
  std::vector<std::string> processes;
  std::vector<std::string> labels;
  struct RawEvent {
    std::string id;
    std::string proc;
    std::string label;
  };
  std::vector<RawEvent> events;
  std::vector<std::pair<std::string, std::string>> proc_edges;
  std::vector<std::pair<std::string, std::string>> messages;
};

enum class ViolationKind {
  EmptyProcessSet,
  DuplicateProcess,
  EmptyLabelSet,
  DuplicateLabel,
  NoEvents,
  DuplicateEventId,
  UnknownProcess,
  UnknownLabel,
  UnknownEvent,
  CrossProcessProcEdge,
  BrokenProcessChain,
  SameProcessMessage,
  EventInTwoMessages,
  NonFifoChannel,
  CyclicDependency,
};

const char* violation_kind_name(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;  // names the offending events / channel
};

class Msc;
struct ValidateResult;
ValidateResult validate(const RawMsc& raw);

// A validated MSC.  Events carry dense indices (file order); all derived
// structure is precomputed.  Immutable after construction.
class Msc {
 public:
  struct Event {
    std::string id;
    int proc;
    int label;
  };

  const Signature& signature() const { return sig_; }
  const ProcessSet& processes() const { return sig_.processes; }
  const LabelSet& labels() const { return sig_.labels; }

  int event_count() const { return (int)events_.size(); }
  const Event& event(EventId e) const { return events_[e]; }
  const std::vector<Event>& events() const { return events_; }
  int loc(EventId e) const { return events_[e].proc; }
  int label(EventId e) const { return events_[e].label; }

  EventId event_by_id(const std::string& id) const;  // -1 if absent

  const std::vector<EventId>& proc_events(int p) const { return by_proc_[p]; }
  int pos_in_proc(EventId e) const { return pos_in_proc_[e]; }
  EventId proc_next(EventId e) const;  // -1 at the end of the process
  EventId proc_prev(EventId e) const;

  // Message partner, or -1.  is_send/is_receive derive from it.
  EventId partner(EventId e) const { return partner_[e]; }
  bool is_send(EventId e) const { return send_to_[e] >= 0; }
  bool is_receive(EventId e) const { return recv_from_[e] >= 0; }
  bool is_internal(EventId e) const { return partner_[e] < 0; }
  // Peer process of a send/receive event.
  int peer(EventId e) const { return send_to_[e] >= 0 ? send_to_[e] : recv_from_[e]; }

  const std::vector<std::pair<EventId, EventId>>& messages() const { return messages_; }
  // Sends on channel (p, q) in process order.
  std::vector<EventId> channel_sends(int p, int q) const;

  std::string serialize() const;
  RawMsc to_raw() const;

 private:
  friend struct ValidateResult;
  friend ValidateResult validate(const RawMsc& raw);

  Signature sig_;
  std::vector<Event> events_;
  std::vector<std::vector<EventId>> by_proc_;
  std::vector<int> pos_in_proc_;
  std::vector<EventId> partner_;
  std::vector<int> send_to_;    // receiver process or -1
  std::vector<int> recv_from_;  // sender process or -1
  std::vector<std::pair<EventId, EventId>> messages_;
};

struct ValidateResult {
  std::optional<Msc> msc;
  std::vector<Violation> violations;

  bool ok() const { return msc.has_value(); }
};

// Checks every invariant and reports all violations, not just the first.
ValidateResult validate(const RawMsc& raw);

// Parses the line-oriented MSC text format.  Throws SyntaxError on malformed
// input; semantic problems are reported through validate().
RawMsc parse_raw_msc(const std::string& text);

// Convenience: parse + validate, throwing Error on any violation.
Msc parse_msc(const std::string& text);

// Reflexive-transitive closure of (proc edges + message edges).
EventRel happened_before(const Msc& m);

// Direct edge relation (proc successors + messages), not closed.
EventRel direct_edges(const Msc& m);

struct Linearization {
  std::vector<EventId> order;
};

// Enumerates the linear extensions of the happened-before order in
// lexicographic order of event indices, without duplicates.  The callback
// returns false to stop the enumeration.
void for_each_linearization(const Msc& m,
                            const std::function<bool(const Linearization&)>& fn);

// Exponential; intended for small instances only.
uint64_t count_linearizations(const Msc& m);

// True iff every prefix keeps at most B pending messages per channel.
// Throws Error(NotALinearization) if `lin` is not a linearization of m.
bool is_b_bounded_linearization(const Msc& m, const Linearization& lin, int B);

}  // namespace msc
