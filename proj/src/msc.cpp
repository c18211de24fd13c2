#include "msc/msc.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace msc {

const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::EmptyProcessSet: return "EmptyProcessSet";
    case ViolationKind::DuplicateProcess: return "DuplicateProcess";
    case ViolationKind::EmptyLabelSet: return "EmptyLabelSet";
    case ViolationKind::DuplicateLabel: return "DuplicateLabel";
    case ViolationKind::NoEvents: return "NoEvents";
    case ViolationKind::DuplicateEventId: return "DuplicateEventId";
    case ViolationKind::UnknownProcess: return "UnknownProcess";
    case ViolationKind::UnknownLabel: return "UnknownLabel";
    case ViolationKind::UnknownEvent: return "UnknownEvent";
    case ViolationKind::CrossProcessProcEdge: return "CrossProcessProcEdge";
    case ViolationKind::BrokenProcessChain: return "BrokenProcessChain";
    case ViolationKind::SameProcessMessage: return "SameProcessMessage";
    case ViolationKind::EventInTwoMessages: return "EventInTwoMessages";
    case ViolationKind::NonFifoChannel: return "NonFifoChannel";
    case ViolationKind::CyclicDependency: return "CyclicDependency";
  }
  return "Unknown";
}

EventId Msc::event_by_id(const std::string& id) const {
  for (int e = 0; e < (int)events_.size(); ++e)
    if (events_[e].id == id) return e;
  return -1;
}

EventId Msc::proc_next(EventId e) const {
  const auto& chain = by_proc_[events_[e].proc];
  int pos = pos_in_proc_[e];
  return pos + 1 < (int)chain.size() ? chain[pos + 1] : -1;
}

EventId Msc::proc_prev(EventId e) const {
  const auto& chain = by_proc_[events_[e].proc];
  int pos = pos_in_proc_[e];
  return pos > 0 ? chain[pos - 1] : -1;
}

std::vector<EventId> Msc::channel_sends(int p, int q) const {
  std::vector<EventId> out;
  for (EventId e : by_proc_[p])
    if (send_to_[e] == q) out.push_back(e);
  return out;
}

RawMsc Msc::to_raw() const {
  RawMsc raw;
  raw.processes = sig_.processes.names;
  raw.labels = sig_.labels.names;
  for (int p = 0; p < (int)by_proc_.size(); ++p) {
    for (size_t i = 0; i < by_proc_[p].size(); ++i) {
      EventId e = by_proc_[p][i];
      raw.events.push_back({events_[e].id, raw.processes[p], raw.labels[events_[e].label]});
      if (i + 1 < by_proc_[p].size())
        raw.proc_edges.push_back({events_[e].id, events_[by_proc_[p][i + 1]].id});
    }
  }
  for (auto& [s, r] : messages_) raw.messages.push_back({events_[s].id, events_[r].id});
  return raw;
}

std::string Msc::serialize() const {
  std::ostringstream out;
  out << "processes:";
  for (auto& p : sig_.processes.names) out << ' ' << p;
  out << "\nlabels:";
  for (auto& a : sig_.labels.names) out << ' ' << a;
  out << '\n';
  for (int p = 0; p < (int)by_proc_.size(); ++p) {
    if (by_proc_[p].empty()) continue;
    out << "events " << sig_.processes.names[p] << ":";
    for (EventId e : by_proc_[p])
      out << ' ' << events_[e].id << ':' << sig_.labels.names[events_[e].label];
    out << '\n';
  }
  auto msgs = messages_;
  std::sort(msgs.begin(), msgs.end(), [&](auto& x, auto& y) {
    auto kx = std::pair(events_[x.first].proc, pos_in_proc_[x.first]);
    auto ky = std::pair(events_[y.first].proc, pos_in_proc_[y.first]);
    return kx < ky;
  });
  for (auto& [s, r] : msgs)
    out << "msg " << events_[s].id << ' ' << events_[r].id << '\n';
  return out.str();
}

namespace {

void note(std::vector<Violation>& out, ViolationKind kind, std::string detail) {
  out.push_back({kind, std::move(detail)});
}

}  // namespace

ValidateResult validate(const RawMsc& raw) {
  ValidateResult res;
  auto& errs = res.violations;

  ProcessSet procs{raw.processes};
  LabelSet labels{raw.labels};
  if (procs.names.empty()) note(errs, ViolationKind::EmptyProcessSet, "no processes declared");
  if (labels.names.empty()) note(errs, ViolationKind::EmptyLabelSet, "no labels declared");
  {
    std::set<std::string> seen;
    for (auto& p : procs.names)
      if (!seen.insert(p).second) note(errs, ViolationKind::DuplicateProcess, p);
    seen.clear();
    for (auto& a : labels.names)
      if (!seen.insert(a).second) note(errs, ViolationKind::DuplicateLabel, a);
  }

  if (raw.events.empty()) note(errs, ViolationKind::NoEvents, "an MSC needs at least one event");

  std::map<std::string, int> index_of;
  std::vector<Msc::Event> events;
  for (auto& ev : raw.events) {
    if (index_of.count(ev.id)) {
      note(errs, ViolationKind::DuplicateEventId, ev.id);
      continue;
    }
    int p = procs.index_of(ev.proc);
    int a = labels.index_of(ev.label);
    if (p < 0) note(errs, ViolationKind::UnknownProcess, ev.id + " on " + ev.proc);
    if (a < 0) note(errs, ViolationKind::UnknownLabel, ev.id + ":" + ev.label);
    if (p < 0 || a < 0) continue;
    index_of[ev.id] = (int)events.size();
    events.push_back({ev.id, p, a});
  }

  auto lookup = [&](const std::string& id) -> int {
    auto it = index_of.find(id);
    if (it == index_of.end()) {
      note(errs, ViolationKind::UnknownEvent, id);
      return -1;
    }
    return it->second;
  };

  int n = (int)events.size();
  std::vector<int> succ(n, -1), pred(n, -1);
  bool chains_ok = !events.empty();
  for (auto& [a, b] : raw.proc_edges) {
    int e = lookup(a), f = lookup(b);
    if (e < 0 || f < 0) {
      chains_ok = false;
      continue;
    }
    if (events[e].proc != events[f].proc) {
      note(errs, ViolationKind::CrossProcessProcEdge,
           a + " -> " + b + " connects different processes");
      chains_ok = false;
      continue;
    }
    if (succ[e] != -1 || pred[f] != -1) {
      note(errs, ViolationKind::BrokenProcessChain,
           "more than one process edge at " + (succ[e] != -1 ? a : b));
      chains_ok = false;
      continue;
    }
    succ[e] = f;
    pred[f] = e;
  }

  // Each process must be a single chain covering its events.
  std::vector<std::vector<EventId>> by_proc(procs.names.size());
  std::vector<int> pos_in_proc(n, -1);
  if (chains_ok) {
    std::vector<int> per_proc_count(procs.names.size(), 0);
    for (auto& ev : events) ++per_proc_count[ev.proc];
    for (int p = 0; p < (int)procs.names.size() && chains_ok; ++p) {
      int head = -1;
      for (int e = 0; e < n; ++e)
        if (events[e].proc == p && pred[e] == -1) {
          if (head != -1) {
            note(errs, ViolationKind::BrokenProcessChain,
                 "process " + procs.names[p] + " has several chain heads");
            chains_ok = false;
            break;
          }
          head = e;
        }
      if (!chains_ok) break;
      if (head == -1 && per_proc_count[p] > 0) {
        note(errs, ViolationKind::BrokenProcessChain,
             "process " + procs.names[p] + " has a cyclic chain");
        chains_ok = false;
        break;
      }
      for (int e = head; e != -1; e = succ[e]) {
        pos_in_proc[e] = (int)by_proc[p].size();
        by_proc[p].push_back(e);
        if ((int)by_proc[p].size() > per_proc_count[p]) break;  // cycle guard
      }
      if ((int)by_proc[p].size() != per_proc_count[p]) {
        note(errs, ViolationKind::BrokenProcessChain,
             "process " + procs.names[p] + " is not one connected chain");
        chains_ok = false;
      }
    }
  }

  std::vector<EventId> partner(n, -1);
  std::vector<int> send_to(n, -1), recv_from(n, -1);
  std::vector<std::pair<EventId, EventId>> messages;
  for (auto& [a, b] : raw.messages) {
    int e = lookup(a), f = lookup(b);
    if (e < 0 || f < 0) continue;
    if (events[e].proc == events[f].proc) {
      note(errs, ViolationKind::SameProcessMessage, a + " -> " + b);
      continue;
    }
    if (partner[e] != -1) {
      note(errs, ViolationKind::EventInTwoMessages, a);
      continue;
    }
    if (partner[f] != -1) {
      note(errs, ViolationKind::EventInTwoMessages, b);
      continue;
    }
    partner[e] = f;
    partner[f] = e;
    send_to[e] = events[f].proc;
    recv_from[f] = events[e].proc;
    messages.push_back({e, f});
  }

  if (chains_ok) {
    // FIFO: per channel, send order must equal receive order.
    for (int p = 0; p < (int)procs.names.size(); ++p) {
      for (int q = 0; q < (int)procs.names.size(); ++q) {
        if (p == q) continue;
        std::vector<std::pair<EventId, EventId>> chan;
        for (auto& [s, r] : messages)
          if (events[s].proc == p && events[r].proc == q) chan.push_back({s, r});
        std::sort(chan.begin(), chan.end(), [&](auto& x, auto& y) {
          return pos_in_proc[x.first] < pos_in_proc[y.first];
        });
        for (size_t i = 0; i + 1 < chan.size(); ++i) {
          if (pos_in_proc[chan[i].second] > pos_in_proc[chan[i + 1].second]) {
            note(errs, ViolationKind::NonFifoChannel,
                 "channel (" + procs.names[p] + "," + procs.names[q] + "): " +
                     events[chan[i].first].id + " overtaken by " +
                     events[chan[i + 1].first].id);
          }
        }
      }
    }

    // Acyclicity of proc edges + messages.
    std::vector<int> state(n, 0);
    std::vector<int> stack;
    bool cyclic = false;
    auto successors = [&](int e, std::vector<int>& out) {
      out.clear();
      if (succ[e] != -1) out.push_back(succ[e]);
      if (send_to[e] != -1) out.push_back(partner[e]);
    };
    for (int root = 0; root < n && !cyclic; ++root) {
      if (state[root]) continue;
      stack.push_back(root);
      std::vector<int> nbrs;
      while (!stack.empty() && !cyclic) {
        int e = stack.back();
        if (state[e] == 0) {
          state[e] = 1;
          successors(e, nbrs);
          for (int f : nbrs) {
            if (state[f] == 1) {
              note(errs, ViolationKind::CyclicDependency,
                   "cycle through " + events[e].id + " -> " + events[f].id);
              cyclic = true;
              break;
            }
            if (state[f] == 0) stack.push_back(f);
          }
        } else {
          state[e] = 2;
          stack.pop_back();
        }
      }
    }
  }

  if (!errs.empty()) return res;

  Msc m;
  m.sig_ = Signature{procs, labels};
  m.events_ = std::move(events);
  m.by_proc_ = std::move(by_proc);
  m.pos_in_proc_ = std::move(pos_in_proc);
  m.partner_ = std::move(partner);
  m.send_to_ = std::move(send_to);
  m.recv_from_ = std::move(recv_from);
  std::sort(messages.begin(), messages.end());
  m.messages_ = std::move(messages);
  res.msc = std::move(m);
  return res;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

RawMsc parse_raw_msc(const std::string& text) {
  RawMsc raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // Allow several ';'-separated statements on one line.
    std::vector<std::string> stmts;
    size_t start = 0;
    while (true) {
      auto semi = line.find(';', start);
      stmts.push_back(line.substr(start, semi == std::string::npos ? semi : semi - start));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    for (auto& stmt : stmts) {
      auto toks = split_ws(stmt);
      if (toks.empty()) continue;
      if (toks[0] == "processes:") {
        raw.processes.insert(raw.processes.end(), toks.begin() + 1, toks.end());
      } else if (toks[0] == "labels:") {
        raw.labels.insert(raw.labels.end(), toks.begin() + 1, toks.end());
      } else if (toks[0] == "events") {
        if (toks.size() < 2 || toks[1].empty() || toks[1].back() != ':')
          throw SyntaxError("expected 'events <process>:'", lineno, 1);
        std::string proc = toks[1].substr(0, toks[1].size() - 1);
        std::string prev;
        for (size_t i = 2; i < toks.size(); ++i) {
          auto colon = toks[i].find(':');
          if (colon == std::string::npos || colon == 0 || colon + 1 >= toks[i].size())
            throw SyntaxError("expected '<event>:<label>', got '" + toks[i] + "'", lineno, 1);
          std::string id = toks[i].substr(0, colon);
          std::string label = toks[i].substr(colon + 1);
          raw.events.push_back({id, proc, label});
          if (!prev.empty()) raw.proc_edges.push_back({prev, id});
          prev = id;
        }
      } else if (toks[0] == "msg") {
        if (toks.size() != 3) throw SyntaxError("expected 'msg <send> <receive>'", lineno, 1);
        raw.messages.push_back({toks[1], toks[2]});
      } else {
        throw SyntaxError("unknown directive '" + toks[0] + "'", lineno, 1);
      }
    }
  }
  return raw;
}

Msc parse_msc(const std::string& text) {
  auto res = validate(parse_raw_msc(text));
  if (!res.ok()) {
    std::string msg = "invalid MSC:";
    for (auto& v : res.violations)
      msg += std::string("\n  ") + violation_kind_name(v.kind) + ": " + v.detail;
    throw Error(ErrorKind::Internal, msg);
  }
  return *std::move(res.msc);
}

EventRel direct_edges(const Msc& m) {
  EventRel r(m.event_count());
  for (int e = 0; e < m.event_count(); ++e) {
    EventId f = m.proc_next(e);
    if (f >= 0) r.set(e, f);
  }
  for (auto& [s, t] : m.messages()) r.set(s, t);
  return r;
}

EventRel happened_before(const Msc& m) { return direct_edges(m).rt_closure(); }

void for_each_linearization(const Msc& m,
                            const std::function<bool(const Linearization&)>& fn) {
  int n = m.event_count();
  EventRel edges = direct_edges(m);
  std::vector<int> indeg(n, 0);
  for (int e = 0; e < n; ++e)
    for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1)) ++indeg[f];

  Linearization lin;
  lin.order.reserve(n);
  bool stop = false;
  std::function<void()> rec = [&]() {
    if (stop) return;
    if ((int)lin.order.size() == n) {
      if (!fn(lin)) stop = true;
      return;
    }
    for (int e = 0; e < n && !stop; ++e) {
      if (indeg[e] != 0) continue;
      indeg[e] = -1;  // taken
      lin.order.push_back(e);
      for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1)) --indeg[f];
      rec();
      for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1)) ++indeg[f];
      lin.order.pop_back();
      indeg[e] = 0;
    }
  };
  rec();
}

uint64_t count_linearizations(const Msc& m) {
  uint64_t count = 0;
  for_each_linearization(m, [&](const Linearization&) {
    ++count;
    return true;
  });
  return count;
}

bool is_b_bounded_linearization(const Msc& m, const Linearization& lin, int B) {
  int n = m.event_count();
  if ((int)lin.order.size() != n)
    throw Error(ErrorKind::NotALinearization, "order does not cover every event exactly once");
  std::vector<int> pos(n, -1);
  for (int i = 0; i < n; ++i) {
    EventId e = lin.order[i];
    if (e < 0 || e >= n || pos[e] != -1)
      throw Error(ErrorKind::NotALinearization, "order is not a permutation of the events");
    pos[e] = i;
  }
  EventRel edges = direct_edges(m);
  for (int e = 0; e < n; ++e)
    for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1))
      if (pos[e] > pos[f])
        throw Error(ErrorKind::NotALinearization,
                    "order contradicts happened-before at " + m.event(e).id + " -> " +
                        m.event(f).id);

  int np = m.processes().size();
  std::vector<int> pending(np * np, 0);
  for (EventId e : lin.order) {
    if (m.is_send(e)) {
      int c = m.loc(e) * np + m.peer(e);
      if (++pending[c] > B) return false;
    } else if (m.is_receive(e)) {
      --pending[m.peer(e) * np + m.loc(e)];
    }
  }
  return true;
}

}  // namespace msc
