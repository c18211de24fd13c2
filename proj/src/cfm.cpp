#include "msc/cfm.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace msc {

LabelSet product_labels(const LabelSet& a, const LabelSet& b) {
  LabelSet out;
  for (auto& x : a.names)
    for (auto& y : b.names) out.names.push_back(x + "/" + y);
  return out;
}

Msc relabel_msc(const Msc& m, const LabelSet& labels, const std::vector<int>& map) {
  RawMsc raw = m.to_raw();
  raw.labels = labels.names;
  for (size_t i = 0; i < raw.events.size(); ++i) {
    EventId e = m.event_by_id(raw.events[i].id);
    raw.events[i].label = labels.names[map[e]];
  }
  auto res = validate(raw);
  if (!res.ok()) throw Error(ErrorKind::Internal, "relabel produced an invalid MSC");
  return *std::move(res.msc);
}

// ---------------------------------------------------------------------------
// Serialization

std::string Cfm::serialize() const {
  std::ostringstream out;
  out << "cfm\n";
  out << "processes:";
  for (auto& p : processes.names) out << ' ' << p;
  out << "\nlabels:";
  for (auto& a : alphabet.names) out << ' ' << a;
  out << "\nmessages:";
  for (auto& m : messages) out << ' ' << m;
  out << '\n';
  for (int p = 0; p < processes.size(); ++p) {
    const ProcessMachine& pm = machines[p];
    out << "machine " << processes.names[p] << '\n';
    out << "states:";
    for (auto& s : pm.state_names) out << ' ' << s;
    out << '\n';
    out << "initial: " << pm.state_names[pm.initial] << '\n';
    for (auto& t : pm.transitions) {
      out << "t " << pm.state_names[t.src] << ' ' << pm.state_names[t.dst] << ' ';
      switch (t.act.kind) {
        case CfmAction::Internal:
          out << "int " << alphabet.names[t.act.label];
          break;
        case CfmAction::Send:
          out << "snd " << alphabet.names[t.act.label] << ' ' << messages[t.act.msg] << ' '
              << processes.names[t.act.peer];
          break;
        case CfmAction::Receive:
          out << "rcv " << alphabet.names[t.act.label] << ' ' << messages[t.act.msg] << ' '
              << processes.names[t.act.peer];
          break;
      }
      out << '\n';
    }
  }
  out << "accept\n";
  for (auto& rect : acceptance) {
    out << "rect";
    for (int p = 0; p < processes.size(); ++p) {
      if (p) out << " |";
      out << ' ' << processes.names[p] << ':';
      for (int s : rect.states[p]) out << ' ' << machines[p].state_names[s];
    }
    out << '\n';
  }
  return out.str();
}

Cfm parse_cfm(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Cfm out;
  int cur = -1;
  bool in_accept = false;
  int lineno = 0;

  auto split = [](const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    return toks;
  };
  auto state_index = [&](int p, const std::string& name) {
    auto& names = out.machines[p].state_names;
    for (int i = 0; i < (int)names.size(); ++i)
      if (names[i] == name) return i;
    throw Error(ErrorKind::Internal, "unknown state " + name);
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = split(line);
    if (toks.empty()) continue;
    if (toks[0] == "cfm") continue;
    if (toks[0] == "processes:") {
      out.processes.names.assign(toks.begin() + 1, toks.end());
      out.machines.resize(out.processes.size());
      continue;
    }
    if (toks[0] == "labels:") {
      out.alphabet.names.assign(toks.begin() + 1, toks.end());
      continue;
    }
    if (toks[0] == "messages:") {
      out.messages.assign(toks.begin() + 1, toks.end());
      continue;
    }
    if (toks[0] == "machine") {
      cur = out.processes.index_of(toks.at(1));
      if (cur < 0) throw SyntaxError("unknown process " + toks[1], lineno, 1);
      continue;
    }
    if (toks[0] == "accept") {
      in_accept = true;
      continue;
    }
    if (in_accept) {
      if (toks[0] != "rect") throw SyntaxError("expected 'rect'", lineno, 1);
      Rectangle rect;
      rect.states.resize(out.processes.size());
      int p = -1;
      for (size_t i = 1; i < toks.size(); ++i) {
        if (toks[i] == "|") continue;
        if (!toks[i].empty() && toks[i].back() == ':') {
          p = out.processes.index_of(toks[i].substr(0, toks[i].size() - 1));
          if (p < 0) throw SyntaxError("unknown process in rect", lineno, 1);
        } else {
          if (p < 0) throw SyntaxError("state before process in rect", lineno, 1);
          rect.states[p].push_back(state_index(p, toks[i]));
        }
      }
      for (auto& ss : rect.states) std::sort(ss.begin(), ss.end());
      out.acceptance.push_back(std::move(rect));
      continue;
    }
    if (cur < 0) throw SyntaxError("directive outside a machine", lineno, 1);
    if (toks[0] == "states:") {
      out.machines[cur].state_names.assign(toks.begin() + 1, toks.end());
      continue;
    }
    if (toks[0] == "initial:") {
      out.machines[cur].initial = state_index(cur, toks.at(1));
      continue;
    }
    if (toks[0] == "t") {
      if (toks.size() < 5) throw SyntaxError("short transition", lineno, 1);
      CfmTransition t;
      t.src = state_index(cur, toks[1]);
      t.dst = state_index(cur, toks[2]);
      const std::string& kind = toks[3];
      int label = out.alphabet.index_of(toks.at(4));
      if (label < 0) throw SyntaxError("unknown label " + toks[4], lineno, 1);
      t.act.label = label;
      if (kind == "int") {
        t.act.kind = CfmAction::Internal;
      } else {
        if (toks.size() != 7) throw SyntaxError("bad send/receive", lineno, 1);
        t.act.kind = kind == "snd" ? CfmAction::Send : CfmAction::Receive;
        int msg = -1;
        for (int i = 0; i < (int)out.messages.size(); ++i)
          if (out.messages[i] == toks[5]) msg = i;
        if (msg < 0) throw SyntaxError("unknown message " + toks[5], lineno, 1);
        t.act.msg = msg;
        t.act.peer = out.processes.index_of(toks[6]);
        if (t.act.peer < 0) throw SyntaxError("unknown peer " + toks[6], lineno, 1);
      }
      out.machines[cur].transitions.push_back(t);
      continue;
    }
    throw SyntaxError("unknown directive '" + toks[0] + "'", lineno, 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run search

namespace {

void check_compatible(const Cfm& a, const Msc& m) {
  if (a.processes != m.processes() || a.alphabet != m.labels())
    throw Error(ErrorKind::IncompatibleAlphabet,
                "machine and MSC disagree on processes or labels");
}

// Deterministic linearization: repeatedly the smallest ready event.
std::vector<EventId> canonical_order(const Msc& m) {
  int n = m.event_count();
  EventRel edges = direct_edges(m);
  std::vector<int> indeg(n, 0);
  for (int e = 0; e < n; ++e)
    for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1)) ++indeg[f];
  std::vector<EventId> order;
  std::vector<bool> done(n, false);
  for (int step = 0; step < n; ++step) {
    for (int e = 0; e < n; ++e) {
      if (done[e] || indeg[e] != 0) continue;
      order.push_back(e);
      done[e] = true;
      for (int f = edges.next_in_row(e, 0); f >= 0; f = edges.next_in_row(e, f + 1)) --indeg[f];
      break;
    }
  }
  return order;
}

struct Config {
  std::vector<int> key;  // states ++ flattened channel queues

  bool operator==(const Config& o) const { return key == o.key; }
};
struct ConfigHash {
  size_t operator()(const Config& c) const {
    size_t h = 1469598103934665603ull;
    for (int v : c.key) h = (h ^ (size_t)(v + 2)) * 1099511628211ull;
    return h;
  }
};

struct Layered {
  struct Node {
    Config config;
    std::vector<std::pair<int, int>> parents;  // (node in prev layer, transition idx)
  };
  std::vector<std::vector<Node>> layers;
  std::vector<EventId> order;
};

std::optional<Layered> explore(const Cfm& a, const Msc& m, const CfmLimits& limits,
                               bool keep_all_parents) {
  check_compatible(a, m);
  int np = a.processes.size();
  Layered out;
  out.order = canonical_order(m);

  auto encode = [&](const std::vector<int>& states,
                    const std::vector<std::deque<int>>& qs) {
    Config c;
    c.key = states;
    for (auto& q : qs) {
      c.key.push_back((int)q.size());
      for (int v : q) c.key.push_back(v);
    }
    return c;
  };
  auto decode_queues = [&](const Config& c) {
    std::vector<std::deque<int>> qs(np * np);
    size_t pos = np;
    for (auto& q : qs) {
      int len = c.key[pos++];
      for (int i = 0; i < len; ++i) q.push_back(c.key[pos++]);
    }
    return qs;
  };

  std::vector<int> init_states(np);
  for (int p = 0; p < np; ++p) init_states[p] = a.machines[p].initial;
  out.layers.push_back({});
  out.layers[0].push_back({encode(init_states, std::vector<std::deque<int>>(np * np)), {}});

  long long total = 1;
  for (size_t i = 0; i < out.order.size(); ++i) {
    EventId e = out.order[i];
    int p = m.loc(e);
    int label = m.label(e);
    CfmAction::Kind kind = m.is_send(e)      ? CfmAction::Send
                           : m.is_receive(e) ? CfmAction::Receive
                                             : CfmAction::Internal;
    int peer = m.is_internal(e) ? -1 : m.loc(m.partner(e));

    std::vector<Layered::Node> next;
    std::unordered_map<Config, int, ConfigHash> index;
    auto& cur = out.layers.back();
    for (int ci = 0; ci < (int)cur.size(); ++ci) {
      std::vector<int> states(cur[ci].config.key.begin(), cur[ci].config.key.begin() + np);
      auto qs = decode_queues(cur[ci].config);
      const auto& trans = a.machines[p].transitions;
      for (int ti = 0; ti < (int)trans.size(); ++ti) {
        const CfmTransition& t = trans[ti];
        if (t.src != states[p] || t.act.kind != kind || t.act.label != label) continue;
        if (kind != CfmAction::Internal && t.act.peer != peer) continue;
        if (kind == CfmAction::Receive) {
          auto& q = qs[peer * np + p];
          if (q.empty() || q.front() != t.act.msg) continue;
        }
        auto states2 = states;
        states2[p] = t.dst;
        auto qs2 = qs;
        if (kind == CfmAction::Send) qs2[p * np + t.act.peer].push_back(t.act.msg);
        if (kind == CfmAction::Receive) qs2[peer * np + p].pop_front();
        Config c2 = encode(states2, qs2);
        auto it = index.find(c2);
        if (it == index.end()) {
          index.emplace(c2, (int)next.size());
          next.push_back({std::move(c2), {{ci, ti}}});
          if (++total > limits.max_configurations) throw ResourceLimitError("cfm-run-search");
        } else if (keep_all_parents) {
          next[it->second].parents.push_back({ci, ti});
        }
      }
    }
    if (next.empty()) return std::nullopt;
    out.layers.push_back(std::move(next));
  }
  return out;
}

bool config_accepting(const Cfm& a, const Config& c) {
  std::vector<int> finals(c.key.begin(), c.key.begin() + a.processes.size());
  for (auto& rect : a.acceptance)
    if (rect.admits(finals)) return true;
  return false;
}

}  // namespace

std::optional<RunAssignment> find_run(const Cfm& a, const Msc& m, CfmLimits limits) {
  auto layered = explore(a, m, limits, false);
  if (!layered) return std::nullopt;
  auto& layers = layered->layers;
  int accepting = -1;
  for (int ci = 0; ci < (int)layers.back().size(); ++ci) {
    if (config_accepting(a, layers.back()[ci].config)) {
      accepting = ci;
      break;
    }
  }
  if (accepting < 0) return std::nullopt;

  RunAssignment run;
  run.transition_of_event.assign(m.event_count(), -1);
  int ci = accepting;
  for (int i = (int)layers.size() - 1; i > 0; --i) {
    auto& [parent, ti] = layers[i][ci].parents[0];
    run.transition_of_event[layered->order[i - 1]] = ti;
    ci = parent;
  }
  return run;
}

bool accepts(const Cfm& a, const Msc& m, CfmLimits limits) {
  return find_run(a, m, limits).has_value();
}

bool run_is_valid(const Cfm& a, const Msc& m, const RunAssignment& run, bool* accepting_out) {
  check_compatible(a, m);
  int np = a.processes.size();
  if ((int)run.transition_of_event.size() != m.event_count()) return false;
  std::vector<int> finals(np);

  for (int p = 0; p < np; ++p) {
    int state = a.machines[p].initial;
    for (EventId e : m.proc_events(p)) {
      int ti = run.transition_of_event[e];
      if (ti < 0 || ti >= (int)a.machines[p].transitions.size()) return false;
      const CfmTransition& t = a.machines[p].transitions[ti];
      if (t.src != state) return false;
      if (t.act.label != m.label(e)) return false;
      if (m.is_internal(e) && t.act.kind != CfmAction::Internal) return false;
      if (m.is_send(e) && (t.act.kind != CfmAction::Send || t.act.peer != m.loc(m.partner(e))))
        return false;
      if (m.is_receive(e) &&
          (t.act.kind != CfmAction::Receive || t.act.peer != m.loc(m.partner(e))))
        return false;
      state = t.dst;
    }
    finals[p] = state;
  }
  for (auto& [s, r] : m.messages()) {
    const CfmTransition& ts = a.machines[m.loc(s)].transitions[run.transition_of_event[s]];
    const CfmTransition& tr = a.machines[m.loc(r)].transitions[run.transition_of_event[r]];
    if (ts.act.msg != tr.act.msg) return false;
  }
  if (accepting_out) {
    *accepting_out = false;
    for (auto& rect : a.acceptance)
      if (rect.admits(finals)) *accepting_out = true;
  }
  return true;
}

std::vector<std::vector<int>> outputs(const Transducer& t, const Msc& m, CfmLimits limits,
                                      bool use_functional_shortcut) {
  if (t.input != m.labels())
    throw Error(ErrorKind::IncompatibleAlphabet, "transducer input mismatch");
  int n = m.event_count();

  // Rewrite pair labels to their input component so that the run search
  // matches the MSC; outputs are recovered from the chosen transitions.
  Cfm filtered = t.cfm;
  std::vector<std::vector<int>> outs_of_transition(t.cfm.machines.size());
  for (size_t p = 0; p < filtered.machines.size(); ++p) {
    for (auto& tr : filtered.machines[p].transitions) {
      outs_of_transition[p].push_back(t.out_of(tr.act.label));
      tr.act.label = t.in_of(tr.act.label);
    }
  }
  filtered.alphabet = t.input;

  if (use_functional_shortcut && t.functional) {
    auto run = find_run(filtered, m, limits);
    if (!run) return {};
    std::vector<int> labeling(n);
    for (int e = 0; e < n; ++e)
      labeling[e] = outs_of_transition[m.loc(e)][run->transition_of_event[e]];
    return {labeling};
  }

  auto layered = explore(filtered, m, limits, true);
  if (!layered) return {};
  auto& layers = layered->layers;

  std::vector<std::vector<bool>> live(layers.size());
  for (size_t i = 0; i < layers.size(); ++i) live[i].assign(layers[i].size(), false);
  for (size_t ci = 0; ci < layers.back().size(); ++ci)
    live.back()[ci] = config_accepting(filtered, layers.back()[ci].config);
  for (int i = (int)layers.size() - 1; i > 0; --i)
    for (size_t ci = 0; ci < layers[i].size(); ++ci)
      if (live[i][ci])
        for (auto& [parent, ti] : layers[i][ci].parents) live[i - 1][parent] = true;

  std::vector<std::vector<std::vector<std::pair<int, int>>>> succ(layers.size());
  for (size_t i = 0; i < layers.size(); ++i) succ[i].resize(layers[i].size());
  for (size_t i = 1; i < layers.size(); ++i)
    for (size_t ci = 0; ci < layers[i].size(); ++ci) {
      if (!live[i][ci]) continue;
      for (auto& [parent, ti] : layers[i][ci].parents)
        if (live[i - 1][parent]) succ[i - 1][parent].push_back({(int)ci, ti});
    }

  std::set<std::vector<int>> found;
  std::vector<int> labeling(n, -1);
  std::function<void(size_t, int)> walk = [&](size_t layer, int node) {
    if (layer == layers.size() - 1) {
      found.insert(labeling);
      if ((long long)found.size() > limits.max_outputs)
        throw ResourceLimitError("cfm-outputs");
      return;
    }
    EventId e = layered->order[layer];
    for (auto& [to, ti] : succ[layer][node]) {
      labeling[e] = outs_of_transition[m.loc(e)][ti];
      walk(layer + 1, to);
    }
  };
  if (!layers[0].empty() && live[0][0]) walk(0, 0);
  return {found.begin(), found.end()};
}

// ---------------------------------------------------------------------------
// Synchronized products

namespace {

// Quotients each process machine by strong bisimulation (seeded with
// rectangle membership).  The constructions stack products and
// compositions, which leave many behaviorally identical states; without
// this the run search on composed machines drowns in configurations.
void reduce_bisimulation(Cfm& a) {
  int np = a.processes.size();
  for (int p = 0; p < np; ++p) {
    ProcessMachine& pm = a.machines[p];
    int ns = pm.state_count();
    if (ns <= 1) continue;

    std::vector<int> cls(ns, 0);
    {
      // Initial partition: membership vector across rectangles.
      std::map<std::vector<bool>, int> index;
      for (int s = 0; s < ns; ++s) {
        std::vector<bool> member;
        member.reserve(a.acceptance.size());
        for (auto& rect : a.acceptance)
          member.push_back(
              std::binary_search(rect.states[p].begin(), rect.states[p].end(), s));
        auto it = index.find(member);
        if (it == index.end()) it = index.emplace(member, (int)index.size()).first;
        cls[s] = it->second;
      }
    }

    std::vector<std::vector<int>> by_src(ns);
    for (int i = 0; i < (int)pm.transitions.size(); ++i)
      by_src[pm.transitions[i].src].push_back(i);

    while (true) {
      std::map<std::pair<int, std::vector<std::tuple<int, int, int, int, int>>>, int> index;
      std::vector<int> next(ns);
      for (int s = 0; s < ns; ++s) {
        std::vector<std::tuple<int, int, int, int, int>> sig;
        sig.reserve(by_src[s].size());
        for (int i : by_src[s]) {
          const CfmTransition& t = pm.transitions[i];
          sig.emplace_back((int)t.act.kind, t.act.label, t.act.msg, t.act.peer, cls[t.dst]);
        }
        std::sort(sig.begin(), sig.end());
        sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
        auto key = std::make_pair(cls[s], std::move(sig));
        auto it = index.find(key);
        if (it == index.end()) it = index.emplace(std::move(key), (int)index.size()).first;
        next[s] = it->second;
      }
      if (next == cls) break;
      cls = std::move(next);
    }

    int nclasses = *std::max_element(cls.begin(), cls.end()) + 1;
    if (nclasses == ns) continue;

    ProcessMachine reduced;
    reduced.state_names.resize(nclasses);
    for (int c = 0; c < nclasses; ++c) reduced.state_names[c] = "q" + std::to_string(c);
    reduced.initial = cls[pm.initial];
    std::set<std::tuple<int, int, int, int, int, int>> seen;
    for (auto& t : pm.transitions) {
      auto key = std::make_tuple(cls[t.src], (int)t.act.kind, t.act.label, t.act.msg,
                                 t.act.peer, cls[t.dst]);
      if (!seen.insert(key).second) continue;
      CfmTransition t2 = t;
      t2.src = cls[t.src];
      t2.dst = cls[t.dst];
      reduced.transitions.push_back(t2);
    }
    a.machines[p] = std::move(reduced);
    for (auto& rect : a.acceptance) {
      std::set<int> mapped;
      for (int s : rect.states[p]) mapped.insert(cls[s]);
      rect.states[p].assign(mapped.begin(), mapped.end());
    }
  }
}

// Generic synchronized product; `match` pairs compatible labels or returns -1.
Cfm synchronized(const Cfm& a, const Cfm& b, const LabelSet& alphabet,
                 const std::function<int(int, int)>& match, const CfmLimits& limits) {
  if (a.processes != b.processes)
    throw Error(ErrorKind::IncompatibleAlphabet, "process sets differ");
  int np = a.processes.size();
  Cfm out;
  out.processes = a.processes;
  out.alphabet = alphabet;

  std::map<std::pair<int, int>, int> msg_index;
  auto msg_of = [&](int ma, int mb) {
    auto key = std::make_pair(ma, mb);
    auto it = msg_index.find(key);
    if (it != msg_index.end()) return it->second;
    int id = (int)out.messages.size();
    msg_index.emplace(key, id);
    out.messages.push_back(a.messages[ma] + "*" + b.messages[mb]);
    return id;
  };

  std::vector<std::vector<std::pair<int, int>>> joint(np);
  out.machines.resize(np);
  long long total_states = 0;
  for (int p = 0; p < np; ++p) {
    std::map<std::pair<int, int>, int> joint_index;
    auto add_state = [&](int sa, int sb) {
      auto key = std::make_pair(sa, sb);
      auto it = joint_index.find(key);
      if (it != joint_index.end()) return it->second;
      int id = (int)joint[p].size();
      joint_index.emplace(key, id);
      joint[p].push_back(key);
      if (++total_states > limits.max_configurations) throw ResourceLimitError("cfm-product");
      return id;
    };
    add_state(a.machines[p].initial, b.machines[p].initial);
    out.machines[p].initial = 0;

    std::vector<std::vector<int>> by_src_a(a.machines[p].state_count());
    std::vector<std::vector<int>> by_src_b(b.machines[p].state_count());
    for (int i = 0; i < (int)a.machines[p].transitions.size(); ++i)
      by_src_a[a.machines[p].transitions[i].src].push_back(i);
    for (int i = 0; i < (int)b.machines[p].transitions.size(); ++i)
      by_src_b[b.machines[p].transitions[i].src].push_back(i);

    std::set<std::tuple<int, int, int, int, int, int>> seen;
    for (int id = 0; id < (int)joint[p].size(); ++id) {
      auto [sa, sb] = joint[p][id];
      for (int ia : by_src_a[sa]) {
        const CfmTransition& ta = a.machines[p].transitions[ia];
        for (int ib : by_src_b[sb]) {
          const CfmTransition& tb = b.machines[p].transitions[ib];
          if (ta.act.kind != tb.act.kind) continue;
          if (ta.act.kind != CfmAction::Internal && ta.act.peer != tb.act.peer) continue;
          int label = match(ta.act.label, tb.act.label);
          if (label < 0) continue;
          CfmTransition t;
          t.src = id;
          t.dst = add_state(ta.dst, tb.dst);
          t.act.kind = ta.act.kind;
          t.act.label = label;
          t.act.peer = ta.act.peer;
          if (ta.act.kind != CfmAction::Internal) t.act.msg = msg_of(ta.act.msg, tb.act.msg);
          auto key = std::make_tuple(t.src, (int)t.act.kind, t.act.label, t.act.msg,
                                     t.act.peer, t.dst);
          if (seen.insert(key).second) out.machines[p].transitions.push_back(t);
        }
      }
    }
    out.machines[p].state_names.resize(joint[p].size());
    for (size_t i = 0; i < joint[p].size(); ++i)
      out.machines[p].state_names[i] = "q" + std::to_string(i);
  }

  for (auto& ra : a.acceptance) {
    for (auto& rb : b.acceptance) {
      Rectangle rect;
      rect.states.resize(np);
      bool possible = true;
      for (int p = 0; p < np && possible; ++p) {
        for (int id = 0; id < (int)joint[p].size(); ++id) {
          auto [sa, sb] = joint[p][id];
          bool in_a = std::binary_search(ra.states[p].begin(), ra.states[p].end(), sa);
          bool in_b = std::binary_search(rb.states[p].begin(), rb.states[p].end(), sb);
          if (in_a && in_b) rect.states[p].push_back(id);
        }
        if (rect.states[p].empty()) possible = false;
      }
      if (possible) out.acceptance.push_back(std::move(rect));
    }
  }

  // Drop states that cannot reach a potentially accepting state of their
  // process; keeps stacked constructions small.
  for (int p = 0; p < np; ++p) {
    int ns = (int)joint[p].size();
    std::vector<bool> colive(ns, false);
    for (auto& rect : out.acceptance)
      for (int s : rect.states[p]) colive[s] = true;
    std::vector<std::vector<int>> rev(ns);
    for (auto& t : out.machines[p].transitions) rev[t.dst].push_back(t.src);
    std::deque<int> work;
    for (int s = 0; s < ns; ++s)
      if (colive[s]) work.push_back(s);
    while (!work.empty()) {
      int s = work.front();
      work.pop_front();
      for (int prev : rev[s])
        if (!colive[prev]) {
          colive[prev] = true;
          work.push_back(prev);
        }
    }
    colive[out.machines[p].initial] = true;
    std::vector<int> remap(ns, -1);
    int kept = 0;
    for (int s = 0; s < ns; ++s)
      if (colive[s]) remap[s] = kept++;
    if (kept == ns) continue;
    ProcessMachine pm;
    pm.state_names.resize(kept);
    for (int s = 0; s < kept; ++s) pm.state_names[s] = "q" + std::to_string(s);
    pm.initial = remap[out.machines[p].initial];
    for (auto& t : out.machines[p].transitions) {
      if (remap[t.src] < 0 || remap[t.dst] < 0) continue;
      CfmTransition t2 = t;
      t2.src = remap[t.src];
      t2.dst = remap[t.dst];
      pm.transitions.push_back(t2);
    }
    out.machines[p] = std::move(pm);
    for (auto& rect : out.acceptance) {
      std::vector<int> keep;
      for (int s : rect.states[p])
        if (remap[s] >= 0) keep.push_back(remap[s]);
      std::sort(keep.begin(), keep.end());
      rect.states[p] = std::move(keep);
    }
  }
  std::vector<Rectangle> rects;
  for (auto& rect : out.acceptance) {
    bool ok = true;
    for (auto& ss : rect.states)
      if (ss.empty()) ok = false;
    if (ok) rects.push_back(rect);
  }
  out.acceptance = std::move(rects);
  reduce_bisimulation(out);
  return out;
}

}  // namespace

Transducer product(const Transducer& a, const Transducer& b, CfmLimits limits) {
  if (a.input != b.input)
    throw Error(ErrorKind::IncompatibleAlphabet, "product needs one input alphabet");
  Transducer out;
  out.input = a.input;
  out.output = product_labels(a.output, b.output);
  LabelSet alphabet = product_labels(out.input, out.output);
  int nb = b.output.size();
  int nout = out.output.size();
  auto match = [&](int la, int lb) -> int {
    if (a.in_of(la) != b.in_of(lb)) return -1;
    int combined = a.out_of(la) * nb + b.out_of(lb);
    return a.in_of(la) * nout + combined;
  };
  out.cfm = synchronized(a.cfm, b.cfm, alphabet, match, limits);
  out.functional = a.functional && b.functional;
  return out;
}

Transducer compose(const Transducer& second, const Transducer& first, CfmLimits limits) {
  if (first.output != second.input)
    throw Error(ErrorKind::IncompatibleAlphabet, "composition alphabet mismatch");
  Transducer out;
  out.input = first.input;
  out.output = second.output;
  LabelSet alphabet = product_labels(out.input, out.output);
  int nout = out.output.size();
  auto match = [&](int lf, int ls) -> int {
    if (first.out_of(lf) != second.in_of(ls)) return -1;
    return first.in_of(lf) * nout + second.out_of(ls);
  };
  out.cfm = synchronized(first.cfm, second.cfm, alphabet, match, limits);
  out.functional = first.functional && second.functional;
  return out;
}

Cfm intersect(const Cfm& a, const Cfm& b, CfmLimits limits) {
  if (a.alphabet != b.alphabet)
    throw Error(ErrorKind::IncompatibleAlphabet, "intersection alphabet mismatch");
  auto match = [](int la, int lb) -> int { return la == lb ? la : -1; };
  return synchronized(a, b, a.alphabet, match, limits);
}

}  // namespace msc
