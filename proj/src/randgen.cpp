#include "msc/randgen.hpp"

#include <string>

namespace msc {

Signature random_signature_for(const RandomMscParams& params) {
  Signature sig;
  for (int p = 0; p < params.processes; ++p)
    sig.processes.names.push_back("p" + std::to_string(p + 1));
  for (int a = 0; a < params.labels; ++a)
    sig.labels.names.push_back(std::string(1, char('a' + a)));
  return sig;
}

Msc random_msc(Rng& rng, const RandomMscParams& params) {
  Signature sig = random_signature_for(params);
  int np = params.processes;
  int n = params.min_events + rng.below(params.max_events - params.min_events + 1);

  RawMsc raw;
  raw.processes = sig.processes.names;
  raw.labels = sig.labels.names;
  std::vector<std::vector<std::string>> chains(np);
  for (int i = 0; i < n; ++i) {
    int p = rng.below(np);
    std::string id = "e" + std::to_string(i);
    raw.events.push_back({id, raw.processes[p], raw.labels[rng.below((int)raw.labels.size())]});
    if (!chains[p].empty()) raw.proc_edges.push_back({chains[p].back(), id});
    chains[p].push_back(id);
  }
  Msc skeleton = *validate(raw).msc;

  // Greedily add messages; each candidate is checked against FIFO and
  // acyclicity on the closure of what has been accepted so far.
  struct Msg {
    EventId s, r;
  };
  std::vector<Msg> accepted;
  std::vector<int> partner(n, -1);
  EventRel closure = happened_before(skeleton);

  int target = 0;
  for (int e = 0; e < n; ++e) target += rng.chance(params.message_percent, 100) ? 1 : 0;
  target /= 2;

  int attempts = 8 * n + 16;
  while ((int)accepted.size() < target && attempts-- > 0) {
    int s = rng.below(n), r = rng.below(n);
    if (s == r || partner[s] != -1 || partner[r] != -1) continue;
    int p = skeleton.loc(s), q = skeleton.loc(r);
    if (p == q) continue;
    if (closure.contains(r, s)) continue;  // would close a cycle
    bool fifo = true;
    for (auto& msg : accepted) {
      if (skeleton.loc(msg.s) != p || skeleton.loc(msg.r) != q) continue;
      bool send_before = skeleton.pos_in_proc(msg.s) < skeleton.pos_in_proc(s);
      bool recv_before = skeleton.pos_in_proc(msg.r) < skeleton.pos_in_proc(r);
      if (send_before != recv_before) {
        fifo = false;
        break;
      }
    }
    if (!fifo) continue;
    accepted.push_back({s, r});
    partner[s] = r;
    partner[r] = s;
    // Extend the closure with the new edge.
    EventRel step(n);
    step.set(s, r);
    closure = closure.unite(closure.compose(step.compose(closure)));
  }

  for (auto& msg : accepted)
    raw.messages.push_back({skeleton.event(msg.s).id, skeleton.event(msg.r).id});
  auto res = validate(raw);
  if (!res.ok()) throw Error(ErrorKind::Internal, "random generator produced an invalid MSC");
  return *std::move(res.msc);
}

EvPtr random_loop_event(Rng& rng, const Signature& sig, int depth, bool allow_loop) {
  int np = sig.processes.size();
  int na = sig.labels.size();
  int pick = rng.below(depth <= 0 ? 4 : (allow_loop ? 8 : 7));
  switch (pick) {
    case 0: return ev_proc(rng.below(np));
    case 1: return ev_label(rng.below(na));
    case 2: return rng.chance(1, 4) ? ev_true() : ev_proc(rng.below(np));
    case 3:
      return ev_not(random_loop_event(rng, sig, depth - 1, allow_loop));
    case 4:
      return ev_or(random_loop_event(rng, sig, depth - 1, allow_loop),
                   random_loop_event(rng, sig, depth - 1, allow_loop));
    case 5:
    case 6:
      return ev_ex(random_loop_path(rng, sig, depth - 1, allow_loop),
                   random_loop_event(rng, sig, depth - 1, allow_loop));
    default:
      return ev_loop(random_loop_path(rng, sig, depth - 1, allow_loop));
  }
}

PathPtr random_loop_path(Rng& rng, const Signature& sig, int depth, bool allow_loop) {
  int np = sig.processes.size();
  auto channel = [&]() {
    int p = rng.below(np);
    int q = rng.below(np - 1);
    if (q >= p) ++q;
    return std::pair(p, q);
  };
  int pick = rng.below(depth <= 0 ? 6 : 10);
  switch (pick) {
    case 0: return path_next();
    case 1: return path_prev();
    case 2: {
      auto [p, q] = channel();
      return path_msg(p, q);
    }
    case 3: {
      auto [p, q] = channel();
      return path_msg_inv(p, q);
    }
    case 4: return path_jump(rng.below(np), rng.below(np));
    case 5: return path_plus_right();
    case 6:
      return path_guard_right(random_loop_event(rng, sig, depth - 1, allow_loop));
    case 7:
      return path_guard_left(random_loop_event(rng, sig, depth - 1, allow_loop));
    case 8:
      return path_test(random_loop_event(rng, sig, depth - 1, allow_loop));
    default:
      return path_cat(random_loop_path(rng, sig, depth - 1, allow_loop),
                      random_loop_path(rng, sig, depth - 1, allow_loop));
  }
}

EvPtr random_loopfree_event(Rng& rng, const Signature& sig, int depth) {
  return random_loop_event(rng, sig, depth, false);
}

}  // namespace msc
