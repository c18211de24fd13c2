#include "msc/pdl_to_cfm.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace msc {

LabelSet bit_labels() { return LabelSet{{"0", "1"}}; }

namespace {

const char* kMsg = "m";

// Adds transitions for every action shape between the given states.
void all_shapes(ProcessMachine& pm, int np, int self, int src, int label, int dst) {
  pm.transitions.push_back({src, {CfmAction::Internal, label, -1, -1}, dst});
  for (int peer = 0; peer < np; ++peer) {
    if (peer == self) continue;
    pm.transitions.push_back({src, {CfmAction::Send, label, 0, peer}, dst});
    pm.transitions.push_back({src, {CfmAction::Receive, label, 0, peer}, dst});
  }
}

Rectangle full_rectangle(const Cfm& cfm) {
  Rectangle rect;
  rect.states.resize(cfm.processes.size());
  for (int p = 0; p < cfm.processes.size(); ++p)
    for (int s = 0; s < cfm.machines[p].state_count(); ++s) rect.states[p].push_back(s);
  return rect;
}

// One-state transducer defined by an output choice table per (process, input).
Transducer stateless(const ProcessSet& procs, const LabelSet& in, const LabelSet& out,
                     const std::function<std::vector<int>(int proc, int label)>& choices) {
  Transducer t;
  t.input = in;
  t.output = out;
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(in, out);
  t.cfm.messages = {kMsg};
  t.cfm.machines.resize(procs.size());
  t.functional = true;
  for (int p = 0; p < procs.size(); ++p) {
    auto& pm = t.cfm.machines[p];
    pm.state_names = {"q0"};
    pm.initial = 0;
    for (int a = 0; a < in.size(); ++a) {
      auto outs = choices(p, a);
      if (outs.size() != 1) t.functional = false;
      for (int b : outs) all_shapes(pm, procs.size(), p, 0, t.pair_label(a, b), 0);
    }
  }
  t.cfm.acceptance.push_back(full_rectangle(t.cfm));
  return t;
}

}  // namespace

Transducer identity_transducer(const Signature& sig) {
  return stateless(sig.processes, sig.labels, sig.labels,
                   [](int, int a) { return std::vector<int>{a}; });
}

Transducer const_bit_transducer(const Signature& sig, int bit) {
  return stateless(sig.processes, sig.labels, bit_labels(),
                   [bit](int, int) { return std::vector<int>{bit}; });
}

Transducer proc_test_transducer(const Signature& sig, int p) {
  return stateless(sig.processes, sig.labels, bit_labels(),
                   [p](int proc, int) { return std::vector<int>{proc == p ? 1 : 0}; });
}

Transducer label_test_transducer(const Signature& sig, int label) {
  return stateless(sig.processes, sig.labels, bit_labels(),
                   [label](int, int a) { return std::vector<int>{a == label ? 1 : 0}; });
}

Transducer neg_transducer(const ProcessSet& procs) {
  return stateless(procs, bit_labels(), bit_labels(),
                   [](int, int b) { return std::vector<int>{1 - b}; });
}

Transducer or2_transducer(const ProcessSet& procs) {
  LabelSet bits2 = product_labels(bit_labels(), bit_labels());
  return stateless(procs, bits2, bit_labels(), [](int, int pair) {
    int b1 = pair / 2, b2 = pair % 2;
    return std::vector<int>{b1 | b2};
  });
}

// Outputs 1 at a (p,q)-send iff the matching receive carries input bit 1;
// the guess rides on the message and is checked on arrival.
Transducer msg_guess_transducer(const ProcessSet& procs, int p, int q) {
  Transducer t;
  t.input = bit_labels();
  t.output = bit_labels();
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(t.input, t.output);
  t.cfm.messages = {"g0", "g1"};
  t.cfm.machines.resize(procs.size());
  int np = procs.size();
  for (int r = 0; r < np; ++r) {
    auto& pm = t.cfm.machines[r];
    pm.state_names = {"q0"};
    pm.initial = 0;
    for (int b = 0; b < 2; ++b) {
      pm.transitions.push_back({0, {CfmAction::Internal, t.pair_label(b, 0), -1, -1}, 0});
      for (int peer = 0; peer < np; ++peer) {
        if (peer == r) continue;
        if (r == p && peer == q) {
          for (int guess = 0; guess < 2; ++guess)
            pm.transitions.push_back(
                {0, {CfmAction::Send, t.pair_label(b, guess), guess, peer}, 0});
        } else {
          pm.transitions.push_back({0, {CfmAction::Send, t.pair_label(b, 0), 0, peer}, 0});
        }
        if (r == q && peer == p) {
          // the guess must equal this event's input bit
          pm.transitions.push_back({0, {CfmAction::Receive, t.pair_label(b, 0), b, peer}, 0});
        } else {
          pm.transitions.push_back({0, {CfmAction::Receive, t.pair_label(b, 0), 0, peer}, 0});
        }
      }
    }
  }
  t.cfm.acceptance.push_back(full_rectangle(t.cfm));
  t.functional = true;
  return t;
}

// Outputs 1 at a (p,q)-receive iff the matching send carried input bit 1;
// deterministic, the bit travels with the message.
Transducer msg_inv_transducer(const ProcessSet& procs, int p, int q) {
  Transducer t;
  t.input = bit_labels();
  t.output = bit_labels();
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(t.input, t.output);
  t.cfm.messages = {"g0", "g1"};
  t.cfm.machines.resize(procs.size());
  int np = procs.size();
  for (int r = 0; r < np; ++r) {
    auto& pm = t.cfm.machines[r];
    pm.state_names = {"q0"};
    pm.initial = 0;
    for (int b = 0; b < 2; ++b) {
      pm.transitions.push_back({0, {CfmAction::Internal, t.pair_label(b, 0), -1, -1}, 0});
      for (int peer = 0; peer < np; ++peer) {
        if (peer == r) continue;
        if (r == p && peer == q) {
          pm.transitions.push_back({0, {CfmAction::Send, t.pair_label(b, 0), b, peer}, 0});
        } else {
          pm.transitions.push_back({0, {CfmAction::Send, t.pair_label(b, 0), 0, peer}, 0});
        }
        if (r == q && peer == p) {
          for (int carried = 0; carried < 2; ++carried)
            pm.transitions.push_back(
                {0, {CfmAction::Receive, t.pair_label(b, carried), carried, peer}, 0});
        } else {
          pm.transitions.push_back({0, {CfmAction::Receive, t.pair_label(b, 0), 0, peer}, 0});
        }
      }
    }
  }
  t.cfm.acceptance.push_back(full_rectangle(t.cfm));
  t.functional = true;
  return t;
}

// Strict since over (b1, b2) inputs: output 1 at e iff some earlier g on
// the process had b2 = 1 with b1 = 1 at every event in between.
Transducer strict_since_transducer(const ProcessSet& procs) {
  LabelSet bits2 = product_labels(bit_labels(), bit_labels());
  Transducer t;
  t.input = bits2;
  t.output = bit_labels();
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(bits2, bit_labels());
  t.cfm.messages = {kMsg};
  t.cfm.machines.resize(procs.size());
  for (int r = 0; r < procs.size(); ++r) {
    auto& pm = t.cfm.machines[r];
    pm.state_names = {"off", "on"};
    pm.initial = 0;
    for (int s = 0; s < 2; ++s) {
      for (int pair = 0; pair < 4; ++pair) {
        int b1 = pair / 2, b2 = pair % 2;
        int next = b2 ? 1 : (s && b1 ? 1 : 0);
        all_shapes(pm, procs.size(), r, s, t.pair_label(pair, s), next);
      }
    }
  }
  t.cfm.acceptance.push_back(full_rectangle(t.cfm));
  t.functional = true;
  return t;
}

// Strict until: output 1 at e iff some later g has b2 = 1 with b1 = 1
// strictly in between.  Positive outputs leave an obligation that must be
// discharged; negative outputs forbid a discharge until b1 fails.
Transducer strict_until_transducer(const ProcessSet& procs) {
  LabelSet bits2 = product_labels(bit_labels(), bit_labels());
  Transducer t;
  t.input = bits2;
  t.output = bit_labels();
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(bits2, bit_labels());
  t.cfm.messages = {kMsg};
  t.cfm.machines.resize(procs.size());
  for (int r = 0; r < procs.size(); ++r) {
    auto& pm = t.cfm.machines[r];
    pm.state_names = {"n0p0", "n0p1", "n1p0", "n1p1"};  // (neg, pos) flags
    pm.initial = 0;
    for (int neg = 0; neg < 2; ++neg) {
      for (int pos = 0; pos < 2; ++pos) {
        int s = neg * 2 + pos;
        for (int pair = 0; pair < 4; ++pair) {
          int b1 = pair / 2, b2 = pair % 2;
          if (pos && !b2 && !b1) continue;  // pending claim with no way forward
          if (neg && b2) continue;          // forbidden discharge happened
          for (int o = 0; o < 2; ++o) {
            int pos2 = o || (pos && !b2);
            int neg2 = (o == 0) || (neg && b1);
            all_shapes(pm, procs.size(), r, s, t.pair_label(pair, o), neg2 * 2 + pos2);
          }
        }
      }
    }
  }
  Rectangle rect;  // every obligation discharged
  rect.states.resize(procs.size());
  for (int r = 0; r < procs.size(); ++r) rect.states[r] = {0, 2};
  t.cfm.acceptance.push_back(rect);
  t.functional = true;
  return t;
}

// Outputs, on every event of p, whether some event of q carries input 1
// (and 0 on all other processes).  The answer is guessed up front on p and
// checked against q's observation by the acceptance condition.
Transducer jump_broadcast_transducer(const ProcessSet& procs, int p, int q) {
  Transducer t;
  t.input = bit_labels();
  t.output = bit_labels();
  t.cfm.processes = procs;
  t.cfm.alphabet = product_labels(t.input, t.output);
  t.cfm.messages = {kMsg};
  t.cfm.machines.resize(procs.size());
  int np = procs.size();

  if (p == q) {
    for (int r = 0; r < np; ++r) {
      auto& pm = t.cfm.machines[r];
      if (r != p) {
        pm.state_names = {"q0"};
        pm.initial = 0;
        for (int b = 0; b < 2; ++b) all_shapes(pm, np, r, 0, t.pair_label(b, 0), 0);
        continue;
      }
      pm.state_names = {"u", "c1s0", "c1s1", "c0"};
      pm.initial = 0;
      for (int b = 0; b < 2; ++b) {
        // choose output 1: remember whether a 1 was seen
        all_shapes(pm, np, r, 0, t.pair_label(b, 1), b ? 2 : 1);
        all_shapes(pm, np, r, 1, t.pair_label(b, 1), b ? 2 : 1);
        all_shapes(pm, np, r, 2, t.pair_label(b, 1), 2);
      }
      // choose output 0: no input 1 may ever occur
      all_shapes(pm, np, r, 0, t.pair_label(0, 0), 3);
      all_shapes(pm, np, r, 3, t.pair_label(0, 0), 3);
    }
    Rectangle rect;
    rect.states.resize(np);
    for (int r = 0; r < np; ++r)
      rect.states[r] = r == p ? std::vector<int>{0, 2, 3} : std::vector<int>{0};
    t.cfm.acceptance.push_back(rect);
    t.functional = true;
    return t;
  }

  for (int r = 0; r < np; ++r) {
    auto& pm = t.cfm.machines[r];
    if (r == p) {
      pm.state_names = {"u", "c1", "c0"};
      pm.initial = 0;
      for (int b = 0; b < 2; ++b) {
        all_shapes(pm, np, r, 0, t.pair_label(b, 1), 1);
        all_shapes(pm, np, r, 1, t.pair_label(b, 1), 1);
        all_shapes(pm, np, r, 0, t.pair_label(b, 0), 2);
        all_shapes(pm, np, r, 2, t.pair_label(b, 0), 2);
      }
    } else if (r == q) {
      pm.state_names = {"s0", "s1"};
      pm.initial = 0;
      all_shapes(pm, np, r, 0, t.pair_label(0, 0), 0);
      all_shapes(pm, np, r, 0, t.pair_label(1, 0), 1);
      all_shapes(pm, np, r, 1, t.pair_label(0, 0), 1);
      all_shapes(pm, np, r, 1, t.pair_label(1, 0), 1);
    } else {
      pm.state_names = {"q0"};
      pm.initial = 0;
      for (int b = 0; b < 2; ++b) all_shapes(pm, np, r, 0, t.pair_label(b, 0), 0);
    }
  }
  auto rect_for = [&](std::vector<int> pstates, std::vector<int> qstates) {
    Rectangle rect;
    rect.states.resize(np);
    for (int r = 0; r < np; ++r) {
      if (r == p)
        rect.states[r] = pstates;
      else if (r == q)
        rect.states[r] = qstates;
      else
        for (int s = 0; s < t.cfm.machines[r].state_count(); ++s) rect.states[r].push_back(s);
    }
    return rect;
  };
  t.cfm.acceptance.push_back(rect_for({1}, {1}));      // claimed yes, q saw one
  t.cfm.acceptance.push_back(rect_for({2}, {0}));      // claimed no, q saw none
  t.cfm.acceptance.push_back(rect_for({0}, {0, 1}));   // p had no events
  t.functional = true;
  return t;
}

Transducer color_guess_transducer(const Signature& sig, const LabelSet& colors) {
  // Keeps the input label and attaches a free color choice.
  LabelSet colored = product_labels(sig.labels, colors);
  int nc = colors.size();
  Transducer t = stateless(sig.processes, sig.labels, colored, [nc](int, int a) {
    std::vector<int> outs;
    for (int c = 0; c < nc; ++c) outs.push_back(a * nc + c);
    return outs;
  });
  t.functional = false;
  return t;
}

Transducer project_colors_transducer(const Signature& sig, const LabelSet& colors,
                                     const std::vector<int>& bit_of_color) {
  LabelSet prod = product_labels(sig.labels, colors);
  int nc = colors.size();
  return stateless(sig.processes, prod, bit_labels(), [&, nc](int, int pair) {
    return std::vector<int>{bit_of_color[pair % nc]};
  });
}

// ---------------------------------------------------------------------------
// Loop-free compilation (composition of the base library)

namespace {

PathPtr relabel_path_impl(const PathPtr& p, const std::function<EvPtr(int)>& lift);

EvPtr relabel_event_impl(const EvPtr& f, const std::function<EvPtr(int)>& lift) {
  switch (f->kind) {
    case PdlEventKind::True:
    case PdlEventKind::False:
    case PdlEventKind::ProcTest:
      return f;
    case PdlEventKind::LabelTest:
      return lift(f->label);
    case PdlEventKind::Or:
      return ev_or(relabel_event_impl(f->lhs, lift), relabel_event_impl(f->rhs, lift));
    case PdlEventKind::Not:
      return ev_not(relabel_event_impl(f->lhs, lift));
    case PdlEventKind::Ex:
      return ev_ex(relabel_path_impl(f->path, lift), relabel_event_impl(f->lhs, lift));
    case PdlEventKind::Loop:
      return ev_loop(relabel_path_impl(f->path, lift));
  }
  throw Error(ErrorKind::Internal, "unreachable");
}

PathPtr relabel_path_impl(const PathPtr& p, const std::function<EvPtr(int)>& lift) {
  auto img = minmax_image_of(p);
  PathPtr out;
  switch (p->kind) {
    case PdlPathKind::Next:
    case PdlPathKind::Prev:
    case PdlPathKind::Msg:
    case PdlPathKind::MsgInv:
    case PdlPathKind::Jump:
      out = p;
      break;
    case PdlPathKind::GuardRight:
      out = path_guard_right(relabel_event_impl(p->guard, lift));
      break;
    case PdlPathKind::GuardLeft:
      out = path_guard_left(relabel_event_impl(p->guard, lift));
      break;
    case PdlPathKind::Test:
      out = path_test(relabel_event_impl(p->guard, lift));
      break;
    case PdlPathKind::Concat:
      out = path_cat(relabel_path_impl(p->lhs, lift), relabel_path_impl(p->rhs, lift));
      break;
    case PdlPathKind::Union:
      out = path_union(relabel_path_impl(p->lhs, lift), relabel_path_impl(p->rhs, lift));
      break;
    case PdlPathKind::Inter:
      out = path_inter(relabel_path_impl(p->lhs, lift), relabel_path_impl(p->rhs, lift));
      break;
    case PdlPathKind::Complement:
      out = path_complement(relabel_path_impl(p->lhs, lift));
      break;
    default:
      throw Error(ErrorKind::Internal, "unreachable");
  }
  if (img) note_minmax_image(out, img->kind, relabel_path_impl(img->core, lift));
  return out;
}

struct Compiler {
  CompileLimits limits;
  std::map<std::pair<uint64_t, size_t>, Transducer> memo;  // (formula uid, sig hash)

  size_t sig_key(const Signature& sig) const {
    size_t h = 1469598103934665603ull;
    for (auto& s : sig.labels.names) h = (h ^ std::hash<std::string>()(s)) * 1099511628211ull;
    return h;
  }

  Transducer loopfree(const Signature& sig, const EvPtr& phi) {
    auto key = std::make_pair(phi->uid, sig_key(sig));
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    Transducer out = build_loopfree(sig, phi);
    memo.emplace(key, out);
    return out;
  }

  // Boolean combinations compile as one product over the distinct modal
  // leaves plus a stateless function of their bits; composing or2/neg pair
  // by pair would square every shared submachine instead.
  void modal_leaves(const EvPtr& phi, std::vector<EvPtr>& out) {
    switch (phi->kind) {
      case PdlEventKind::True:
      case PdlEventKind::False:
        return;
      case PdlEventKind::Or:
      case PdlEventKind::Not:
        modal_leaves(phi->lhs, out);
        if (phi->rhs) modal_leaves(phi->rhs, out);
        return;
      default:
        for (auto& seen : out)
          if (seen == phi) return;
        out.push_back(phi);
        return;
    }
  }

  static bool eval_bool(const EvPtr& phi, const std::vector<EvPtr>& leaves,
                        const std::vector<bool>& bits) {
    switch (phi->kind) {
      case PdlEventKind::True: return true;
      case PdlEventKind::False: return false;
      case PdlEventKind::Or:
        return eval_bool(phi->lhs, leaves, bits) || eval_bool(phi->rhs, leaves, bits);
      case PdlEventKind::Not:
        return !eval_bool(phi->lhs, leaves, bits);
      default:
        for (size_t i = 0; i < leaves.size(); ++i)
          if (leaves[i] == phi) return bits[i];
        throw Error(ErrorKind::Internal, "boolean leaf not indexed");
    }
  }

  Transducer boolean_layer(const Signature& sig, const EvPtr& phi) {
    std::vector<EvPtr> leaves;
    modal_leaves(phi, leaves);
    int k = (int)leaves.size();
    if (k == 0)
      return const_bit_transducer(sig, eval_bool(phi, leaves, {}) ? 1 : 0);

    Transducer t = loopfree(sig, leaves[0]);
    for (int i = 1; i < k; ++i) t = product(t, loopfree(sig, leaves[i]), limits.cfm);

    // One stateless machine evaluating the combination over the leaf bits.
    auto fn = [&, k](int, int packed) {
      std::vector<bool> bits(k);
      for (int i = k - 1; i >= 0; --i) {
        bits[i] = packed % 2;
        packed /= 2;
      }
      return std::vector<int>{eval_bool(phi, leaves, bits) ? 1 : 0};
    };
    Transducer collapse = stateless(sig.processes, t.output, bit_labels(), fn);
    Transducer out = compose(collapse, t, limits.cfm);
    out.functional = true;
    return out;
  }

  Transducer build_loopfree(const Signature& sig, const EvPtr& phi) {
    switch (phi->kind) {
      case PdlEventKind::True: return const_bit_transducer(sig, 1);
      case PdlEventKind::False: return const_bit_transducer(sig, 0);
      case PdlEventKind::ProcTest: return proc_test_transducer(sig, phi->proc);
      case PdlEventKind::LabelTest: return label_test_transducer(sig, phi->label);
      case PdlEventKind::Or:
      case PdlEventKind::Not:
        return boolean_layer(sig, phi);
      case PdlEventKind::Ex: {
        const PathPtr& pi = phi->path;
        const EvPtr& arg = phi->lhs;
        switch (pi->kind) {
          case PdlPathKind::Concat:
            return loopfree(sig, ev_ex(pi->lhs, ev_ex(pi->rhs, arg)));
          case PdlPathKind::Test:
            return loopfree(sig, ev_and(pi->guard, arg));
          case PdlPathKind::Next:
            return until_machine(sig, ev_false(), arg);
          case PdlPathKind::Prev:
            return since_machine(sig, ev_false(), arg);
          case PdlPathKind::GuardRight:
            return until_machine(sig, pi->guard, arg);
          case PdlPathKind::GuardLeft:
            return since_machine(sig, pi->guard, arg);
          case PdlPathKind::Msg:
            return compose(msg_guess_transducer(sig.processes, pi->p, pi->q),
                           loopfree(sig, arg), limits.cfm);
          case PdlPathKind::MsgInv:
            return compose(msg_inv_transducer(sig.processes, pi->p, pi->q),
                           loopfree(sig, arg), limits.cfm);
          case PdlPathKind::Jump:
            return compose(jump_broadcast_transducer(sig.processes, pi->p, pi->q),
                           loopfree(sig, arg), limits.cfm);
          default:
            throw Error(ErrorKind::UnsupportedFragment,
                        "loop-free compilation cannot handle this path operator");
        }
      }
      case PdlEventKind::Loop:
        throw Error(ErrorKind::LoopNotAllowed, "Loop under loop-free compilation");
    }
    throw Error(ErrorKind::Internal, "unreachable");
  }

  Transducer until_machine(const Signature& sig, const EvPtr& guard, const EvPtr& target) {
    return compose(strict_until_transducer(sig.processes),
                   product(loopfree(sig, guard), loopfree(sig, target), limits.cfm),
                   limits.cfm);
  }
  Transducer since_machine(const Signature& sig, const EvPtr& guard, const EvPtr& target) {
    return compose(strict_since_transducer(sig.processes),
                   product(loopfree(sig, guard), loopfree(sig, target), limits.cfm),
                   limits.cfm);
  }

  // ---- Loop over a single min/max image (four-color construction) ----

  Transducer minmax_loop(const Signature& sig, const PathPtr& core, MinMaxKind kind) {
    CompRel comp = comp_relation(core, sig.processes.size());
    if (!comp.subset_of_id()) return const_bit_transducer(sig, 0);

    PathPtr image = kind == MinMaxKind::Min ? min_path(core) : max_path(core);
    LabelSet colors{{"Y1", "Y2", "N1", "N2"}};
    Signature prodsig{sig.processes, product_labels(sig.labels, colors)};
    int nc = colors.size();

    // Lift the path to the colored alphabet.
    auto lift_label = [&](int a) {
      std::vector<EvPtr> parts;
      for (int c = 0; c < nc; ++c) parts.push_back(ev_label(a * nc + c));
      return ev_or_all(parts);
    };
    PathPtr lifted = relabel_path_impl(image, lift_label);

    std::vector<EvPtr> y1_parts, y2_parts;
    for (int a = 0; a < sig.labels.size(); ++a) {
      y1_parts.push_back(ev_label(a * nc + 0));
      y2_parts.push_back(ev_label(a * nc + 1));
    }
    EvPtr y1 = ev_or_all(y1_parts);
    EvPtr y2 = ev_or_all(y2_parts);
    EvPtr psi = ev_iff(ev_or(y1, y2),
                       ev_or(ev_and(y1, ev_ex(lifted, y1)), ev_and(y2, ev_ex(lifted, y2))));

    Transducer a_psi = loopfree(prodsig, psi);

    // Condition 2: every event of the psi-labeling carries 1.
    Cfm cond2 = a_psi.cfm;
    for (size_t p = 0; p < cond2.machines.size(); ++p) {
      std::vector<CfmTransition> kept;
      for (auto& t : cond2.machines[p].transitions) {
        if (a_psi.out_of(t.act.label) != 1) continue;
        CfmTransition t2 = t;
        t2.act.label = a_psi.in_of(t.act.label);
        kept.push_back(t2);
      }
      cond2.machines[p].transitions = std::move(kept);
    }
    cond2.alphabet = prodsig.labels;

    // Condition 1: Y-colors alternate on each process, starting with Y1.
    Cfm cond1;
    cond1.processes = sig.processes;
    cond1.alphabet = prodsig.labels;
    cond1.messages = {kMsg};
    cond1.machines.resize(sig.processes.size());
    for (int r = 0; r < sig.processes.size(); ++r) {
      auto& pm = cond1.machines[r];
      pm.state_names = {"expY1", "expY2"};
      pm.initial = 0;
      for (int a = 0; a < sig.labels.size(); ++a) {
        for (int c = 0; c < nc; ++c) {
          int label = a * nc + c;
          if (c == 0) {  // Y1
            all_shapes(pm, sig.processes.size(), r, 0, label, 1);
          } else if (c == 1) {  // Y2
            all_shapes(pm, sig.processes.size(), r, 1, label, 0);
          } else {
            all_shapes(pm, sig.processes.size(), r, 0, label, 0);
            all_shapes(pm, sig.processes.size(), r, 1, label, 1);
          }
        }
      }
    }
    cond1.acceptance.push_back(full_rectangle(cond1));

    Cfm k_lang = intersect(cond1, cond2, limits.cfm);

    // Identity transducer restricted to the language K.
    Transducer k_id;
    k_id.input = prodsig.labels;
    k_id.output = prodsig.labels;
    k_id.cfm = k_lang;
    int nl = prodsig.labels.size();
    k_id.cfm.alphabet = product_labels(prodsig.labels, prodsig.labels);
    for (auto& pm : k_id.cfm.machines)
      for (auto& t : pm.transitions) t.act.label = t.act.label * nl + t.act.label;
    k_id.functional = true;

    Transducer guess = color_guess_transducer(sig, colors);
    Transducer beta = project_colors_transducer(sig, colors, {1, 1, 0, 0});
    Transducer out =
        compose(beta, compose(k_id, guess, limits.cfm), limits.cfm);
    out.functional = true;  // exactly one truth labeling per input
    return out;
  }

  // ---- Theorem-style induction over loop subformulas ----

  // Splits trailing <-+ off a right-nested concatenation.
  std::optional<PathPtr> strip_trailing_left_plus(const PathPtr& p) {
    if (p->kind != PdlPathKind::Concat) return std::nullopt;
    std::vector<PathPtr> parts;
    PathPtr walk = p;
    while (walk->kind == PdlPathKind::Concat) {
      parts.push_back(walk->lhs);
      walk = walk->rhs;
    }
    parts.push_back(walk);
    if (parts.back() != path_plus_left()) return std::nullopt;
    parts.pop_back();
    return path_cat_all(parts);
  }

  Transducer loop_node(const Signature& sig, const PathPtr& sigma) {
    if (auto img = minmax_image_of(sigma))
      return minmax_loop(sig, img->core, img->kind);

    auto head = strip_trailing_left_plus(sigma);
    if (!head) throw Error(ErrorKind::NotMinMaxShape, "loop path is not in normal shape");
    auto img = minmax_image_of(*head);
    if (!img) throw Error(ErrorKind::NotMinMaxShape, "loop path is not in normal shape");

    // Loop(image . <-+): the image must be strictly later than the event.
    PathPtr pi = img->kind == MinMaxKind::Max ? img->core : *head;
    CompRel comp = comp_relation(pi, sig.processes.size());
    if (!comp.subset_of_id()) return const_bit_transducer(sig, 0);

    Transducer a1 = loopfree(sig, ev_ex(pi));
    Transducer a2 = minmax_loop(sig, pi, MinMaxKind::Max);
    Transducer a3 =
        minmax_loop(sig, path_cat(path_plus_right(), converse(pi)), MinMaxKind::Min);
    Transducer a4 = minmax_loop(
        sig, path_cat(max_path(pi), path_guard_right(ev_not(ev_ex(pi)))), MinMaxKind::Max);

    Transducer quad =
        product(product(product(a1, a2, limits.cfm), a3, limits.cfm), a4, limits.cfm);
    Transducer out = compose(combiner(sig.processes, quad.output), quad, limits.cfm);
    out.functional = true;
    return out;
  }

  // Per-process bookkeeping of Claim-style case analysis: output 1 when the
  // direct witness bit is set, or when nothing changed since the previous
  // positive position.
  Transducer combiner(const ProcessSet& procs, const LabelSet& quad_bits) {
    Transducer t;
    t.input = quad_bits;  // (((b1/b2)/b3)/b4)
    t.output = bit_labels();
    t.cfm.processes = procs;
    t.cfm.alphabet = product_labels(quad_bits, bit_labels());
    t.cfm.messages = {kMsg};
    t.cfm.machines.resize(procs.size());
    for (int r = 0; r < procs.size(); ++r) {
      auto& pm = t.cfm.machines[r];
      pm.state_names = {"none", "last0", "last1"};
      pm.initial = 0;
      for (int idx = 0; idx < quad_bits.size(); ++idx) {
        int b4 = idx % 2, b3 = (idx / 2) % 2, b2 = (idx / 4) % 2, b1 = idx / 8;
        for (int mem = 0; mem < 3; ++mem) {
          int o = b3 == 1 || (b1 == 1 && b2 == 0 && b4 == 0 && mem == 2) ? 1 : 0;
          int mem2 = b1 ? (o ? 2 : 1) : mem;
          all_shapes(pm, procs.size(), r, mem, t.pair_label(idx, o), mem2);
        }
      }
    }
    t.cfm.acceptance.push_back(full_rectangle(t.cfm));
    t.functional = true;
    return t;
  }

  EvPtr find_innermost_loop(const EvPtr& phi) {
    if (!(phi->frag & kFragLoop)) return nullptr;
    switch (phi->kind) {
      case PdlEventKind::Or: {
        EvPtr l = find_innermost_loop(phi->lhs);
        if (l) return l;
        return find_innermost_loop(phi->rhs);
      }
      case PdlEventKind::Not:
        return find_innermost_loop(phi->lhs);
      case PdlEventKind::Ex: {
        EvPtr inner = find_innermost_loop_in_path(phi->path);
        if (inner) return inner;
        return find_innermost_loop(phi->lhs);
      }
      case PdlEventKind::Loop: {
        EvPtr inner = find_innermost_loop_in_path(phi->path);
        return inner ? inner : phi;
      }
      default:
        return nullptr;
    }
  }
  EvPtr find_innermost_loop_in_path(const PathPtr& p) {
    if (!(p->frag & kFragLoop)) return nullptr;
    if (p->guard) {
      EvPtr inner = find_innermost_loop(p->guard);
      if (inner) return inner;
    }
    if (p->lhs) {
      EvPtr inner = find_innermost_loop_in_path(p->lhs);
      if (inner) return inner;
    }
    if (p->rhs) {
      EvPtr inner = find_innermost_loop_in_path(p->rhs);
      if (inner) return inner;
    }
    return nullptr;
  }

  Transducer event(const Signature& sig, const EvPtr& phi) {
    if (!(phi->frag & kFragLoop)) return loopfree(sig, phi);
    EvPtr psi = find_innermost_loop(phi);
    if (!psi) throw Error(ErrorKind::Internal, "loop tag without a loop node");

    Transducer a_psi = loop_node(sig, psi->path);

    // Substitute psi's truth value as a fresh bit on the labels and recurse
    // on a formula with one loop fewer.
    LabelSet bits = bit_labels();
    Signature newsig{sig.processes, product_labels(sig.labels, bits)};
    auto lift_label = [&](int a) {
      return ev_or(ev_label(a * 2 + 0), ev_label(a * 2 + 1));
    };
    std::vector<EvPtr> bit_one;
    for (int a = 0; a < sig.labels.size(); ++a) bit_one.push_back(ev_label(a * 2 + 1));
    EvPtr replacement = ev_or_all(bit_one);

    EvPtr lifted = substitute_event(phi, psi, replacement, lift_label);
    Transducer rest = event(newsig, lifted);
    Transducer tagged = product(identity_transducer(sig), a_psi, limits.cfm);
    Transducer out = compose(rest, tagged, limits.cfm);
    out.functional = true;
    return out;
  }

  // Rewrites labels through `lift` and replaces occurrences of `target`
  // (an event formula) by `replacement`.
  EvPtr substitute_event(const EvPtr& f, const EvPtr& target, const EvPtr& replacement,
                         const std::function<EvPtr(int)>& lift) {
    if (f == target) return replacement;
    switch (f->kind) {
      case PdlEventKind::True:
      case PdlEventKind::False:
        return f;
      case PdlEventKind::ProcTest:
        return f;
      case PdlEventKind::LabelTest:
        return lift(f->label);
      case PdlEventKind::Or:
        return ev_or(substitute_event(f->lhs, target, replacement, lift),
                     substitute_event(f->rhs, target, replacement, lift));
      case PdlEventKind::Not:
        return ev_not(substitute_event(f->lhs, target, replacement, lift));
      case PdlEventKind::Ex:
        return ev_ex(substitute_path(f->path, target, replacement, lift),
                     substitute_event(f->lhs, target, replacement, lift));
      case PdlEventKind::Loop:
        return ev_loop(substitute_path(f->path, target, replacement, lift));
    }
    throw Error(ErrorKind::Internal, "unreachable");
  }

  PathPtr substitute_path(const PathPtr& p, const EvPtr& target, const EvPtr& replacement,
                          const std::function<EvPtr(int)>& lift) {
    auto img = minmax_image_of(p);
    PathPtr out;
    switch (p->kind) {
      case PdlPathKind::Next:
      case PdlPathKind::Prev:
      case PdlPathKind::Msg:
      case PdlPathKind::MsgInv:
      case PdlPathKind::Jump:
        out = p;
        break;
      case PdlPathKind::GuardRight:
        out = path_guard_right(substitute_event(p->guard, target, replacement, lift));
        break;
      case PdlPathKind::GuardLeft:
        out = path_guard_left(substitute_event(p->guard, target, replacement, lift));
        break;
      case PdlPathKind::Test:
        out = path_test(substitute_event(p->guard, target, replacement, lift));
        break;
      case PdlPathKind::Concat:
        out = path_cat(substitute_path(p->lhs, target, replacement, lift),
                       substitute_path(p->rhs, target, replacement, lift));
        break;
      case PdlPathKind::Union:
        out = path_union(substitute_path(p->lhs, target, replacement, lift),
                         substitute_path(p->rhs, target, replacement, lift));
        break;
      case PdlPathKind::Inter:
        out = path_inter(substitute_path(p->lhs, target, replacement, lift),
                         substitute_path(p->rhs, target, replacement, lift));
        break;
      case PdlPathKind::Complement:
        out = path_complement(substitute_path(p->lhs, target, replacement, lift));
        break;
      default:
        throw Error(ErrorKind::Internal, "unreachable");
    }
    if (img)
      note_minmax_image(out, img->kind, substitute_path(img->core, target, replacement, lift));
    return out;
  }
};

}  // namespace

Transducer compile_loopfree(const Signature& sig, const EvPtr& phi, CompileLimits limits) {
  if (phi->frag & kFragLoop)
    throw Error(ErrorKind::LoopNotAllowed, "formula contains Loop");
  Compiler c{limits, {}};
  return c.loopfree(sig, phi);
}

Transducer compile_minmax_loop(const Signature& sig, const PathPtr& core, MinMaxKind kind,
                               CompileLimits limits) {
  if (core->frag & (kFragLoop | kFragUnion | kFragInter | kFragComplement))
    throw Error(ErrorKind::NotMinMaxShape, "core must be a loop-free Loop-fragment path");
  Compiler c{limits, {}};
  return c.minmax_loop(sig, core, kind);
}

namespace {

PathPtr normalize_path(const PathPtr& p);

EvPtr normalize_event(const EvPtr& f) {
  switch (f->kind) {
    case PdlEventKind::True:
    case PdlEventKind::False:
    case PdlEventKind::ProcTest:
    case PdlEventKind::LabelTest:
      return f;
    case PdlEventKind::Or:
      return ev_or(normalize_event(f->lhs), normalize_event(f->rhs));
    case PdlEventKind::Not:
      return ev_not(normalize_event(f->lhs));
    case PdlEventKind::Ex:
      return ev_ex(normalize_path(f->path), normalize_event(f->lhs));
    case PdlEventKind::Loop: {
      PathPtr pi = normalize_path(f->path);
      if (minmax_image_of(pi)) return ev_loop(pi);
      if (pi->kind == PdlPathKind::Concat) {
        std::vector<PathPtr> parts;
        PathPtr walk = pi;
        while (walk->kind == PdlPathKind::Concat) {
          parts.push_back(walk->lhs);
          walk = walk->rhs;
        }
        parts.push_back(walk);
        if (parts.back() == path_plus_left()) {
          parts.pop_back();
          if (minmax_image_of(path_cat_all(parts))) return ev_loop(pi);
        }
      }
      PathPtr mx = max_path(pi);
      PathPtr mn = min_path(pi);
      return ev_or(ev_loop(mx),
                   ev_and_all({ev_ex(converse(pi)), ev_loop(path_cat(mx, path_plus_left())),
                               ev_not(ev_loop(path_cat(mn, path_plus_left())))}));
    }
  }
  throw Error(ErrorKind::Internal, "unreachable");
}

PathPtr normalize_path(const PathPtr& p) {
  switch (p->kind) {
    case PdlPathKind::Next:
    case PdlPathKind::Prev:
    case PdlPathKind::Msg:
    case PdlPathKind::MsgInv:
    case PdlPathKind::Jump:
      return p;
    case PdlPathKind::GuardRight:
      return path_guard_right(normalize_event(p->guard));
    case PdlPathKind::GuardLeft:
      return path_guard_left(normalize_event(p->guard));
    case PdlPathKind::Test:
      return path_test(normalize_event(p->guard));
    case PdlPathKind::Concat:
      return path_cat(normalize_path(p->lhs), normalize_path(p->rhs));
    case PdlPathKind::Union:
      return path_union(normalize_path(p->lhs), normalize_path(p->rhs));
    case PdlPathKind::Inter:
      return path_inter(normalize_path(p->lhs), normalize_path(p->rhs));
    case PdlPathKind::Complement:
      return path_complement(normalize_path(p->lhs));
  }
  throw Error(ErrorKind::Internal, "unreachable");
}

}  // namespace

EvPtr normalize_loops(const EvPtr& phi) { return normalize_event(phi); }

Transducer compile_event(const Signature& sig, const EvPtr& phi, CompileLimits limits) {
  if (phi->frag & (kFragUnion | kFragInter | kFragComplement))
    throw Error(ErrorKind::UnsupportedFragment,
                "event compilation expects the Loop fragment");
  Compiler c{limits, {}};
  return c.event(sig, normalize_loops(phi));
}

Cfm compile_sentence(const Signature& sig, const SentPtr& xi, CompileLimits limits) {
  // Collect the E-leaves and remember the boolean structure.
  std::vector<EvPtr> leaves;
  std::function<int(const SentPtr&)> index_leaves = [&](const SentPtr& s) -> int {
    switch (s->kind) {
      case PdlSentenceKind::Exists: {
        for (int i = 0; i < (int)leaves.size(); ++i)
          if (leaves[i] == s->event) return i;
        leaves.push_back(s->event);
        return (int)leaves.size() - 1;
      }
      case PdlSentenceKind::Or:
        index_leaves(s->lhs);
        index_leaves(s->rhs);
        return -1;
      case PdlSentenceKind::Not:
        index_leaves(s->lhs);
        return -1;
    }
    return -1;
  };
  index_leaves(xi);
  if (leaves.empty()) throw Error(ErrorKind::Internal, "sentence without E subformulas");

  std::function<bool(const SentPtr&, const std::vector<bool>&)> truth =
      [&](const SentPtr& s, const std::vector<bool>& bits) -> bool {
    switch (s->kind) {
      case PdlSentenceKind::Exists:
        for (int i = 0; i < (int)leaves.size(); ++i)
          if (leaves[i] == s->event) return bits[i];
        return false;
      case PdlSentenceKind::Or:
        return truth(s->lhs, bits) || truth(s->rhs, bits);
      case PdlSentenceKind::Not:
        return !truth(s->lhs, bits);
    }
    return false;
  };

  Compiler c{limits, {}};
  Transducer t = c.event(sig, normalize_loops(leaves[0]));
  for (size_t i = 1; i < leaves.size(); ++i)
    t = product(t, c.event(sig, normalize_loops(leaves[i])), limits.cfm);
  int k = (int)leaves.size();

  // Decoder from the product output label to the leaf bit vector.
  auto bits_of_out = [&](int out) {
    std::vector<bool> bits(k);
    for (int i = k - 1; i >= 0; --i) {
      bits[i] = out % 2;
      out /= 2;
    }
    return bits;
  };

  // Extend each process machine with "leaf i fired here" flags.
  int np = sig.processes.size();
  Cfm out;
  out.processes = sig.processes;
  out.alphabet = sig.labels;
  out.messages = t.cfm.messages;
  out.machines.resize(np);
  std::vector<std::vector<std::pair<int, unsigned>>> states(np);  // (base state, flags)
  for (int p = 0; p < np; ++p) {
    std::map<std::pair<int, unsigned>, int> index;
    auto add = [&](int s, unsigned flags) {
      auto key = std::make_pair(s, flags);
      auto it = index.find(key);
      if (it != index.end()) return it->second;
      int id = (int)states[p].size();
      index.emplace(key, id);
      states[p].push_back(key);
      return id;
    };
    add(t.cfm.machines[p].initial, 0);
    out.machines[p].initial = 0;
    std::vector<std::vector<int>> by_src(t.cfm.machines[p].state_count());
    for (int i = 0; i < (int)t.cfm.machines[p].transitions.size(); ++i)
      by_src[t.cfm.machines[p].transitions[i].src].push_back(i);
    for (int id = 0; id < (int)states[p].size(); ++id) {
      auto [s, flags] = states[p][id];
      for (int ti : by_src[s]) {
        const CfmTransition& tr = t.cfm.machines[p].transitions[ti];
        auto bits = bits_of_out(t.out_of(tr.act.label));
        unsigned flags2 = flags;
        for (int i = 0; i < k; ++i)
          if (bits[i]) flags2 |= 1u << i;
        CfmTransition t2 = tr;
        t2.src = id;
        t2.dst = add(tr.dst, flags2);
        t2.act.label = t.in_of(tr.act.label);
        out.machines[p].transitions.push_back(t2);
      }
    }
    out.machines[p].state_names.resize(states[p].size());
    for (size_t i = 0; i < states[p].size(); ++i)
      out.machines[p].state_names[i] = "q" + std::to_string(i);
  }

  // Acceptance: for every satisfying combination of "some event fired" bits
  // and every choice of witness processes, one rectangle.
  for (auto& base_rect : t.cfm.acceptance) {
    for (unsigned truth_bits = 0; truth_bits < (1u << k); ++truth_bits) {
      std::vector<bool> bits(k);
      for (int i = 0; i < k; ++i) bits[i] = (truth_bits >> i) & 1;
      if (!truth(xi, bits)) continue;
      // witnesses: an assignment of each set bit to a process
      std::vector<int> witness(k, 0);
      while (true) {
        Rectangle rect;
        rect.states.resize(np);
        bool possible = true;
        for (int p = 0; p < np && possible; ++p) {
          for (int id = 0; id < (int)states[p].size(); ++id) {
            auto [s, flags] = states[p][id];
            if (!std::binary_search(base_rect.states[p].begin(), base_rect.states[p].end(),
                                    s))
              continue;
            bool ok = true;
            for (int i = 0; i < k; ++i) {
              bool has = (flags >> i) & 1;
              if (!bits[i] && has) ok = false;              // bit must never fire
              if (bits[i] && witness[i] == p && !has) ok = false;  // witness must fire
            }
            if (ok) rect.states[p].push_back(id);
          }
          if (rect.states[p].empty()) possible = false;
        }
        if (possible) out.acceptance.push_back(std::move(rect));
        // next witness assignment over set bits
        int i = 0;
        while (i < k) {
          if (!bits[i]) {
            ++i;
            continue;
          }
          if (++witness[i] < np) break;
          witness[i] = 0;
          ++i;
        }
        if (i == k) break;
      }
    }
  }
  return out;
}

Cfm compile_fo_sentence(const Signature& sig, const FoPtr& phi, CompileLimits limits) {
  SentPtr xi = translate_to_sentence(phi, sig, limits.translate);
  return compile_sentence(sig, xi, limits);
}

}  // namespace msc
