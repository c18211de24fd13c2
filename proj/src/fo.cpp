#include "msc/fo.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "msc/sexpr.hpp"

namespace msc {

namespace {

size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

std::vector<std::string> merge_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

FoPtr make(FoKind kind, int proc, int label, std::string var, std::string var2,
           FoPtr lhs, FoPtr rhs) {
  auto n = std::make_shared<FoNode>();
  n->kind = kind;
  n->proc = proc;
  n->label = label;
  n->var = std::move(var);
  n->var2 = std::move(var2);
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);

  size_t h = hash_mix((size_t)kind, (size_t)(proc + 7) * 31 + label + 3);
  h = hash_mix(h, std::hash<std::string>()(n->var));
  h = hash_mix(h, std::hash<std::string>()(n->var2));
  if (n->lhs) h = hash_mix(h, n->lhs->hash);
  if (n->rhs) h = hash_mix(h, n->rhs->hash);
  n->hash = h;

  switch (kind) {
    case FoKind::ProcTest:
    case FoKind::LabelTest:
      n->free_sorted = {n->var};
      break;
    case FoKind::Eq:
    case FoKind::ProcEdge:
    case FoKind::MsgEdge:
    case FoKind::Le:
      if (n->var == n->var2)
        n->free_sorted = {n->var};
      else {
        n->free_sorted = {n->var, n->var2};
        std::sort(n->free_sorted.begin(), n->free_sorted.end());
      }
      break;
    case FoKind::Or:
    case FoKind::And:
    case FoKind::Implies:
      n->free_sorted = merge_vars(n->lhs->free_sorted, n->rhs->free_sorted);
      break;
    case FoKind::Not:
      n->free_sorted = n->lhs->free_sorted;
      break;
    case FoKind::Exists:
    case FoKind::Forall: {
      n->free_sorted = n->lhs->free_sorted;
      auto it = std::find(n->free_sorted.begin(), n->free_sorted.end(), n->var);
      if (it != n->free_sorted.end()) n->free_sorted.erase(it);
      break;
    }
  }
  return n;
}

}  // namespace

FoPtr fo_proc(int proc, std::string x) {
  return make(FoKind::ProcTest, proc, -1, std::move(x), "", nullptr, nullptr);
}
FoPtr fo_label(int label, std::string x) {
  return make(FoKind::LabelTest, -1, label, std::move(x), "", nullptr, nullptr);
}
FoPtr fo_eq(std::string x, std::string y) {
  return make(FoKind::Eq, -1, -1, std::move(x), std::move(y), nullptr, nullptr);
}
FoPtr fo_edge(std::string x, std::string y) {
  return make(FoKind::ProcEdge, -1, -1, std::move(x), std::move(y), nullptr, nullptr);
}
FoPtr fo_msg(std::string x, std::string y) {
  return make(FoKind::MsgEdge, -1, -1, std::move(x), std::move(y), nullptr, nullptr);
}
FoPtr fo_le(std::string x, std::string y) {
  return make(FoKind::Le, -1, -1, std::move(x), std::move(y), nullptr, nullptr);
}
FoPtr fo_or(FoPtr a, FoPtr b) {
  return make(FoKind::Or, -1, -1, "", "", std::move(a), std::move(b));
}
FoPtr fo_and(FoPtr a, FoPtr b) {
  return make(FoKind::And, -1, -1, "", "", std::move(a), std::move(b));
}
FoPtr fo_not(FoPtr a) { return make(FoKind::Not, -1, -1, "", "", std::move(a), nullptr); }
FoPtr fo_implies(FoPtr a, FoPtr b) {
  return make(FoKind::Implies, -1, -1, "", "", std::move(a), std::move(b));
}
FoPtr fo_exists(std::string x, FoPtr body) {
  return make(FoKind::Exists, -1, -1, std::move(x), "", std::move(body), nullptr);
}
FoPtr fo_forall(std::string x, FoPtr body) {
  return make(FoKind::Forall, -1, -1, std::move(x), "", std::move(body), nullptr);
}

FoPtr fo_or_all(std::vector<FoPtr> parts) {
  if (parts.empty()) throw Error(ErrorKind::Internal, "fo_or_all needs at least one formula");
  FoPtr acc = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) acc = fo_or(acc, parts[i]);
  return acc;
}
FoPtr fo_and_all(std::vector<FoPtr> parts) {
  if (parts.empty()) throw Error(ErrorKind::Internal, "fo_and_all needs at least one formula");
  FoPtr acc = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) acc = fo_and(acc, parts[i]);
  return acc;
}

bool fo_equal(const FoPtr& a, const FoPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->kind != b->kind) return false;
  if (a->proc != b->proc || a->label != b->label || a->var != b->var || a->var2 != b->var2)
    return false;
  return fo_equal(a->lhs, b->lhs) && fo_equal(a->rhs, b->rhs);
}

const std::vector<std::string>& free_vars(const FoPtr& f) { return f->free_sorted; }

// ---------------------------------------------------------------------------
// Parsing and printing

namespace {

FoPtr parse_node(const Sexpr& s, const Signature& sig) {
  if (s.is_atom)
    throw SyntaxError("expected a formula, got atom '" + s.atom + "'", s.line, s.column);
  const std::string& op = s.head();
  auto want = [&](size_t k) {
    if (s.size() != k + 1)
      throw SyntaxError("'" + op + "' expects " + std::to_string(k) + " arguments", s.line,
                        s.column);
  };
  auto var_at = [&](size_t i) -> std::string {
    if (!s.at(i).is_atom)
      throw SyntaxError("expected a variable", s.at(i).line, s.at(i).column);
    return s.at(i).atom;
  };

  if (op == "in" || op == "member" || op == "exists-set" || op == "forall-set")
    throw SyntaxError("second-order construct '" + op +
                          "' is not supported: set variables and set membership "
                          "are outside the first-order fragment",
                      s.line, s.column);

  if (op == "p") {
    want(2);
    int proc = sig.processes.index_of(s.at(1).atom);
    if (proc < 0) throw Error(ErrorKind::UnknownProcess, "unknown process " + s.at(1).atom);
    return fo_proc(proc, var_at(2));
  }
  if (op == "a") {
    want(2);
    int label = sig.labels.index_of(s.at(1).atom);
    if (label < 0) throw Error(ErrorKind::UnknownLabel, "unknown label " + s.at(1).atom);
    return fo_label(label, var_at(2));
  }
  if (op == "=") {
    want(2);
    return fo_eq(var_at(1), var_at(2));
  }
  if (op == "proc-edge") {
    want(2);
    return fo_edge(var_at(1), var_at(2));
  }
  if (op == "msg-edge") {
    want(2);
    return fo_msg(var_at(1), var_at(2));
  }
  if (op == "le") {
    want(2);
    return fo_le(var_at(1), var_at(2));
  }
  if (op == "le-proc") {
    // x <=proc y is sugar for x <= y on a shared process.
    want(2);
    std::string x = var_at(1), y = var_at(2);
    std::vector<FoPtr> same;
    for (int p = 0; p < sig.processes.size(); ++p)
      same.push_back(fo_and(fo_proc(p, x), fo_proc(p, y)));
    return fo_and(fo_le(x, y), fo_or_all(same));
  }
  if (op == "or" || op == "and") {
    if (s.size() < 3)
      throw SyntaxError("'" + op + "' expects at least two arguments", s.line, s.column);
    FoPtr acc = parse_node(s.at(1), sig);
    for (size_t i = 2; i < s.size(); ++i)
      acc = op == "or" ? fo_or(acc, parse_node(s.at(i), sig))
                       : fo_and(acc, parse_node(s.at(i), sig));
    return acc;
  }
  if (op == "not") {
    want(1);
    return fo_not(parse_node(s.at(1), sig));
  }
  if (op == "implies") {
    want(2);
    return fo_implies(parse_node(s.at(1), sig), parse_node(s.at(2), sig));
  }
  if (op == "exists" || op == "forall") {
    want(2);
    std::string v = var_at(1);
    FoPtr body = parse_node(s.at(2), sig);
    return op == "exists" ? fo_exists(v, body) : fo_forall(v, body);
  }
  throw SyntaxError("unknown operator '" + op + "'", s.line, s.column);
}

}  // namespace

FoPtr parse_fo(const std::string& text, const Signature& sig) {
  return parse_node(parse_sexpr(text), sig);
}

namespace {

void collect_chain(const FoPtr& f, FoKind kind, std::vector<FoPtr>& out) {
  if (f->kind == kind) {
    collect_chain(f->lhs, kind, out);
    out.push_back(f->rhs);
  } else {
    out.push_back(f);
  }
}

void print_rec(const FoPtr& f, const Signature& sig, std::string& out) {
  switch (f->kind) {
    case FoKind::ProcTest:
      out += "(p " + sig.processes.names[f->proc] + " " + f->var + ")";
      return;
    case FoKind::LabelTest:
      out += "(a " + sig.labels.names[f->label] + " " + f->var + ")";
      return;
    case FoKind::Eq:
      out += "(= " + f->var + " " + f->var2 + ")";
      return;
    case FoKind::ProcEdge:
      out += "(proc-edge " + f->var + " " + f->var2 + ")";
      return;
    case FoKind::MsgEdge:
      out += "(msg-edge " + f->var + " " + f->var2 + ")";
      return;
    case FoKind::Le:
      out += "(le " + f->var + " " + f->var2 + ")";
      return;
    case FoKind::Or:
    case FoKind::And: {
      std::vector<FoPtr> parts;
      collect_chain(f, f->kind, parts);
      out += f->kind == FoKind::Or ? "(or" : "(and";
      for (auto& part : parts) {
        out += ' ';
        print_rec(part, sig, out);
      }
      out += ')';
      return;
    }
    case FoKind::Not:
      out += "(not ";
      print_rec(f->lhs, sig, out);
      out += ')';
      return;
    case FoKind::Implies:
      out += "(implies ";
      print_rec(f->lhs, sig, out);
      out += ' ';
      print_rec(f->rhs, sig, out);
      out += ')';
      return;
    case FoKind::Exists:
    case FoKind::Forall:
      out += f->kind == FoKind::Exists ? "(exists " : "(forall ";
      out += f->var + " ";
      print_rec(f->lhs, sig, out);
      out += ')';
      return;
  }
}

}  // namespace

std::string print_fo(const FoPtr& f, const Signature& sig) {
  std::string out;
  print_rec(f, sig, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

FoEvalContext::FoEvalContext(const Msc& m, FoEvalLimits limits)
    : m_(m), hb_(happened_before(m)), limits_(limits) {}

size_t FoEvalContext::KeyHash::operator()(const Key& k) const {
  size_t h = std::hash<const void*>()(k.node.get());
  for (EventId e : k.env) h = hash_mix(h, (size_t)e + 1);
  return h;
}

bool FoEvalContext::eval(const FoPtr& f, const Interpretation& nu) {
  steps_ = 0;
  std::map<std::string, EventId> env;
  for (auto& [v, e] : nu.bind) {
    if (e < 0 || e >= m_.event_count())
      throw Error(ErrorKind::UnboundVariable, "binding for " + v + " is out of range");
    env[v] = e;
  }
  for (auto& v : f->free_sorted)
    if (!env.count(v))
      throw Error(ErrorKind::UnboundVariable, "free variable " + v + " is not bound");
  return eval_rec(f, env);
}

bool FoEvalContext::eval_rec(const FoPtr& f, std::map<std::string, EventId>& env) {
  if (++steps_ > limits_.max_steps) throw ResourceLimitError("eval-fo");

  Key key;
  key.node = f;
  key.env.reserve(f->free_sorted.size());
  for (auto& v : f->free_sorted) key.env.push_back(env.at(v));
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;

  bool result = false;
  auto ev = [&](const std::string& v) { return env.at(v); };
  switch (f->kind) {
    case FoKind::ProcTest: result = m_.loc(ev(f->var)) == f->proc; break;
    case FoKind::LabelTest: result = m_.label(ev(f->var)) == f->label; break;
    case FoKind::Eq: result = ev(f->var) == ev(f->var2); break;
    case FoKind::ProcEdge: result = m_.proc_next(ev(f->var)) == ev(f->var2); break;
    case FoKind::MsgEdge: {
      EventId e = ev(f->var);
      result = m_.is_send(e) && m_.partner(e) == ev(f->var2);
      break;
    }
    case FoKind::Le: result = hb_.contains(ev(f->var), ev(f->var2)); break;
    case FoKind::Or: result = eval_rec(f->lhs, env) || eval_rec(f->rhs, env); break;
    case FoKind::And: result = eval_rec(f->lhs, env) && eval_rec(f->rhs, env); break;
    case FoKind::Not: result = !eval_rec(f->lhs, env); break;
    case FoKind::Implies: result = !eval_rec(f->lhs, env) || eval_rec(f->rhs, env); break;
    case FoKind::Exists:
    case FoKind::Forall: {
      bool universal = f->kind == FoKind::Forall;
      std::optional<EventId> saved;
      if (auto found = env.find(f->var); found != env.end()) saved = found->second;
      result = universal;
      for (EventId e = 0; e < m_.event_count(); ++e) {
        env[f->var] = e;
        bool sub = eval_rec(f->lhs, env);
        if (universal && !sub) {
          result = false;
          break;
        }
        if (!universal && sub) {
          result = true;
          break;
        }
      }
      if (saved)
        env[f->var] = *saved;
      else
        env.erase(f->var);
      break;
    }
  }
  memo_.emplace(std::move(key), result);
  return result;
}

bool eval_fo(const Msc& m, const FoPtr& f, const Interpretation& nu, FoEvalLimits limits) {
  FoEvalContext ctx(m, limits);
  return ctx.eval(f, nu);
}

// ---------------------------------------------------------------------------
// Prenex normal form

namespace {

FoPtr substitute_var(const FoPtr& f, const std::string& from, const std::string& to) {
  if (!std::binary_search(f->free_sorted.begin(), f->free_sorted.end(), from)) return f;
  auto sub = [&](const std::string& v) { return v == from ? to : v; };
  switch (f->kind) {
    case FoKind::ProcTest: return fo_proc(f->proc, sub(f->var));
    case FoKind::LabelTest: return fo_label(f->label, sub(f->var));
    case FoKind::Eq: return fo_eq(sub(f->var), sub(f->var2));
    case FoKind::ProcEdge: return fo_edge(sub(f->var), sub(f->var2));
    case FoKind::MsgEdge: return fo_msg(sub(f->var), sub(f->var2));
    case FoKind::Le: return fo_le(sub(f->var), sub(f->var2));
    case FoKind::Or:
      return fo_or(substitute_var(f->lhs, from, to), substitute_var(f->rhs, from, to));
    case FoKind::And:
      return fo_and(substitute_var(f->lhs, from, to), substitute_var(f->rhs, from, to));
    case FoKind::Implies:
      return fo_implies(substitute_var(f->lhs, from, to), substitute_var(f->rhs, from, to));
    case FoKind::Not: return fo_not(substitute_var(f->lhs, from, to));
    case FoKind::Exists:
    case FoKind::Forall: {
      // `from` is free in f, so it is not the bound variable.
      FoPtr body = substitute_var(f->lhs, from, to);
      return f->kind == FoKind::Exists ? fo_exists(f->var, body) : fo_forall(f->var, body);
    }
  }
  return f;
}

void collect_all_vars(const FoPtr& f, std::set<std::string>& out) {
  if (!f->var.empty()) out.insert(f->var);
  if (!f->var2.empty()) out.insert(f->var2);
  if (f->lhs) collect_all_vars(f->lhs, out);
  if (f->rhs) collect_all_vars(f->rhs, out);
}

// Renames bound variables so that every quantifier binds a distinct name,
// also distinct from every other name in the formula.
FoPtr standardize_apart(const FoPtr& f, std::set<std::string>& used) {
  switch (f->kind) {
    case FoKind::ProcTest:
    case FoKind::LabelTest:
    case FoKind::Eq:
    case FoKind::ProcEdge:
    case FoKind::MsgEdge:
    case FoKind::Le:
      return f;
    case FoKind::Or:
      return fo_or(standardize_apart(f->lhs, used), standardize_apart(f->rhs, used));
    case FoKind::And:
      return fo_and(standardize_apart(f->lhs, used), standardize_apart(f->rhs, used));
    case FoKind::Implies:
      return fo_implies(standardize_apart(f->lhs, used), standardize_apart(f->rhs, used));
    case FoKind::Not:
      return fo_not(standardize_apart(f->lhs, used));
    case FoKind::Exists:
    case FoKind::Forall: {
      std::string name = f->var;
      FoPtr body = f->lhs;
      if (used.count(name)) {
        int k = 2;
        while (used.count(name + "_" + std::to_string(k))) ++k;
        std::string fresh = name + "_" + std::to_string(k);
        body = substitute_var(body, name, fresh);
        name = fresh;
      }
      used.insert(name);
      body = standardize_apart(body, used);
      return f->kind == FoKind::Exists ? fo_exists(name, body) : fo_forall(name, body);
    }
  }
  return f;
}

PrenexForm pull_quantifiers(const FoPtr& f) {
  switch (f->kind) {
    case FoKind::ProcTest:
    case FoKind::LabelTest:
    case FoKind::Eq:
    case FoKind::ProcEdge:
    case FoKind::MsgEdge:
    case FoKind::Le:
      return {{}, f};
    case FoKind::Not: {
      PrenexForm sub = pull_quantifiers(f->lhs);
      for (auto& q : sub.prefix) q.universal = !q.universal;
      sub.matrix = fo_not(sub.matrix);
      return sub;
    }
    case FoKind::Implies:
      return pull_quantifiers(fo_or(fo_not(f->lhs), f->rhs));
    case FoKind::Or:
    case FoKind::And: {
      PrenexForm l = pull_quantifiers(f->lhs);
      PrenexForm r = pull_quantifiers(f->rhs);
      PrenexForm out;
      out.prefix = l.prefix;
      out.prefix.insert(out.prefix.end(), r.prefix.begin(), r.prefix.end());
      out.matrix =
          f->kind == FoKind::Or ? fo_or(l.matrix, r.matrix) : fo_and(l.matrix, r.matrix);
      return out;
    }
    case FoKind::Exists:
    case FoKind::Forall: {
      PrenexForm sub = pull_quantifiers(f->lhs);
      sub.prefix.insert(sub.prefix.begin(), {f->kind == FoKind::Forall, f->var});
      return sub;
    }
  }
  return {{}, f};
}

}  // namespace

PrenexForm prenex_split(const FoPtr& f) {
  std::set<std::string> pool;
  collect_all_vars(f, pool);
  FoPtr apart = standardize_apart(f, pool);
  PrenexForm form = pull_quantifiers(apart);
  // Quantifiers over variables absent from the matrix are inert; drop them.
  std::vector<PrenexForm::Quantifier> prefix;
  for (auto& q : form.prefix)
    if (std::binary_search(form.matrix->free_sorted.begin(), form.matrix->free_sorted.end(),
                           q.var))
      prefix.push_back(q);
  form.prefix = prefix;
  return form;
}

FoPtr prenex(const FoPtr& f) {
  PrenexForm form = prenex_split(f);
  FoPtr out = form.matrix;
  for (auto it = form.prefix.rbegin(); it != form.prefix.rend(); ++it)
    out = it->universal ? fo_forall(it->var, out) : fo_exists(it->var, out);
  return out;
}

int variable_count(const FoPtr& f) {
  std::set<std::string> vars;
  collect_all_vars(f, vars);
  return (int)vars.size();
}

FoPtr fo_nnf(const FoPtr& f, bool negate) {
  switch (f->kind) {
    case FoKind::ProcTest:
    case FoKind::LabelTest:
    case FoKind::Eq:
    case FoKind::ProcEdge:
    case FoKind::MsgEdge:
    case FoKind::Le:
      return negate ? fo_not(f) : f;
    case FoKind::Not:
      return fo_nnf(f->lhs, !negate);
    case FoKind::Or:
      return negate ? fo_and(fo_nnf(f->lhs, true), fo_nnf(f->rhs, true))
                    : fo_or(fo_nnf(f->lhs, false), fo_nnf(f->rhs, false));
    case FoKind::And:
      return negate ? fo_or(fo_nnf(f->lhs, true), fo_nnf(f->rhs, true))
                    : fo_and(fo_nnf(f->lhs, false), fo_nnf(f->rhs, false));
    case FoKind::Implies:
      return fo_nnf(fo_or(fo_not(f->lhs), f->rhs), negate);
    case FoKind::Exists:
    case FoKind::Forall:
      throw Error(ErrorKind::Internal, "fo_nnf expects a quantifier-free formula");
  }
  return f;
}

}  // namespace msc
