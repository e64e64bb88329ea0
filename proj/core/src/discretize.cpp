#include "hcsp/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace hcsp {

namespace {

ExprPtr shift_expr(const ExprPtr& e, double delta) {
  if (delta == 0) return e;
  if (e->kind == Expr::Kind::Const) return econst(e->value + delta);
  return delta > 0 ? eadd(e, econst(delta)) : esub(e, econst(-delta));
}

/// Push negations to atoms and shift each comparison boundary.
/// outward=true gives N(B, eps); outward=false gives N(B, -eps).
BoolPtr shift_nnf(const BoolPtr& b, double eps, bool outward, bool negated) {
  switch (b->kind) {
    case BoolExpr::Kind::True:
      return negated ? bfalse() : btrue();
    case BoolExpr::Kind::False:
      return negated ? btrue() : bfalse();
    case BoolExpr::Kind::Flag:
      return negated ? bnot(bflag(b->flag)) : bflag(b->flag);
    case BoolExpr::Kind::Not:
      return shift_nnf(b->a, eps, outward, !negated);
    case BoolExpr::Kind::And: {
      auto l = shift_nnf(b->a, eps, outward, negated);
      auto r = shift_nnf(b->b, eps, outward, negated);
      return negated ? bor(l, r) : band(l, r);
    }
    case BoolExpr::Kind::Or: {
      auto l = shift_nnf(b->a, eps, outward, negated);
      auto r = shift_nnf(b->b, eps, outward, negated);
      return negated ? band(l, r) : bor(l, r);
    }
    case BoolExpr::Kind::Cmp: {
      Cmp c = b->cmp;
      if (negated) {
        switch (c) {
          case Cmp::Lt: c = Cmp::Ge; break;
          case Cmp::Le: c = Cmp::Gt; break;
          case Cmp::Gt: c = Cmp::Le; break;
          case Cmp::Ge: c = Cmp::Lt; break;
          case Cmp::Eq: c = Cmp::Ne; break;
          case Cmp::Ne: c = Cmp::Eq; break;
        }
      }
      if (c == Cmp::Eq || c == Cmp::Ne)
        throw DiscretizeError(
            "equality atom has no neighborhood semantics: " + to_string(b));
      bool upper = (c == Cmp::Lt || c == Cmp::Le);  // lhs bounded above by rhs
      double delta = (upper ? 1.0 : -1.0) * (outward ? eps : -eps);
      return bcmp(c, b->lhs, shift_expr(b->rhs, delta));
    }
  }
  return b;
}

}  // namespace

BoolPtr neighborhood(const BoolPtr& B, double eps) {
  if (eps == 0) return B;
  return shift_nnf(B, eps, true, false);
}

BoolPtr shrink(const BoolPtr& B, double eps) {
  if (eps == 0) return B;
  return shift_nnf(B, eps, false, false);
}

namespace {

std::string flag_of(const CommEvent& ev) {
  return ev.chan + (ev.is_input ? "?" : "!");
}
std::string dual_of(const std::string& flag) {
  auto f = flag;
  f.back() = (f.back() == '?') ? '!' : '?';
  return f;
}

TermPtr set_flags(const std::vector<std::string>& flags, double value) {
  std::vector<std::pair<std::string, ExprPtr>> as;
  for (auto& f : flags) as.emplace_back(f, econst(value));
  return t_assign_multi(std::move(as));
}

std::vector<std::string> branch_flags(
    const std::vector<std::pair<CommEvent, TermPtr>>& branches) {
  std::vector<std::string> fs;
  for (auto& [ev, body] : branches) fs.push_back(flag_of(ev));
  std::sort(fs.begin(), fs.end());
  fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
  return fs;
}

/// x := x + h f(x), simultaneously over the ODE's variables.
TermPtr euler_assign(const OdeSpec& ode, double h) {
  std::vector<std::pair<std::string, ExprPtr>> as;
  for (auto& [var, rhs] : ode.eqs)
    as.emplace_back(var, eadd(evar(var), emul(econst(h), rhs)));
  return t_assign_multi(std::move(as));
}

TermPtr equilibrium_assign(const OdeSpec& ode) {
  if (!ode.cert || ode.cert->equilibrium.size() != ode.eqs.size())
    throw DiscretizeError("ODE '" + ode_key(ode) +
                          "' has no equilibrium point certificate");
  std::vector<std::pair<std::string, ExprPtr>> as;
  for (std::size_t i = 0; i < ode.eqs.size(); ++i)
    as.emplace_back(ode.eqs[i].first, econst(ode.cert->equilibrium[i]));
  return t_assign_multi(std::move(as));
}

long euler_bound(const OdeSpec& ode, double h, const TimeMap& Tmap) {
  double T = 0;
  auto it = Tmap.find(ode_key(ode));
  if (it != Tmap.end())
    T = it->second;
  else if (ode.cert && ode.cert->T)
    T = *ode.cert->T;
  else
    throw DiscretizeError("no equilibrium time known for ODE '" +
                          ode_key(ode) + "'");
  long n = static_cast<long>(std::ceil(T / h - 1e-12));
  return std::max<long>(n, 1);
}

struct Discretizer {
  double h, eps;
  const TimeMap& Tmap;

  TermPtr operator()(const TermPtr& t) const {
    if (!t) return nullptr;
    switch (t->kind) {
      case Term::Kind::Skip:
      case Term::Kind::Stop:
      case Term::Kind::Assign:
      case Term::Kind::Wait:
        return t;
      case Term::Kind::Input:
        return t_seq(t_assign(t->chan + "?", econst(1)),
                     t_seq(t_input(t->chan, t->var),
                           t_assign(t->chan + "?", econst(0))));
      case Term::Kind::Output:
        return t_seq(t_assign(t->chan + "!", econst(1)),
                     t_seq(t_output(t->chan, t->expr),
                           t_assign(t->chan + "!", econst(0))));
      case Term::Kind::Seq:
        return t_seq((*this)(t->left), (*this)(t->right));
      case Term::Kind::Guard:
        return t_guard(t->cond, (*this)(t->left));
      case Term::Kind::IntChoice:
        return t_intchoice((*this)(t->left), (*this)(t->right));
      case Term::Kind::Repeat:
        return t_repeat((*this)(t->left), t->bound);
      case Term::Kind::Parallel:
        return t_parallel((*this)(t->left), (*this)(t->right));
      case Term::Kind::ExtChoice: {
        auto flags = branch_flags(t->branches);
        std::vector<std::pair<CommEvent, TermPtr>> bs;
        for (auto& [ev, body] : t->branches)
          bs.emplace_back(ev, t_seq(set_flags(flags, 0), (*this)(body)));
        return t_seq(set_flags(flags, 1), t_extchoice(std::move(bs)));
      }
      case Term::Kind::Ode: {
        auto NB = neighborhood(t->cond, eps);
        long n = euler_bound(*t->ode, h, Tmap);
        auto loop = t_repeat(
            t_guard(NB, t_seq(euler_assign(*t->ode, h), t_wait(econst(h)))), n);
        auto tail =
            t_guard(NB, t_seq(equilibrium_assign(*t->ode), t_stop()));
        return t_seq(loop, tail);
      }
      case Term::Kind::OdeInterrupt: {
        auto NB = neighborhood(t->cond, eps);
        long n = euler_bound(*t->ode, h, Tmap);
        auto flags = branch_flags(t->branches);
        BoolPtr no_partner = btrue();
        BoolPtr some_partner = bfalse();
        for (auto& f : flags) {
          no_partner =
              band(no_partner, band(bflag(f), bnot(bflag(dual_of(f)))));
          some_partner =
              bor(some_partner, band(bflag(f), bflag(dual_of(f))));
        }
        auto loop = t_repeat(
            t_guard(NB, t_guard(no_partner, t_seq(euler_assign(*t->ode, h),
                                                  t_wait(econst(h))))),
            n);
        auto exit_clear =
            t_guard(band(bnot(NB), no_partner), set_flags(flags, 0));
        std::vector<std::pair<CommEvent, TermPtr>> bs;
        for (auto& [ev, body] : t->branches)
          bs.emplace_back(ev, t_seq(set_flags(flags, 0), (*this)(body)));
        auto comm = t_guard(some_partner, t_extchoice(std::move(bs)));
        auto eq_stop = t_guard(band(NB, no_partner),
                               t_seq(equilibrium_assign(*t->ode), t_stop()));
        return t_seq(set_flags(flags, 1),
                     t_seq(loop, t_seq(exit_clear, t_seq(comm, eq_stop))));
      }
    }
    return t;
  }
};

}  // namespace

TermPtr discretize(const TermPtr& P, double h, double eps, const TimeMap& Tmap) {
  if (h <= 0) throw DiscretizeError("step size must be positive");
  return Discretizer{h, eps, Tmap}(P);
}

TimeMap equilibrium_times(const TermPtr& P, const Valuation& v0, double eps,
                          double horizon) {
  TimeMap out;
  for (auto& ode : collect_odes(P)) {
    if (!ode->cert) continue;
    VectorField f(*ode);
    f.params = v0;
    std::vector<double> x0;
    bool have_x0 = true;
    for (auto& [var, rhs] : ode->eqs) {
      auto it = v0.find(var);
      if (it == v0.end()) have_x0 = false;
      else x0.push_back(it->second);
    }
    std::optional<double> T;
    if (have_x0) {
      try {
        T = estimate_equilibrium_time(f, x0, ode->cert->equilibrium, eps,
                                      horizon);
      } catch (const EvalError&) {
      }
    }
    if (!T && ode->cert->T) T = *ode->cert->T;
    if (T) out[ode_key(*ode)] = *T;
  }
  return out;
}

// ---- robust safety ----

namespace {

/// Variables carrying continuous information: ODE variables, plus anything
/// reached from them through direct assignment. A value received over a
/// channel is a sampled (discrete) copy, so communication does not
/// propagate the taint.
std::set<std::string> tainted_vars(const TermPtr& P) {
  struct Flow {
    std::vector<std::pair<std::string, ExprPtr>> assigns;
  } flow;
  std::set<std::string> taint;
  std::function<void(const TermPtr&)> walk = [&](const TermPtr& t) {
    if (!t) return;
    switch (t->kind) {
      case Term::Kind::Assign:
        for (auto& a : t->assigns) flow.assigns.push_back(a);
        break;
      case Term::Kind::Ode:
      case Term::Kind::OdeInterrupt:
        for (auto& [var, rhs] : t->ode->eqs) taint.insert(var);
        for (auto& [ev, body] : t->branches) walk(body);
        break;
      case Term::Kind::ExtChoice:
        for (auto& [ev, body] : t->branches) walk(body);
        break;
      default:
        walk(t->left);
        walk(t->right);
        break;
    }
  };
  walk(P);
  bool changed = true;
  auto touches = [&](const ExprPtr& e) {
    std::set<std::string> vs;
    collect_vars(e, vs);
    for (auto& v : vs)
      if (taint.count(v)) return true;
    return false;
  };
  while (changed) {
    changed = false;
    for (auto& [var, e] : flow.assigns)
      if (!taint.count(var) && touches(e)) {
        taint.insert(var);
        changed = true;
      }
  }
  return taint;
}

void collect_heads(const TermPtr& t, std::vector<TermPtr>& out) {
  if (!t) return;
  switch (t->kind) {
    case Term::Kind::Seq:
      collect_heads(t->left, out);
      break;
    case Term::Kind::Guard:
    case Term::Kind::Ode:
    case Term::Kind::OdeInterrupt:
      out.push_back(t);
      break;
    case Term::Kind::Parallel:
    case Term::Kind::IntChoice:
      collect_heads(t->left, out);
      collect_heads(t->right, out);
      break;
    default:
      break;
  }
}

double atom_margin(const BoolPtr& b, const Valuation& v) {
  switch (b->kind) {
    case BoolExpr::Kind::Cmp:
      try {
        return std::abs(eval(b->lhs, v) - eval(b->rhs, v));
      } catch (const EvalError&) {
        return 0;
      }
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or:
      return std::min(atom_margin(b->a, v), atom_margin(b->b, v));
    case BoolExpr::Kind::Not:
      return atom_margin(b->a, v);
    default:
      return std::numeric_limits<double>::infinity();
  }
}

bool depends_on(const BoolPtr& b, const std::set<std::string>& vars) {
  std::set<std::string> vs;
  collect_vars(b, vs);
  for (auto& v : vs)
    if (vars.count(v)) return true;
  return false;
}

/// Does the eps-ball around v (over the given dims) lie inside phi?
/// Tested at the 2^n corners plus the center.
bool ball_inside(const BoolPtr& phi, const Valuation& v,
                 const std::set<std::string>& dims, double eps) {
  std::vector<std::string> ds(dims.begin(), dims.end());
  std::size_t n = ds.size();
  if (!eval(phi, v)) return false;
  for (std::size_t mask = 0; mask < (1u << n); ++mask) {
    Valuation corner = v;
    for (std::size_t i = 0; i < n; ++i)
      corner[ds[i]] += (mask & (1u << i)) ? eps : -eps;
    if (!eval(phi, corner)) return false;
  }
  return true;
}

}  // namespace

RobustSafetyReport check_robust_safety(const TermPtr& P, const Valuation& v0,
                                       double delta, double eps,
                                       const RobustBudget& budget) {
  RobustSafetyReport rep;
  auto taint = tainted_vars(P);
  if (collect_odes(P).empty()) {
    // purely discrete process: every ordinary variable is subject to the
    // guard-margin check
    for (auto& v : vars(P))
      if (!is_aux_var(v)) taint.insert(v);
  }

  Valuation init = v0;
  for (auto& v : vars(P))
    if (is_readiness_var(v) && !init.count(v)) init[v] = 0.0;

  struct Node {
    State q;
    double t;
  };
  std::vector<Node> stack{{State{P, init}, 0.0}};
  std::set<State> visited;
  bool truncated = false;

  auto check_state = [&](const State& q, double t) {
    std::vector<TermPtr> heads;
    collect_heads(q.term, heads);
    for (auto& h : heads) {
      if (h->kind == Term::Kind::Guard) {
        if (!depends_on(h->cond, taint)) continue;
        bool ok = eval(shrink(h->cond, eps), q.val) ||
                  eval(shrink(bnot(h->cond), eps), q.val);
        if (!ok) {
          rep.witnesses.push_back({"guard " + to_string(h->cond), t, q.val,
                                   atom_margin(h->cond, q.val)});
        }
        continue;
      }
      // ODE domain exit (clause 1)
      if (eval(h->cond, q.val)) continue;
      VectorField f(*h->ode);
      f.params = q.val;
      std::set<std::string> dims;
      collect_vars(h->cond, dims);
      auto inner = shrink(bnot(h->cond), eps);
      std::vector<double> x;
      for (auto& [var, rhs] : h->ode->eqs) x.push_back(q.val.at(var));
      bool found = false;
      double step = delta / 100;
      auto xt = x;
      for (int k = 1; k < 100 && !found; ++k) {
        xt = reference_trajectory(f, xt, step);
        Valuation sigma = q.val;
        for (std::size_t i = 0; i < f.names.size(); ++i)
          sigma[f.names[i]] = xt[i];
        if (ball_inside(inner, sigma, dims, eps)) found = true;
      }
      if (!found)
        rep.witnesses.push_back({"domain exit of <" + to_string(h->cond) + ">",
                                 t, q.val, atom_margin(h->cond, q.val)});
    }
  };

  while (!stack.empty()) {
    if (++rep.steps > budget.max_steps) {
      truncated = true;
      break;
    }
    auto [q, t] = stack.back();
    stack.pop_back();
    if (!q.term) continue;
    if (!visited.insert(q).second) continue;
    rep.explored_time = std::max(rep.explored_time, t);
    check_state(q, t);
    if (!rep.witnesses.empty()) break;
    if (t >= budget.horizon) continue;
    for (auto& tr : enabled(q, delta, {})) {
      double nt = t + (tr.label.kind == Label::Kind::Delay ? tr.label.d : 0);
      stack.push_back({tr.dst, nt});
    }
  }

  if (!rep.witnesses.empty())
    rep.verdict = RobustSafetyReport::Verdict::Violated;
  else if (truncated)
    rep.verdict = RobustSafetyReport::Verdict::Inconclusive;
  else
    rep.verdict = RobustSafetyReport::Verdict::Robust;
  return rep;
}

}  // namespace hcsp
