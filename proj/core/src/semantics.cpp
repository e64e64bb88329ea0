#include "hcsp/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace hcsp {

namespace {
constexpr double kTimeTol = 1e-9;
}

Label Label::delay(double t) {
  Label l;
  l.kind = Kind::Delay;
  l.d = t;
  return l;
}
Label Label::comm(const std::string& chan, bool is_input, double value) {
  Label l;
  l.kind = Kind::Comm;
  l.chan = chan;
  l.is_input = is_input;
  l.value = value;
  return l;
}
Label Label::tau() { return Label{}; }

bool Label::operator==(const Label& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Delay: return d == o.d;
    case Kind::Comm:
      return chan == o.chan && is_input == o.is_input && value == o.value;
    case Kind::Tau: return true;
  }
  return false;
}

bool Label::operator<(const Label& o) const {
  if (kind != o.kind) return kind < o.kind;
  switch (kind) {
    case Kind::Delay: return d < o.d;
    case Kind::Comm:
      if (chan != o.chan) return chan < o.chan;
      if (is_input != o.is_input) return is_input < o.is_input;
      return value < o.value;
    case Kind::Tau: return false;
  }
  return false;
}

std::string to_string(const Label& l) {
  std::ostringstream os;
  switch (l.kind) {
    case Label::Kind::Tau: os << "tau"; break;
    case Label::Kind::Delay: os << "delay(" << l.d << ")"; break;
    case Label::Kind::Comm:
      os << l.chan << (l.is_input ? "?" : "!") << l.value;
      break;
  }
  return os.str();
}

bool State::operator<(const State& o) const {
  auto h1 = term_hash(term), h2 = term_hash(o.term);
  if (h1 != h2) return h1 < h2;
  if (!term_equal(term, o.term)) {
    // rare hash collision: fall back to printed form
    auto s1 = term ? pretty_print(term) : "";
    auto s2 = o.term ? pretty_print(o.term) : "";
    if (s1 != s2) return s1 < s2;
  }
  return val < o.val;
}

bool Transition::operator<(const Transition& o) const {
  if (!(src == o.src)) return src < o.src;
  if (!(label == o.label)) return label < o.label;
  return dst < o.dst;
}

namespace {

using Edits = std::vector<std::pair<std::string, double>>;

struct Move {
  Label label;
  TermPtr dst;
  Edits edits;
  std::string in_var;  // target variable for unresolved inputs
};

std::string clock_key(const OdeSpec& spec) { return "$clk:" + ode_key(spec); }

TermPtr par_of(TermPtr a, TermPtr b) {
  if (!a && !b) return nullptr;
  return t_parallel(std::move(a), std::move(b));
}

/// True when executing t under v provably changes nothing and terminates:
/// a chain of guards whose conditions are all false (plus skips). Used to
/// collapse the remaining iterations of a loop whose body has become inert.
bool is_noop_under(const TermPtr& t, const Valuation& v) {
  if (!t) return true;
  switch (t->kind) {
    case Term::Kind::Skip:
      return true;
    case Term::Kind::Guard:
      try {
        return !eval(t->cond, v);
      } catch (const EvalError&) {
        return false;
      }
    case Term::Kind::Seq:
      return is_noop_under(t->left, v) && is_noop_under(t->right, v);
    default:
      return false;
  }
}

struct Engine {
  const Valuation& v;
  const ExploreCtx& ctx;

  VectorField field(const OdeSpec& spec) const {
    VectorField f(spec);
    f.params = v;
    return f;
  }

  std::vector<double> ode_x0(const OdeSpec& spec) const {
    std::vector<double> x;
    for (auto& [var, e] : spec.eqs) {
      auto it = v.find(var);
      if (it == v.end()) throw SemanticsError("unbound ODE variable " + var);
      x.push_back(it->second);
    }
    return x;
  }

  /// Largest admissible evolution time <= budget for an ODE (domain exit
  /// located by bisection on the reference trajectory).
  double ode_max_delay(const TermPtr& t, double budget) const {
    auto f = field(*t->ode);
    auto x0 = ode_x0(*t->ode);
    auto cond = t->cond;
    auto inside = [&](const std::vector<double>& x, double) {
      auto val = f.to_valuation(x);
      return eval(cond, val);
    };
    auto exit = first_exit_time(f, x0, budget, inside);
    if (!exit) return budget;
    return *exit;
  }

  Edits ode_delay_edits(const TermPtr& t, double dt) const {
    auto f = field(*t->ode);
    auto x = reference_trajectory(f, ode_x0(*t->ode), dt);
    Edits e;
    for (std::size_t i = 0; i < f.names.size(); ++i)
      e.emplace_back(f.names[i], x[i]);
    auto ck = clock_key(*t->ode);
    if (auto it = v.find(ck); it != v.end()) e.emplace_back(ck, it->second + dt);
    return e;
  }

  Edits ode_exit_edits(const TermPtr& t) const {
    Edits e;
    auto ck = clock_key(*t->ode);
    if (v.count(ck)) e.emplace_back(ck, 0.0);
    return e;
  }

  // ---- discrete (tau / comm) moves ----

  std::vector<Move> discrete(const TermPtr& t) const {
    std::vector<Move> out;
    if (!t) return out;
    switch (t->kind) {
      case Term::Kind::Skip:
        out.push_back({Label::tau(), nullptr, {}, {}});
        break;
      case Term::Kind::Stop:
        break;
      case Term::Kind::Assign: {
        Edits e;
        for (auto& [var, ex] : t->assigns) e.emplace_back(var, eval(ex, v));
        out.push_back({Label::tau(), nullptr, std::move(e), {}});
        break;
      }
      case Term::Kind::Wait: {
        if (eval(t->expr, v) <= kTimeTol)
          out.push_back({Label::tau(), nullptr, {}, {}});
        break;
      }
      case Term::Kind::Input:
        out.push_back({Label::comm(t->chan, true, NAN), nullptr, {}, t->var});
        break;
      case Term::Kind::Output:
        out.push_back(
            {Label::comm(t->chan, false, eval(t->expr, v)), nullptr, {}, {}});
        break;
      case Term::Kind::Seq:
        for (auto m : discrete(t->left)) {
          m.dst = m.dst ? t_seq(m.dst, t->right) : t->right;
          out.push_back(std::move(m));
        }
        break;
      case Term::Kind::Guard:
        out.push_back({Label::tau(), eval(t->cond, v) ? t->left : nullptr, {}, {}});
        break;
      case Term::Kind::IntChoice:
        out.push_back({Label::tau(), t->left, {}, {}});
        out.push_back({Label::tau(), t->right, {}, {}});
        break;
      case Term::Kind::Repeat: {
        if (t->bound <= 0 || is_noop_under(t->left, v)) {
          out.push_back({Label::tau(), nullptr, {}, {}});
        } else {
          TermPtr next = t->bound == 1
                             ? t->left
                             : t_seq(t->left, t_repeat(t->left, t->bound - 1));
          out.push_back({Label::tau(), next, {}, {}});
        }
        break;
      }
      case Term::Kind::ExtChoice:
        for (auto& [ev, body] : t->branches) {
          if (ev.is_input)
            out.push_back({Label::comm(ev.chan, true, NAN), body, {}, ev.var});
          else
            out.push_back(
                {Label::comm(ev.chan, false, eval(ev.expr, v)), body, {}, {}});
        }
        break;
      case Term::Kind::Ode:
        if (!eval(t->cond, v))
          out.push_back({Label::tau(), nullptr, ode_exit_edits(t), {}});
        break;
      case Term::Kind::OdeInterrupt: {
        if (!eval(t->cond, v)) {
          out.push_back({Label::tau(), nullptr, ode_exit_edits(t), {}});
          break;
        }
        for (auto& [ev, body] : t->branches) {
          if (ev.is_input)
            out.push_back(
                {Label::comm(ev.chan, true, NAN), body, ode_exit_edits(t), ev.var});
          else
            out.push_back({Label::comm(ev.chan, false, eval(ev.expr, v)), body,
                           ode_exit_edits(t), {}});
        }
        break;
      }
      case Term::Kind::Parallel:
        parallel_discrete(t, out);
        break;
    }
    return out;
  }

  void parallel_discrete(const TermPtr& t, std::vector<Move>& out) const {
    if (!t->left && !t->right) {
      out.push_back({Label::tau(), nullptr, {}, {}});
      return;
    }
    auto lm = discrete(t->left);
    auto rm = discrete(t->right);
    auto taus = [](const std::vector<Move>& ms) {
      std::vector<Move> r;
      for (auto& m : ms)
        if (m.label.kind == Label::Kind::Tau) r.push_back(m);
      return r;
    };
    auto ltau = taus(lm), rtau = taus(rm);
    if (!ltau.empty() || !rtau.empty()) {
      // Internal steps are scheduled deterministically: the component
      // currently updating a readiness flag goes first, otherwise the
      // left one. The remaining interleavings are confluent because the
      // components' variable slices are disjoint.
      auto touches_readiness = [](const std::vector<Move>& ms) {
        for (auto& m : ms)
          for (auto& [var, val] : m.edits)
            if (is_readiness_var(var)) return true;
        return false;
      };
      bool pick_left;
      if (ltau.empty())
        pick_left = false;
      else if (rtau.empty())
        pick_left = true;
      else if (touches_readiness(rtau) && !touches_readiness(ltau))
        pick_left = false;
      else
        pick_left = true;
      auto& chosen = pick_left ? ltau : rtau;
      for (auto& m : chosen) {
        Move mm = m;
        mm.dst = pick_left ? par_of(m.dst, t->right) : par_of(t->left, m.dst);
        out.push_back(std::move(mm));
      }
      return;
    }
    // synchronization: matching input/output on a shared channel
    auto try_sync = [&](const Move& o, const Move& i, bool out_left) {
      if (o.label.kind != Label::Kind::Comm || i.label.kind != Label::Kind::Comm)
        return;
      if (o.label.is_input || !i.label.is_input) return;
      if (o.label.chan != i.label.chan) return;
      Move m;
      m.label = Label::tau();
      m.dst = out_left ? par_of(o.dst, i.dst) : par_of(i.dst, o.dst);
      m.edits = o.edits;
      m.edits.insert(m.edits.end(), i.edits.begin(), i.edits.end());
      m.edits.emplace_back(i.in_var, o.label.value);
      out.push_back(std::move(m));
    };
    for (auto& a : lm)
      for (auto& b : rm) {
        try_sync(a, b, true);
        try_sync(b, a, false);
      }
    // unmatched communications propagate only when the partner cannot be
    // inside the other component (channel absent from its alphabet)
    auto lchans = channels(t->left), rchans = channels(t->right);
    for (auto& m : lm)
      if (m.label.kind == Label::Kind::Comm && !rchans.count(m.label.chan)) {
        Move mm = m;
        mm.dst = par_of(m.dst, t->right);
        out.push_back(std::move(mm));
      }
    for (auto& m : rm)
      if (m.label.kind == Label::Kind::Comm && !lchans.count(m.label.chan)) {
        Move mm = m;
        mm.dst = par_of(t->left, m.dst);
        out.push_back(std::move(mm));
      }
  }

  // ---- delays ----

  double max_delay(const TermPtr& t, double budget) const {
    if (!t) return budget;
    switch (t->kind) {
      case Term::Kind::Stop:
      case Term::Kind::Input:
      case Term::Kind::Output:
      case Term::Kind::ExtChoice:
        return budget;
      case Term::Kind::Wait: {
        double rem = eval(t->expr, v);
        if (rem <= kTimeTol) return 0;
        return std::min(budget, rem);
      }
      case Term::Kind::Seq:
        return max_delay(t->left, budget);
      case Term::Kind::Ode:
      case Term::Kind::OdeInterrupt:
        if (!eval(t->cond, v)) return 0;
        return ode_max_delay(t, budget);
      case Term::Kind::Parallel: {
        std::vector<Move> ms;
        parallel_discrete(t, const_cast<std::vector<Move>&>(ms));
        for (auto& m : ms)
          if (m.label.kind == Label::Kind::Tau) return 0;
        return std::min(max_delay(t->left, budget), max_delay(t->right, budget));
      }
      default:
        return 0;  // urgent internal step pending
    }
  }

  /// Result of delaying by dt (requires dt <= max_delay(t, dt)).
  std::pair<TermPtr, Edits> delay_to(const TermPtr& t, double dt) const {
    if (!t) return {nullptr, {}};
    switch (t->kind) {
      case Term::Kind::Stop:
      case Term::Kind::Input:
      case Term::Kind::Output:
      case Term::Kind::ExtChoice:
        return {t, {}};
      case Term::Kind::Wait: {
        double rem = eval(t->expr, v) - dt;
        if (rem <= kTimeTol) return {nullptr, {}};
        return {t_wait(econst(rem)), {}};
      }
      case Term::Kind::Seq: {
        auto [p, e] = delay_to(t->left, dt);
        return {p ? t_seq(p, t->right) : t->right, std::move(e)};
      }
      case Term::Kind::Ode:
        return {t, ode_delay_edits(t, dt)};
      case Term::Kind::OdeInterrupt:
        return {t, ode_delay_edits(t, dt)};
      case Term::Kind::Parallel: {
        auto [p, ep] = delay_to(t->left, dt);
        auto [q, eq] = delay_to(t->right, dt);
        ep.insert(ep.end(), eq.begin(), eq.end());
        return {par_of(p, q), std::move(ep)};
      }
      default:
        throw SemanticsError("delay not admissible here");
    }
  }
};

Valuation apply_edits(const Valuation& v, const Edits& e) {
  Valuation out = v;
  for (auto& [var, val] : e) out[var] = val;
  return out;
}

}  // namespace

std::vector<Transition> enabled(const State& q, double d, const ExploreCtx& ctx) {
  std::vector<Transition> out;
  if (!q.term) {
    out.push_back({q, Label::delay(d), q});
    return out;
  }
  Engine eng{q.val, ctx};
  auto moves = eng.discrete(q.term);
  bool has_tau = false;
  for (auto& m : moves) {
    if (m.label.kind == Label::Kind::Tau) has_tau = true;
    if (m.label.kind == Label::Kind::Comm && m.label.is_input &&
        std::isnan(m.label.value)) {
      auto it = ctx.menu.find(m.label.chan);
      if (it == ctx.menu.end()) continue;  // closed-system assumption
      for (double c : it->second) {
        auto e = m.edits;
        e.emplace_back(m.in_var, c);
        out.push_back({q, Label::comm(m.label.chan, true, c),
                       State{m.dst, apply_edits(q.val, e)}});
      }
      continue;
    }
    out.push_back({q, m.label, State{m.dst, apply_edits(q.val, m.edits)}});
  }
  if (!has_tau) {
    double dt = eng.max_delay(q.term, d);
    if (d - dt < kTimeTol) dt = d;
    if (dt > kTimeTol) {
      auto [p, e] = eng.delay_to(q.term, dt);
      out.push_back({q, Label::delay(dt), State{p, apply_edits(q.val, e)}});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Transition& a, const Transition& b) {
                          return !(a < b) && !(b < a);
                        }),
            out.end());
  return out;
}

CompressResult tau_compress(const std::vector<Transition>& raw) {
  CompressResult res;
  std::map<State, std::vector<State>> tau_succ;
  for (auto& t : raw)
    if (t.label.kind == Label::Kind::Tau) tau_succ[t.src].push_back(t.dst);

  // sinks(q): tau-sinks reachable by one or more tau edges
  std::map<State, std::vector<State>> memo;
  std::set<State> onstack;
  std::function<std::vector<State>(const State&)> sinks =
      [&](const State& q) -> std::vector<State> {
    if (auto it = memo.find(q); it != memo.end()) return it->second;
    if (onstack.count(q)) {
      res.diagnostics.push_back("tau divergence at state " +
                                (q.term ? pretty_print(q.term) : "<end>"));
      return {};
    }
    auto it = tau_succ.find(q);
    if (it == tau_succ.end()) return {q};
    onstack.insert(q);
    std::set<State> acc;
    for (auto& s : it->second) {
      for (auto& r : sinks(s)) acc.insert(r);
    }
    onstack.erase(q);
    std::vector<State> v(acc.begin(), acc.end());
    memo[q] = v;
    return v;
  };

  std::set<Transition> out;
  for (auto& t : raw) {
    if (t.label.kind == Label::Kind::Tau) continue;
    out.insert(t);
  }
  for (auto& [q, succ] : tau_succ) {
    (void)succ;
    for (auto& s : sinks(q)) out.insert({q, Label::tau(), s});
  }
  res.transitions.assign(out.begin(), out.end());
  return res;
}

std::vector<State> weak_step(const std::vector<Transition>& compressed,
                             const State& q, const Label& l) {
  std::map<State, std::vector<const Transition*>> by_src;
  for (auto& t : compressed) by_src[t.src].push_back(&t);

  auto tau_next = [&](const State& s) {
    std::set<State> out;
    if (auto it = by_src.find(s); it != by_src.end())
      for (auto* t : it->second)
        if (t->label.kind == Label::Kind::Tau) out.insert(t->dst);
    return out;
  };

  std::set<State> pre = {q};
  for (auto& s : tau_next(q)) pre.insert(s);

  std::set<State> mid;
  if (l.kind == Label::Kind::Tau) {
    // a tau may be matched by doing nothing
    mid = pre;
  } else {
    for (auto& s : pre) {
      if (auto it = by_src.find(s); it != by_src.end())
        for (auto* t : it->second)
          if (t->label == l) mid.insert(t->dst);
    }
  }
  std::set<State> post = mid;
  for (auto& s : mid)
    for (auto& r : tau_next(s)) post.insert(r);
  return {post.begin(), post.end()};
}

std::vector<TracePoint> simulate(const TermPtr& p, const Valuation& v0,
                                 double step, double horizon,
                                 const ExploreCtx& ctx) {
  std::vector<TracePoint> trace;
  State q{p, v0};
  double t = 0;
  trace.push_back({0, q, Label::tau()});
  std::size_t guard = 0;
  while (t < horizon + kTimeTol && ++guard < 10'000'000) {
    auto ts = enabled(q, std::min(step, horizon - t + step), ctx);
    if (ts.empty()) break;
    const Transition* pick = nullptr;
    for (auto& tr : ts)
      if (tr.label.kind == Label::Kind::Tau) { pick = &tr; break; }
    if (!pick)
      for (auto& tr : ts)
        if (tr.label.kind == Label::Kind::Delay) { pick = &tr; break; }
    if (!pick) pick = &ts.front();
    if (pick->label.kind == Label::Kind::Delay) {
      if (!q.term) break;  // terminated: only the idle self-loop remains
      t += pick->label.d;
    }
    q = pick->dst;
    trace.push_back({t, q, pick->label});
    if (!q.term) break;
  }
  return trace;
}

}  // namespace hcsp
