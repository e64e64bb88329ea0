#include "hcsp/bisim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace hcsp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BoundedTS build_ts(const TermPtr& P, const Valuation& v0, double d,
                   const TimeMap& Tmap, std::size_t cap, const ExploreCtx& ctx) {
  BoundedTS ts;
  Valuation init = v0;
  for (auto& ode : collect_odes(P)) {
    auto key = ode_key(*ode);
    if (Tmap.count(key)) init["$clk:" + key] = 0.0;
  }
  for (auto& [k, val] : init)
    if (!is_aux_var(k)) ts.obs_vars.push_back(k);

  auto observe = [&](const Valuation& v) {
    std::vector<double> o;
    o.reserve(ts.obs_vars.size());
    for (auto& k : ts.obs_vars) o.push_back(v.at(k));
    return o;
  };
  auto intern = [&](const State& q) {
    auto it = ts.index.find(q);
    if (it != ts.index.end()) return it->second;
    int id = static_cast<int>(ts.states.size());
    ts.states.push_back(q);
    ts.index.emplace(q, id);
    ts.obs.push_back(observe(q.val));
    return id;
  };
  auto suppressed = [&](const State& dst) {
    for (auto& [key, T] : Tmap) {
      auto it = dst.val.find("$clk:" + key);
      if (it != dst.val.end() && it->second >= T - 1e-12) return true;
    }
    return false;
  };

  State q0{P, init};
  ts.initial = intern(q0);
  std::deque<int> frontier{ts.initial};
  std::set<int> expanded;
  while (!frontier.empty()) {
    int id = frontier.front();
    frontier.pop_front();
    if (!expanded.insert(id).second) continue;
    if (ts.states.size() > cap) {
      ts.capped = true;
      ts.diagnostics.push_back("state cap reached");
      break;
    }
    State q = ts.states[id];
    for (auto& tr : enabled(q, d, ctx)) {
      if (tr.label.kind == Label::Kind::Delay && suppressed(tr.dst)) continue;
      int dst = intern(tr.dst);
      ts.raw.push_back(tr);
      if (!expanded.count(dst)) frontier.push_back(dst);
    }
  }

  auto comp = tau_compress(ts.raw);
  ts.compressed = std::move(comp.transitions);
  ts.diagnostics.insert(ts.diagnostics.end(), comp.diagnostics.begin(),
                        comp.diagnostics.end());

  // reachable-over-compressed restriction
  std::map<int, std::vector<int>> succ;
  for (auto& t : ts.compressed)
    succ[ts.index.at(t.src)].push_back(ts.index.at(t.dst));
  std::set<int> seen{ts.initial};
  std::deque<int> work{ts.initial};
  while (!work.empty()) {
    int id = work.front();
    work.pop_front();
    for (int s : succ[id])
      if (seen.insert(s).second) work.push_back(s);
  }
  ts.reachable.assign(seen.begin(), seen.end());
  return ts;
}

double label_distance(const Label& l1, const Label& l2) {
  if (l1.kind == Label::Kind::Tau && l2.kind == Label::Kind::Tau) return 0;
  if (l1.kind == Label::Kind::Comm && l2.kind == Label::Kind::Comm) return 0;
  if (l1.kind == Label::Kind::Delay && l2.kind == Label::Kind::Delay)
    return std::abs(l1.d - l2.d);
  return kInf;
}

namespace {

double obs_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Per-system indexes used by the refinement loop.
struct Indexed {
  const BoundedTS* ts;
  std::vector<std::vector<std::pair<Label, int>>> moves;  // compressed, by src
  std::vector<std::vector<int>> tau_succ;
  std::vector<std::vector<int>> comm_match;     // weak-comm destinations
  std::vector<std::vector<std::pair<double, int>>> delay_opts;  // (dw, dst) incl. pre-tau
  std::vector<std::vector<int>> move_pred;  // src states of moves into s
  std::vector<std::vector<int>> weak_pred;  // states from which s is weakly reachable

  explicit Indexed(const BoundedTS& t) : ts(&t) {
    std::size_t n = t.states.size();
    moves.resize(n);
    tau_succ.resize(n);
    move_pred.resize(n);
    for (auto& tr : t.compressed) {
      int s = t.index.at(tr.src), d = t.index.at(tr.dst);
      moves[s].emplace_back(tr.label, d);
      if (tr.label.kind == Label::Kind::Tau) tau_succ[s].push_back(d);
      move_pred[d].push_back(s);
    }
    comm_match.resize(n);
    delay_opts.resize(n);
    weak_pred.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::set<int> pre{static_cast<int>(s)};
      for (int r : tau_succ[s]) pre.insert(r);
      std::set<int> cm;
      std::set<std::pair<double, int>> dl;
      for (int p : pre) {
        // identity delay Delay(0) is available at every state
        dl.emplace(0.0, p);
        for (int r : tau_succ[p]) dl.emplace(0.0, r);
        for (auto& [l, d] : moves[p]) {
          if (l.kind == Label::Kind::Comm) {
            cm.insert(d);
            for (int r : tau_succ[d]) cm.insert(r);
          } else if (l.kind == Label::Kind::Delay) {
            dl.emplace(l.d, d);
            for (int r : tau_succ[d]) dl.emplace(l.d, r);
          }
        }
      }
      comm_match[s].assign(cm.begin(), cm.end());
      delay_opts[s].assign(dl.begin(), dl.end());
      std::set<int> weak = pre;
      for (int x : cm) weak.insert(x);
      for (auto& [dw, x] : dl) weak.insert(x);
      for (int x : weak) weak_pred[x].push_back(static_cast<int>(s));
    }
  }

  /// Weak-match candidates on this side for an opposing move with label l.
  std::vector<int> match(int s, const Label& l, double h) const {
    std::vector<int> out;
    switch (l.kind) {
      case Label::Kind::Tau: {
        out.push_back(s);
        for (int r : tau_succ[s]) out.push_back(r);
        break;
      }
      case Label::Kind::Comm:
        out = comm_match[s];
        break;
      case Label::Kind::Delay:
        for (auto& [dw, d] : delay_opts[s])
          if (std::abs(l.d - dw) <= h + 1e-12) out.push_back(d);
        break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

bool pair_ok(const Relation& B, const Indexed& a, const Indexed& b, int q1,
             int q2, double h) {
  for (auto& [l, d1] : a.moves[q1]) {
    bool found = false;
    for (int d2 : b.match(q2, l, h))
      if (B.count({d1, d2})) { found = true; break; }
    if (!found) return false;
  }
  for (auto& [l, d2] : b.moves[q2]) {
    bool found = false;
    for (int d1 : a.match(q1, l, h))
      if (B.count({d1, d2})) { found = true; break; }
    if (!found) return false;
  }
  return true;
}

}  // namespace

Relation initial_relation(const BoundedTS& t1, const BoundedTS& t2, double eps) {
  if (t1.obs_vars != t2.obs_vars)
    throw std::runtime_error("observation variable mismatch between systems");
  Relation B;
  for (int i : t1.reachable)
    for (int j : t2.reachable)
      if (obs_distance(t1.obs[i], t2.obs[j]) <= eps + 1e-12) B.emplace(i, j);
  return B;
}

Relation refine(const Relation& B, const BoundedTS& t1, const BoundedTS& t2,
                double h) {
  Indexed a(t1), b(t2);
  Relation out;
  for (auto& [q1, q2] : B)
    if (pair_ok(B, a, b, q1, q2, h)) out.emplace(q1, q2);
  return out;
}

Relation max_bisim(const BoundedTS& t1, const BoundedTS& t2, double h,
                   double eps) {
  Indexed a(t1), b(t2);
  Relation B = initial_relation(t1, t2, eps);
  std::deque<std::pair<int, int>> work(B.begin(), B.end());
  std::set<std::pair<int, int>> queued(B.begin(), B.end());
  while (!work.empty()) {
    auto [q1, q2] = work.front();
    work.pop_front();
    queued.erase({q1, q2});
    if (!B.count({q1, q2})) continue;
    if (pair_ok(B, a, b, q1, q2, h)) continue;
    B.erase({q1, q2});
    // requeue pairs that might have used (q1, q2) as a witness
    auto push = [&](int p1, int p2) {
      if (B.count({p1, p2}) && queued.insert({p1, p2}).second)
        work.emplace_back(p1, p2);
    };
    for (int p1 : a.move_pred[q1])
      for (int p2 : b.weak_pred[q2]) push(p1, p2);
    for (int p1 : a.weak_pred[q1])
      for (int p2 : b.move_pred[q2]) push(p1, p2);
  }
  return B;
}

bool check_bisimulation(const Relation& B, const BoundedTS& t1,
                        const BoundedTS& t2, double h, double eps) {
  Indexed a(t1), b(t2);
  for (auto& [q1, q2] : B) {
    if (obs_distance(t1.obs[q1], t2.obs[q2]) > eps + 1e-12) return false;
    if (!pair_ok(B, a, b, q1, q2, h)) return false;
  }
  return true;
}

BisimResult approx_bisimilar(const TermPtr& p1, const TermPtr& p2,
                             const Valuation& v0, double d, double h,
                             double eps, const TimeMap& Tmap, std::size_t cap,
                             const ExploreCtx& ctx) {
  BisimResult res;
  Valuation init = v0;
  auto seed_flags = [&](const TermPtr& p) {
    for (auto& v : vars(p))
      if (is_readiness_var(v) && !init.count(v)) init[v] = 0.0;
  };
  seed_flags(p1);
  seed_flags(p2);
  TimeMap padded = Tmap;
  // Pad each equilibrium time by one exploration step so the last kept
  // continuous state has already entered the eps-ball around equilibrium.
  for (auto& [k, T] : padded) T += d;
  res.t1 = build_ts(p1, init, d, padded, cap, ctx);
  res.t2 = build_ts(p2, init, d, padded, cap, ctx);
  if (res.t1.capped || res.t2.capped) {
    res.error = "state cap reached during exploration";
    return res;
  }
  res.relation = max_bisim(res.t1, res.t2, h, eps);
  res.bisimilar = res.relation.count({res.t1.initial, res.t2.initial}) > 0;
  return res;
}

}  // namespace hcsp
