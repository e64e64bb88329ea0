#pragma once

#include <map>
#include <string>
#include <vector>

#include "hcsp/bisim.hpp"

namespace hcsp {

struct DiscretizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Outward eps-neighborhood N(B, eps): every comparison boundary shifted
/// so the predicate also holds within eps of its old boundary. Negations
/// are pushed to the atoms first. Equality atoms are rejected.
BoolPtr neighborhood(const BoolPtr& B, double eps);

/// Inward shift N(B, -eps): holds only at points deeper than eps inside B.
BoolPtr shrink(const BoolPtr& B, double eps);

/// Source-to-source discretization D_h^eps(P): ODE-free process whose
/// continuous evolutions are replaced by guarded Euler loops with readiness
/// bookkeeping. Every ODE needs an equilibrium point (certificate) and an
/// equilibrium time in Tmap (falling back to the certificate's T).
TermPtr discretize(const TermPtr& P, double h, double eps, const TimeMap& Tmap);

/// Default equilibrium-time map: for every ODE of P with an equilibrium
/// certificate, estimate the time (from the v0 values of its variables) to
/// enter and stay inside the eps-ball, searching up to `horizon`. Falls
/// back to the certificate's declared T when estimation fails.
TimeMap equilibrium_times(const TermPtr& P, const Valuation& v0, double eps,
                          double horizon = 500.0);

struct RobustWitness {
  std::string location;  // printed guard / ODE
  double time = 0;
  Valuation state;
  double margin = 0;
};

struct RobustSafetyReport {
  enum class Verdict { Robust, Violated, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  std::vector<RobustWitness> witnesses;
  double explored_time = 0;
  std::size_t steps = 0;
};

/// Budget for the robust-safety monitor.
struct RobustBudget {
  double horizon = 60.0;     // simulated time
  std::size_t max_steps = 200000;
};

/// Simulation-based check of (delta, eps)-robust safety: along every
/// explored branch, each ODE domain exit must admit a time within
/// (t, t+delta) where the eps-ball around the continued trajectory lies in
/// the shrunk complement of the domain, and each guard over
/// continuous-tainted variables must evaluate with margin eps.
RobustSafetyReport check_robust_safety(const TermPtr& P, const Valuation& v0,
                                       double delta, double eps,
                                       const RobustBudget& budget = {});

}  // namespace hcsp
