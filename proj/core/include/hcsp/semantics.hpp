#pragma once

#include <map>
#include <optional>
#include <vector>

#include "hcsp/ast.hpp"
#include "hcsp/numerics.hpp"

namespace hcsp {

/// Transition label: a delay, a communication, or the silent step.
struct Label {
  enum class Kind { Delay, Comm, Tau };
  Kind kind = Kind::Tau;
  double d = 0;          // Delay
  std::string chan;      // Comm
  bool is_input = true;  // Comm direction
  double value = 0;      // Comm value (NaN = unresolved input)

  static Label delay(double t);
  static Label comm(const std::string& chan, bool is_input, double value);
  static Label tau();

  bool operator==(const Label& o) const;
  bool operator<(const Label& o) const;
};

std::string to_string(const Label& l);

/// A state of the transition system: residual term (nullptr = terminated
/// epsilon) plus a total valuation.
struct State {
  TermPtr term;
  Valuation val;

  bool operator==(const State& o) const {
    return term_equal(term, o.term) && val == o.val;
  }
  bool operator<(const State& o) const;
};

struct Transition {
  State src;
  Label label;
  State dst;
  bool operator<(const Transition& o) const;
};

/// Exploration context: menus give the finite value set used to resolve
/// inputs on channels whose output end is absent (open processes).
struct ExploreCtx {
  std::map<std::string, std::vector<double>> menu;
};

struct SemanticsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All transitions from q permitted by the small-step rules, with delays
/// capped at d. At most one Delay transition per state (the maximal
/// admissible delay up to d; shorter only when a domain boundary or an
/// urgent internal step interrupts the full step).
std::vector<Transition> enabled(const State& q, double d,
                                const ExploreCtx& ctx = {});

/// tau-compression: every maximal tau-chain is replaced by a single edge
/// to its sink; non-tau transitions pass through. A tau-cycle with no exit
/// is reported as a divergence diagnostic.
struct CompressResult {
  std::vector<Transition> transitions;
  std::vector<std::string> diagnostics;  // divergence reports
};
CompressResult tau_compress(const std::vector<Transition>& raw);

/// Weak step: states reachable from q as (tau)^{0,1} l (tau)^{0,1} over a
/// compressed transition set. For l = tau, q itself is included (the step
/// may be matched by doing nothing); for Delay labels the caller compares
/// durations separately, so this returns pairs (duration, state).
std::vector<State> weak_step(const std::vector<Transition>& compressed,
                             const State& q, const Label& l);

/// Run a deterministic simulation trace (first enabled move, preferring
/// tau) for up to `horizon` time units; returns the visited states with
/// timestamps. Used by the simulate command and the robust-safety monitor.
struct TracePoint {
  double time;
  State state;
  Label via;
};
std::vector<TracePoint> simulate(const TermPtr& p, const Valuation& v0,
                                 double step, double horizon,
                                 const ExploreCtx& ctx = {});

}  // namespace hcsp
