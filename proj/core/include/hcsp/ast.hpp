#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcsp/expr.hpp"

namespace hcsp {

/// Numerical stability data attached to an ODE: equilibrium point (aligned
/// with the ODE's variable list), and optional equilibrium time / Lipschitz
/// constant / second-derivative bound.
struct StabilityCert {
  std::vector<double> equilibrium;
  std::optional<double> T;
  std::optional<double> L;
  std::optional<double> M2;
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// A communication event ch?x or ch!e.
struct CommEvent {
  std::string chan;
  bool is_input = true;
  std::string var;  // input target
  ExprPtr expr;     // output value
};

struct OdeSpec {
  std::string label;  // optional; used to key equilibrium times and clocks
  std::vector<std::pair<std::string, ExprPtr>> eqs;
  std::optional<StabilityCert> cert;
};
using OdePtr = std::shared_ptr<const OdeSpec>;

struct Term {
  enum class Kind {
    Skip,
    Stop,
    Assign,       // simultaneous multi-assignment
    Wait,
    Input,
    Output,
    Seq,
    Guard,
    IntChoice,
    Repeat,
    ExtChoice,
    Ode,
    OdeInterrupt,
    Parallel,
  };
  Kind kind;
  std::vector<std::pair<std::string, ExprPtr>> assigns;
  ExprPtr expr;            // Wait duration / Output value
  std::string chan, var;   // Input/Output
  TermPtr left, right;     // Seq/IntChoice/Parallel; Guard body in left
  BoolPtr cond;            // Guard condition, Ode domain
  long bound = 0;          // Repeat
  std::vector<std::pair<CommEvent, TermPtr>> branches;  // ExtChoice, interrupt handlers
  OdePtr ode;
  std::size_t hash = 0;
};

TermPtr t_skip();
TermPtr t_stop();
TermPtr t_assign(const std::string& var, ExprPtr e);
TermPtr t_assign_multi(std::vector<std::pair<std::string, ExprPtr>> as);
TermPtr t_wait(ExprPtr e);
TermPtr t_input(const std::string& chan, const std::string& var);
TermPtr t_output(const std::string& chan, ExprPtr e);
TermPtr t_seq(TermPtr p, TermPtr q);
TermPtr t_guard(BoolPtr b, TermPtr p);
TermPtr t_intchoice(TermPtr p, TermPtr q);
TermPtr t_repeat(TermPtr p, long bound);
TermPtr t_extchoice(std::vector<std::pair<CommEvent, TermPtr>> branches);
TermPtr t_ode(OdePtr spec, BoolPtr domain);
TermPtr t_interrupt(OdePtr spec, BoolPtr domain,
                    std::vector<std::pair<CommEvent, TermPtr>> handlers);
TermPtr t_parallel(TermPtr p, TermPtr q);

bool term_equal(const TermPtr& a, const TermPtr& b);  // nullptr = terminated
std::size_t term_hash(const TermPtr& t);

/// True for auxiliary variables excluded from observations: readiness
/// flags (names ending in ? or !) and internal $-prefixed variables.
bool is_aux_var(const std::string& name);
bool is_readiness_var(const std::string& name);

std::set<std::string> vars(const TermPtr& t);
std::set<std::string> channels(const TermPtr& t);

/// Stable key identifying an ODE for equilibrium-time maps and clocks.
std::string ode_key(const OdeSpec& spec);

/// All distinct ODE specs occurring in a term, in syntactic order.
std::vector<OdePtr> collect_odes(const TermPtr& t);

struct Diagnostic {
  std::string path;  // AST path, e.g. "par.left.seq.right"
  std::string message;
  bool warning = false;
};

/// Static well-formedness checks; empty result (ignoring warnings) means
/// all term invariants hold.
std::vector<Diagnostic> validate(const TermPtr& t);

std::string pretty_print(const TermPtr& t);

}  // namespace hcsp
