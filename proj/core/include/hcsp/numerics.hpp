#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hcsp/ast.hpp"

namespace hcsp {

/// Vector field view of an ODE: maps the ODE's variables (in eq order)
/// through the right-hand sides. Extra variables in the valuation are
/// treated as frozen parameters.
struct VectorField {
  std::vector<std::string> names;
  std::vector<ExprPtr> rhs;

  explicit VectorField(const OdeSpec& spec);
  std::vector<double> operator()(const std::vector<double>& x) const;
  Valuation to_valuation(const std::vector<double>& x) const;

  Valuation params;  // frozen non-ODE variables referenced by the field
};

/// One explicit Euler step x + h f(x).
std::vector<double> euler_step(const VectorField& f, const std::vector<double>& x,
                               double h);

/// High-accuracy reference trajectory value at time t (classic RK4 with a
/// fixed substep no larger than min(t/64, 1e-3)).
std::vector<double> reference_trajectory(const VectorField& f,
                                         const std::vector<double>& x0, double t);

/// Integrate the reference trajectory while the domain predicate holds,
/// reporting the first time it fails (nullopt if it holds through horizon).
std::optional<double> first_exit_time(
    const VectorField& f, const std::vector<double>& x0, double horizon,
    const std::function<bool(const std::vector<double>&, double)>& inside);

/// First time after which the reference trajectory stays within eps
/// (sup-norm) of the equilibrium for a dwell window of ten probe steps.
/// Returns nullopt if not reached before the horizon.
std::optional<double> estimate_equilibrium_time(const VectorField& f,
                                                const std::vector<double>& x0,
                                                const std::vector<double>& equilibrium,
                                                double eps, double horizon,
                                                double probe = 0.05);

/// A priori global error bound for explicit Euler on [t0, T] with step h,
/// initial error eps1, Lipschitz constant L, and second-derivative bound M2:
///   e^{(T-t0)L} eps1 + (h/2) M2 (e^{(T-t0)L} - 1)/L
/// (continuous in L at 0: eps1 + (h/2) M2 (T-t0)).
double error_bound(double h, double eps1, double L, double M2, double t0, double T);

struct ErrorBudget {
  double h = 0;     // chosen step
  double eps1 = 0;  // initial-error allowance
  double L = 0, M2 = 0, M = 0;  // estimated constants (with safety factor)
  double bound = 0;  // resulting total bound, <= eps on success
};

/// Estimated constants along the reference trajectory from x0 over [0, T]
/// (slope bound M = max|f|, Lipschitz L via finite-difference Jacobian,
/// M2 = max|Jf f|), each inflated by a 1.25 safety factor.
double slope_bound(const VectorField& f, const std::vector<double>& x0, double T);
double lipschitz_estimate(const VectorField& f, const std::vector<double>& x0,
                          double T);
double second_deriv_bound(const VectorField& f, const std::vector<double>& x0,
                          double T);

/// Largest step h from the geometric menu base*(1, 1/2, 1/4, ...) such that
///   M h + e^{T L} eps1 + (h/2) M2 (e^{T L} - 1)/L  <=  eps
/// with eps1 = eps / (4 e^{T L}). Returns nullopt if no step qualifies.
std::optional<ErrorBudget> choose_step(const VectorField& f,
                                       const std::vector<double>& x0, double T,
                                       double eps, double base = 1.0);

}  // namespace hcsp
