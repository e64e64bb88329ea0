#include "hcsp/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace hcsp {

VectorField::VectorField(const OdeSpec& spec) {
  for (auto& [v, e] : spec.eqs) {
    names.push_back(v);
    rhs.push_back(e);
  }
}

Valuation VectorField::to_valuation(const std::vector<double>& x) const {
  Valuation v = params;
  for (std::size_t i = 0; i < names.size(); ++i) v[names[i]] = x[i];
  return v;
}

std::vector<double> VectorField::operator()(const std::vector<double>& x) const {
  auto v = to_valuation(x);
  std::vector<double> out(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = eval(rhs[i], v);
  return out;
}

std::vector<double> euler_step(const VectorField& f, const std::vector<double>& x,
                               double h) {
  auto d = f(x);
  auto y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += h * d[i];
  return y;
}

namespace {

std::vector<double> rk4_step(const VectorField& f, const std::vector<double>& x,
                             double h) {
  auto k1 = f(x);
  auto tmp = x;
  auto step_into = [&](const std::vector<double>& k, double s) {
    for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + s * k[i];
  };
  step_into(k1, h / 2);
  auto k2 = f(tmp);
  step_into(k2, h / 2);
  auto k3 = f(tmp);
  step_into(k3, h);
  auto k4 = f(tmp);
  auto y = x;
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return y;
}

}  // namespace

std::vector<double> reference_trajectory(const VectorField& f,
                                         const std::vector<double>& x0, double t) {
  if (t <= 0) return x0;
  double sub = std::min(t / 64.0, 1e-3);
  auto n = static_cast<long>(std::ceil(t / sub - 1e-12));
  double h = t / static_cast<double>(n);
  auto x = x0;
  for (long i = 0; i < n; ++i) x = rk4_step(f, x, h);
  return x;
}

std::optional<double> first_exit_time(
    const VectorField& f, const std::vector<double>& x0, double horizon,
    const std::function<bool(const std::vector<double>&, double)>& inside) {
  double sub = 1e-3;
  auto x = x0;
  double t = 0;
  if (!inside(x, 0.0)) return 0.0;
  while (t < horizon) {
    double h = std::min(sub, horizon - t);
    auto y = rk4_step(f, x, h);
    if (!inside(y, t + h)) {
      // bisect the crossing to 1e-9
      double lo = 0, hi = h;
      for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        double mid = (lo + hi) / 2;
        if (inside(rk4_step(f, x, mid), t + mid))
          lo = mid;
        else
          hi = mid;
      }
      return t + hi;
    }
    x = y;
    t += h;
  }
  return std::nullopt;
}

std::optional<double> estimate_equilibrium_time(const VectorField& f,
                                                const std::vector<double>& x0,
                                                const std::vector<double>& equilibrium,
                                                double eps, double horizon,
                                                double probe) {
  auto dist = [&](const std::vector<double>& x) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      d = std::max(d, std::abs(x[i] - equilibrium[i]));
    return d;
  };
  auto x = x0;
  double t = 0;
  std::optional<double> candidate;
  int dwell = 0;
  while (t <= horizon + 1e-12) {
    if (dist(x) < eps) {
      if (!candidate) {
        candidate = t;
        dwell = 0;
      }
      if (++dwell >= 10) return candidate;
    } else {
      candidate.reset();
    }
    // advance one probe step with RK4 substeps
    double remaining = probe;
    double sub = std::min(probe, 1e-3);
    while (remaining > 1e-15) {
      double h = std::min(sub, remaining);
      x = rk4_step(f, x, h);
      remaining -= h;
    }
    t += probe;
  }
  return std::nullopt;
}

double error_bound(double h, double eps1, double L, double M2, double t0, double T) {
  double span = T - t0;
  if (span <= 0) return eps1;
  if (L <= 1e-12) return eps1 + h / 2 * M2 * span;
  double growth = std::exp(span * L);
  return growth * eps1 + h / 2 * M2 * (growth - 1) / L;
}

namespace {

constexpr double kSafety = 1.25;
constexpr int kSamples = 200;

template <typename Fn>
double max_along_trajectory(const VectorField& f, const std::vector<double>& x0,
                            double T, Fn&& measure) {
  double best = 0;
  auto x = x0;
  double t = 0;
  double dt = T / kSamples;
  best = std::max(best, measure(x));
  for (int i = 0; i < kSamples; ++i) {
    double remaining = dt;
    double sub = std::min(dt, 1e-3);
    while (remaining > 1e-15) {
      double h = std::min(sub, remaining);
      x = rk4_step(f, x, h);
      remaining -= h;
    }
    t += dt;
    best = std::max(best, measure(x));
  }
  return best;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Finite-difference Jacobian at x (sup operator norm).
double jac_norm(const VectorField& f, const std::vector<double>& x) {
  const double d = 1e-6;
  std::size_t n = x.size();
  double norm = 0;
  auto f0 = f(x);
  // sup-norm induced operator norm = max row sum of |J|
  std::vector<std::vector<double>> J(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    auto xp = x;
    xp[j] += d;
    auto fp = f(xp);
    for (std::size_t i = 0; i < n; ++i) J[i][j] = (fp[i] - f0[i]) / d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(J[i][j]);
    norm = std::max(norm, row);
  }
  return norm;
}

/// |Jf(x) f(x)| in sup norm via a directional finite difference.
double curvature(const VectorField& f, const std::vector<double>& x) {
  const double d = 1e-6;
  auto fx = f(x);
  double scale = inf_norm(fx);
  if (scale < 1e-300) return 0;
  auto xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) xp[i] += d * fx[i] / scale;
  auto fp = f(xp);
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs((fp[i] - fx[i]) / d * scale));
  return m;
}

}  // namespace

double slope_bound(const VectorField& f, const std::vector<double>& x0, double T) {
  return kSafety * max_along_trajectory(
                       f, x0, T, [&](const std::vector<double>& x) { return inf_norm(f(x)); });
}

double lipschitz_estimate(const VectorField& f, const std::vector<double>& x0,
                          double T) {
  return kSafety * max_along_trajectory(
                       f, x0, T, [&](const std::vector<double>& x) { return jac_norm(f, x); });
}

double second_deriv_bound(const VectorField& f, const std::vector<double>& x0,
                          double T) {
  return kSafety * max_along_trajectory(
                       f, x0, T, [&](const std::vector<double>& x) { return curvature(f, x); });
}

std::optional<ErrorBudget> choose_step(const VectorField& f,
                                       const std::vector<double>& x0, double T,
                                       double eps, double base) {
  ErrorBudget b;
  b.M = slope_bound(f, x0, T);
  b.L = lipschitz_estimate(f, x0, T);
  b.M2 = second_deriv_bound(f, x0, T);
  double growth = std::exp(T * b.L);
  b.eps1 = eps / (4 * growth);
  for (double h = base; h >= 1e-6; h /= 2) {
    double total = b.M * h + error_bound(h, b.eps1, b.L, b.M2, 0, T);
    if (total <= eps) {
      b.h = h;
      b.bound = total;
      return b;
    }
  }
  return std::nullopt;
}

}  // namespace hcsp
