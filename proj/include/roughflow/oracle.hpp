#pragma once

// Reference solutions: backward characteristics for the linear continuity
// equation, exact Riemann solutions for convex 1D fluxes, and the discrete
// cell-entropy inequality against constants.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "roughflow/fft.hpp"
#include "roughflow/flux.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/scheme.hpp"

namespace roughflow {

using Point = std::array<double, 2>;

/// Time-dependent velocity a(t, x) with its divergence.
struct VelocityFamily {
  std::function<Point(double, Point)> a;
  std::function<double(double, Point)> div;
};

/// Periodic bilinear interpolation of node values (nodes at cell centres).
inline double interpolate(const GridSpec &g, std::span<const double> v, Point x) {
  const int n = g.n();
  auto locate = [&](double c, int &i0, double &t) {
    double s = c / g.dx() - 0.5;
    double fl = std::floor(s);
    t = s - fl;
    i0 = g.wrap(int(std::fmod(fl, double(n))));
  };
  int i0, j0 = 0;
  double tx, ty = 0.0;
  locate(x[0], i0, tx);
  int i1 = g.wrap(i0 + 1);
  if (g.d() == 1)
    return (1.0 - tx) * v[i0] + tx * v[i1];
  locate(x[1], j0, ty);
  int j1 = g.wrap(j0 + 1);
  auto at = [&](int i, int j) { return v[g.linear({i, j})]; };
  return (1.0 - tx) * ((1.0 - ty) * at(i0, j0) + ty * at(i0, j1)) + tx * ((1.0 - ty) * at(i1, j0) + ty * at(i1, j1));
}

/// Time-independent family built from a lattice field: bilinear interpolation
/// of a and of its spectral divergence.
inline VelocityFamily lattice_velocity(const VectorField &a) {
  auto field = std::make_shared<VectorField>(a);
  auto div = std::make_shared<ScalarField>(spectral_divergence(a));
  VelocityFamily fam;
  fam.a = [field](double, Point x) {
    Point out{0.0, 0.0};
    for (int k = 0; k < field->d(); ++k)
      out[k] = interpolate(field->grid(), field->component(k).values(), x);
    return out;
  };
  fam.div = [div](double, Point x) { return interpolate(div->grid(), div->values(), x); };
  return fam;
}

/// Solution at time T of d_t u = div(a u) (the scheme convention with f = Id).
/// Each node is traced back along dX/dtau = a(T - tau, X) with classical RK4,
/// while log J accumulates int div a; u(T, x) = u0(X(T)) J, with u0
/// interpolated bilinearly.
inline ScalarField characteristics_advect(const VelocityFamily &vel, const ScalarField &u0, double T, int steps) {
  if (steps < 1 || !(T >= 0.0))
    throw Error("characteristics need T >= 0 and at least one step");
  const GridSpec &g = u0.grid();
  const int d = g.d();
  const double dtau = T / steps;
  ScalarField out(g);
  for (std::size_t l = 0; l < g.size(); ++l) {
    Index i = g.index(l);
    Point x{g.coord(i, 0), d == 2 ? g.coord(i, 1) : 0.0};
    double logJ = 0.0;
    auto rhs = [&](double tau, Point p) {
      Point v = vel.a(T - tau, p);
      if (d == 1)
        v[1] = 0.0;
      return std::array<double, 3>{v[0], v[1], vel.div(T - tau, p)};
    };
    for (int s = 0; s < steps; ++s) {
      double tau = s * dtau;
      auto k1 = rhs(tau, x);
      auto k2 = rhs(tau + 0.5 * dtau, {x[0] + 0.5 * dtau * k1[0], x[1] + 0.5 * dtau * k1[1]});
      auto k3 = rhs(tau + 0.5 * dtau, {x[0] + 0.5 * dtau * k2[0], x[1] + 0.5 * dtau * k2[1]});
      auto k4 = rhs(tau + dtau, {x[0] + dtau * k3[0], x[1] + dtau * k3[1]});
      for (int c = 0; c < 2; ++c)
        x[c] += dtau / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
      logJ += dtau / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    }
    double J = std::exp(logJ);
    if (!std::isfinite(J) || !std::isfinite(x[0]) || !std::isfinite(x[1]))
      throw Error("Jacobian factor non-finite; reduce the step size");
    out[l] = interpolate(g, u0.values(), x) * J;
  }
  return out;
}

struct RiemannProblem {
  FluxLaw flux;
  double uL = 0.0;
  double uR = 0.0;
  double T = 1.0;
};

namespace detail {

inline void require_convex(const FluxLaw &f, double lo, double hi) {
  if (hi <= lo)
    return;
  const int samples = 256;
  double prev = f.fprime(lo);
  for (int q = 1; q <= samples; ++q) {
    double fp = f.fprime(lo + (hi - lo) * q / samples);
    if (fp < prev - 1e-12 * std::max(1.0, std::abs(prev)))
      throw Error("oracle requires convex flux");
    prev = fp;
  }
}

/// (f')^{-1}(xi) on [lo, hi] by bisection (f' non-decreasing).
inline double inverse_speed(const FluxLaw &f, double xi, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (f.fprime(mid) < xi ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

/// Shock speed from Rankine-Hugoniot.
inline double shock_speed(const FluxLaw &f, double uL, double uR) {
  return uL == uR ? f.fprime(uL) : (f.f(uL) - f.f(uR)) / (uL - uR);
}

/// Entropy solution of u_t + f(u)_x = 0 with the jump at x = 0.
inline double riemann_exact(const RiemannProblem &prob, double x, double t) {
  const FluxLaw &f = prob.flux;
  const double lo = std::min(prob.uL, prob.uR), hi = std::max(prob.uL, prob.uR);
  detail::require_convex(f, lo, hi);
  if (prob.uL == prob.uR)
    return prob.uL;
  if (t <= 0.0)
    return x < 0.0 ? prob.uL : prob.uR;
  const double xi = x / t;
  if (prob.uL > prob.uR)
    return xi < shock_speed(f, prob.uL, prob.uR) ? prob.uL : prob.uR;
  if (xi <= f.fprime(prob.uL))
    return prob.uL;
  if (xi >= f.fprime(prob.uR))
    return prob.uR;
  return detail::inverse_speed(f, xi, prob.uL, prob.uR);
}

/// Leftmost and rightmost wave speeds of a Riemann problem.
inline std::pair<double, double> wave_fan(const RiemannProblem &prob) {
  if (prob.uL == prob.uR)
    return {prob.flux.fprime(prob.uL), prob.flux.fprime(prob.uL)};
  if (prob.uL > prob.uR) {
    double s = shock_speed(prob.flux, prob.uL, prob.uR);
    return {s, s};
  }
  return {prob.flux.fprime(prob.uL), prob.flux.fprime(prob.uR)};
}

/// Exact solution for u0 = u_in on [x0, x1), u_out elsewhere, on the line,
/// while the two waves stay apart.
inline double riemann_pulse(const FluxLaw &f, double u_in, double u_out, double x0, double x1, double x, double t) {
  RiemannProblem left{f, u_out, u_in, t}, right{f, u_in, u_out, t};
  if (x0 + wave_fan(left).second * t >= x1 + wave_fan(right).first * t)
    throw Error("pulse waves interact before the requested time");
  double mid = 0.5 * (x0 + wave_fan(left).second * t + x1 + wave_fan(right).first * t);
  return x < mid ? riemann_exact(left, x - x0, t) : riemann_exact(right, x - x1, t);
}

struct EntropyStepRow {
  int step = 0;
  double before = 0.0; ///< dx^d sum |u^n - kappa|
  double after = 0.0;  ///< dx^d sum |u^{n+1} - kappa|
  double d_term = 0.0; ///< dt dx^d sum |D_i| |f~(kappa)|, the exact constant-state defect
  double bound = 0.0;  ///< before + dt C (before + |kappa|) + dt max|D| |f~(0)|
  double slack() const { return bound - after; }
};

struct EntropyPairReport {
  double kappa = 0.0;
  double constant = 0.0; ///< C = max|D| Lip(f~) on the trace range
  std::vector<EntropyStepRow> rows;
  double min_slack() const {
    double m = kInf;
    for (const auto &r : rows)
      m = std::min(m, r.slack());
    return m;
  }
};

/// Checks the cell-entropy inequality for |u - kappa| along a run trace
/// (consecutive states of one scheme). For a conservative monotone scheme,
/// ||S(u) - kappa||_1 <= ||u - kappa||_1 + ||S(kappa) - kappa||_1 and
/// S(kappa) - kappa = dt D f~(kappa). Throws on violation.
inline EntropyPairReport entropy_pair_check(const SchemeDef &s, const VectorField &a, const std::vector<ScalarField> &trace,
                                            double kappa, double rel_tol = 1e-12) {
  if (trace.size() < 2)
    throw Error("entropy check needs at least two states");
  const GridSpec &g = trace.front().grid();
  auto div = discrete_divergence(s, a, g);
  const FluxLaw &ft = s.ftilde_law();
  double lo = kappa, hi = kappa;
  for (const auto &u : trace) {
    lo = std::min({lo, u.min(), 0.0});
    hi = std::max({hi, u.max(), 0.0});
  }
  auto [fp_lo, fp_hi] = ft.fprime_range(lo, hi);
  const double lip = std::max(std::abs(fp_lo), std::abs(fp_hi));
  const double dmax = div.dmax();
  EntropyPairReport rep;
  rep.kappa = kappa;
  rep.constant = dmax * lip;
  const double cell = g.cell_volume();
  double d_abs = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l)
    d_abs += std::abs(div.D[l]);
  auto dist = [&](const ScalarField &u) {
    double acc = 0.0;
    for (std::size_t l = 0; l < u.size(); ++l)
      acc += std::abs(u[l] - kappa);
    return cell * acc;
  };
  for (std::size_t n = 0; n + 1 < trace.size(); ++n) {
    EntropyStepRow row;
    row.step = int(n);
    row.before = dist(trace[n]);
    row.after = dist(trace[n + 1]);
    row.d_term = g.dt() * cell * d_abs * std::abs(ft.f(kappa));
    row.bound = row.before + g.dt() * rep.constant * (row.before + std::abs(kappa)) + g.dt() * dmax * std::abs(ft.f(0.0));
    rep.rows.push_back(row);
    if (row.after > row.bound + rel_tol * std::max(1.0, row.bound))
      throw Error("entropy inequality violated at step " + std::to_string(n) + " for kappa = " + std::to_string(kappa));
  }
  return rep;
}

} // namespace roughflow
