#pragma once

// Explicit conservative schemes
//   u_i^{n+1} = sum_m b_{i,m}(a_m, u_m),
//   b_{i,m}(a, u) = u delta_{i=m} + lambda sum_k (F^k_{i+[1]_k-m}(a,u) - F^k_{i-m}(a,u)),
// with per-node flux families F^k_j, plus the axiom checks and the discrete
// entropy ledger.
//
// With this orientation the update discretises d_t u = div(a f(u)), so
// information travels along -a. The built-in upwind family picks its donor
// accordingly.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "roughflow/flux.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/kernel.hpp"

namespace roughflow {

using NodeVelocity = std::array<double, 2>;
/// F(a, u, lambda); lambda = dt/dx is passed for families whose numerical
/// viscosity is written in grid units.
using NodeFlux = std::function<double(const NodeVelocity &, double, double)>;

struct FluxTerm {
  int axis = 0;
  Offset offset{0, 0};
  NodeFlux F;
};

enum class SchemeKind { upwind, lax_friedrichs, centered, custom };

class CflError : public Error {
public:
  CflError(const std::string &what, double cfl) : Error(what), cfl_(cfl) {}
  /// Offending max |a^k f'| dt / dx.
  double cfl() const { return cfl_; }

private:
  double cfl_;
};

struct SchemeDef {
  std::string name;
  SchemeKind kind = SchemeKind::custom;
  FluxLaw flux = FluxLaw::linear();
  int d = 1;
  std::vector<FluxTerm> terms;
  double nu = 0.0;
  double gamma = 1.0;
  /// Flux seen by constant states; equals f for the built-ins.
  std::optional<FluxLaw> ftilde;

  const FluxLaw &ftilde_law() const { return ftilde ? *ftilde : flux; }

  int radius() const {
    int r = 0;
    for (const auto &t : terms)
      r = std::max({r, std::abs(t.offset[0]), std::abs(t.offset[1])});
    return r;
  }

  /// Donor-cell family: F^k_0 = a^k f(u) when a^k >= 0, F^k_{[1]_k} = a^k f(u)
  /// when a^k < 0.
  static SchemeDef upwind(FluxLaw f, int d) {
    SchemeDef s{"upwind", SchemeKind::upwind, f, d};
    for (int k = 0; k < d; ++k) {
      s.terms.push_back({k, {0, 0}, [f, k](const NodeVelocity &a, double u, double) {
                           return a[k] >= 0.0 ? a[k] * f.f(u) : 0.0;
                         }});
      s.terms.push_back({k, unit_offset(k), [f, k](const NodeVelocity &a, double u, double) {
                           return a[k] < 0.0 ? a[k] * f.f(u) : 0.0;
                         }});
    }
    return s;
  }

  /// F^k_0 = a^k f / 2 + (nu / lambda) u, F^k_{[1]_k} = a^k f / 2 - (nu / lambda) u.
  static SchemeDef lax_friedrichs(FluxLaw f, int d, double nu) {
    if (!(nu >= 0.0 && nu <= 0.25))
      throw Error("viscosity nu must lie in [0, 1/4]");
    SchemeDef s{"lax-friedrichs", SchemeKind::lax_friedrichs, f, d};
    s.nu = nu;
    for (int k = 0; k < d; ++k) {
      s.terms.push_back({k, {0, 0}, [f, k, nu](const NodeVelocity &a, double u, double lam) {
                           return 0.5 * a[k] * f.f(u) + nu / lam * u;
                         }});
      s.terms.push_back({k, unit_offset(k), [f, k, nu](const NodeVelocity &a, double u, double lam) {
                           return 0.5 * a[k] * f.f(u) - nu / lam * u;
                         }});
    }
    return s;
  }

  /// Zero-viscosity centred scheme; not monotone, kept as a negative control.
  static SchemeDef centered(FluxLaw f, int d) {
    SchemeDef s = lax_friedrichs(f, d, 0.0);
    s.name = "centered";
    s.kind = SchemeKind::centered;
    return s;
  }

  static SchemeDef custom(std::string name, FluxLaw f, int d, std::vector<FluxTerm> terms,
                          std::optional<FluxLaw> ftilde = std::nullopt) {
    SchemeDef s{std::move(name), SchemeKind::custom, std::move(f), d, std::move(terms)};
    s.ftilde = std::move(ftilde);
    for (const auto &t : s.terms)
      if (t.axis < 0 || t.axis >= d)
        throw Error("flux term axis out of range");
    return s;
  }
};

/// max over sampled (a, u) of |sum_j F^k_j(a, u) - a^k f(u)| relative to
/// max(|a^k f(u)|, 1e-300). Sampling box: |a^k| <= a_max, u in [u_lo, u_hi].
inline double normflux_residual(const SchemeDef &s, double lambda, double a_max, double u_lo, double u_hi,
                                int samples = 9) {
  double worst = 0.0;
  for (int k = 0; k < s.d; ++k)
    for (int ia = 0; ia < samples; ++ia)
      for (int ib = 0; ib < (s.d == 2 ? samples : 1); ++ib)
        for (int iu = 0; iu < samples; ++iu) {
          NodeVelocity a{-a_max + 2 * a_max * ia / (samples - 1),
                         s.d == 2 ? -a_max + 2 * a_max * ib / (samples - 1) : 0.0};
          double u = u_lo + (u_hi - u_lo) * iu / (samples - 1);
          double sum = 0.0;
          for (const auto &t : s.terms)
            if (t.axis == k)
              sum += t.F(a, u, lambda);
          double target = a[k] * s.flux.f(u);
          double scale = std::max({std::abs(target), std::abs(a[k]) * s.flux.lip() * (std::abs(u) + 1.0), 1e-300});
          worst = std::max(worst, std::abs(sum - target) / scale);
        }
  return worst;
}

namespace detail {

/// Velocity at node l as a fixed 2-array.
inline NodeVelocity node_velocity(const VectorField &a, std::size_t l) {
  NodeVelocity v{0.0, 0.0};
  for (int k = 0; k < a.d(); ++k)
    v[k] = a(l, k);
  return v;
}

/// Linear displacement for each term: (plus target m + o - [1]_k, minus target m + o).
struct TermShift {
  Offset plus;
  Offset minus;
};

inline std::vector<TermShift> term_shifts(const SchemeDef &s) {
  std::vector<TermShift> out;
  for (const auto &t : s.terms) {
    Offset plus = t.offset;
    plus[t.axis] -= 1;
    out.push_back({plus, t.offset});
  }
  return out;
}

inline void check_compatible(const SchemeDef &s, const VectorField &a, const ScalarField &u) {
  if (!a.grid().same_lattice(u.grid()))
    throw Error("velocity and density live on different grids");
  if (s.d != u.grid().d())
    throw Error("scheme dimension does not match the grid");
}

} // namespace detail

/// lambda * sum over flux terms scattered to their targets:
/// returns sum_m b_{i,m}(a_m, w_m) - w_i, with w the given state.
inline std::vector<double> flux_increment(const SchemeDef &s, const VectorField &a, std::span<const double> w,
                                          const GridSpec &g) {
  const double lam = g.lambda();
  auto shifts = detail::term_shifts(s);
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t m = 0; m < g.size(); ++m) {
    NodeVelocity am = detail::node_velocity(a, m);
    for (std::size_t t = 0; t < s.terms.size(); ++t) {
      double v = lam * s.terms[t].F(am, w[m], lam);
      if (v == 0.0)
        continue;
      out[g.displaced(m, shifts[t].plus)] += v;
      out[g.displaced(m, shifts[t].minus)] -= v;
    }
  }
  return out;
}

/// b_{i,m}(a_m, u_m) with periodic index arithmetic.
inline double assemble_b(const SchemeDef &s, const VectorField &a, const ScalarField &u, const Index &i,
                         const Index &m) {
  detail::check_compatible(s, a, u);
  const GridSpec &g = u.grid();
  const double lam = g.lambda();
  std::size_t li = g.linear({g.wrap(i[0]), g.d() == 2 ? g.wrap(i[1]) : 0});
  std::size_t lm = g.linear({g.wrap(m[0]), g.d() == 2 ? g.wrap(m[1]) : 0});
  NodeVelocity am = detail::node_velocity(a, lm);
  double out = li == lm ? u[lm] : 0.0;
  auto shifts = detail::term_shifts(s);
  for (std::size_t t = 0; t < s.terms.size(); ++t) {
    bool plus = g.displaced(lm, shifts[t].plus) == li;
    bool minus = g.displaced(lm, shifts[t].minus) == li;
    if (!plus && !minus)
      continue;
    double v = lam * s.terms[t].F(am, u[lm], lam);
    out += (plus ? v : 0.0) - (minus ? v : 0.0);
  }
  return out;
}

struct MonotoneMargins {
  double diag = 0.0;       ///< worst d/du (b_ii - u/2)
  double off = 0.0;        ///< worst d/du b_im, m != i
  double cfl_number = 0.0; ///< lambda * max_i sum_k |a_ik| * max |f'|
  double lambda_max = 0.0; ///< largest dt/dx keeping both margins >= 0
  bool pass() const { return diag >= -1e-10 && off >= -1e-10; }
};

namespace detail {

/// Closed-form margins for the built-in families on a velocity field and a
/// u range, at ratio lambda.
inline MonotoneMargins builtin_margins(const SchemeDef &s, double lambda, double sum_abs_a, double max_abs_a,
                                       double fp_min, double fp_max) {
  MonotoneMargins m;
  double fp_abs = std::max(std::abs(fp_min), std::abs(fp_max));
  m.cfl_number = lambda * sum_abs_a * fp_abs;
  if (s.kind == SchemeKind::upwind) {
    m.diag = 0.5 - lambda * sum_abs_a * std::max(fp_max, 0.0);
    m.off = lambda * max_abs_a * std::min(fp_min, 0.0);
    if (m.off < 0.0)
      m.lambda_max = 0.0;
    else
      m.lambda_max = sum_abs_a * fp_max > 0.0 ? 0.5 / (sum_abs_a * fp_max) : kInf;
  } else {
    m.diag = 0.5 - 2.0 * s.d * s.nu;
    m.off = s.nu - 0.5 * lambda * max_abs_a * fp_abs;
    m.lambda_max = m.diag < -1e-10 ? 0.0 : (max_abs_a * fp_abs > 0.0 ? 2.0 * s.nu / (max_abs_a * fp_abs) : kInf);
  }
  return m;
}

/// Derivative probes of every contribution c_t(a, u) = u delta_{t=0} +
/// lambda sum_terms (F 1[t = plus] - F 1[t = minus]).
inline std::pair<double, double> probe_margins(const SchemeDef &s, double lambda, const NodeVelocity &lo,
                                               const NodeVelocity &hi, double u_lo, double u_hi, int samples) {
  auto shifts = term_shifts(s);
  // Distinct targets relative to the source.
  std::vector<Offset> targets{{0, 0}};
  for (const auto &sh : shifts)
    for (const Offset &o : {sh.plus, sh.minus})
      if (std::find(targets.begin(), targets.end(), o) == targets.end())
        targets.push_back(o);
  const double eps = 1e-5;
  double diag = kInf, off = kInf;
  const int na = samples, nb = s.d == 2 ? samples : 1;
  for (int ia = 0; ia < na; ++ia)
    for (int ib = 0; ib < nb; ++ib)
      for (int iu = 0; iu < samples; ++iu) {
        NodeVelocity a{lo[0] + (hi[0] - lo[0]) * ia / std::max(1, na - 1),
                       s.d == 2 ? lo[1] + (hi[1] - lo[1]) * ib / std::max(1, nb - 1) : 0.0};
        double u = u_lo + (u_hi - u_lo) * iu / std::max(1, samples - 1);
        for (const Offset &tg : targets) {
          auto contrib = [&](double w) {
            double c = (tg == Offset{0, 0}) ? w : 0.0;
            for (std::size_t t = 0; t < s.terms.size(); ++t) {
              double F = s.terms[t].F(a, w, lambda);
              if (shifts[t].plus == tg)
                c += lambda * F;
              if (shifts[t].minus == tg)
                c -= lambda * F;
            }
            return c;
          };
          double der = (contrib(u + eps) - contrib(u - eps)) / (2 * eps);
          if (tg == Offset{0, 0})
            diag = std::min(diag, der - 0.5);
          else
            off = std::min(off, der);
        }
      }
  return {diag, off};
}

} // namespace detail

/// Finite-difference monotonicity probes over a box of velocities and
/// densities, at the grid's dt/dx unless `lambda` is given.
inline MonotoneMargins check_monotone(const SchemeDef &s, NodeVelocity a_lo, NodeVelocity a_hi, double u_lo,
                                      double u_hi, double lambda, int samples = 7) {
  MonotoneMargins m;
  std::tie(m.diag, m.off) = detail::probe_margins(s, lambda, a_lo, a_hi, u_lo, u_hi, samples);
  double sum_abs = 0.0;
  for (int k = 0; k < s.d; ++k)
    sum_abs += std::max(std::abs(a_lo[k]), std::abs(a_hi[k]));
  auto [fmin, fmax] = s.flux.fprime_range(u_lo, u_hi);
  m.cfl_number = lambda * sum_abs * std::max(std::abs(fmin), std::abs(fmax));
  // Largest admissible ratio by bisection on the probe margins.
  auto ok = [&](double lam) {
    auto [dg, of] = detail::probe_margins(s, lam, a_lo, a_hi, u_lo, u_hi, samples);
    return dg >= -1e-10 && of >= -1e-10;
  };
  double lo = 0.0, hi = std::max(lambda, 1e-6);
  if (!ok(1e-12)) {
    m.lambda_max = 0.0;
    return m;
  }
  int grow = 0;
  while (ok(hi) && grow++ < 60)
    hi *= 2.0;
  if (grow > 60) {
    m.lambda_max = kInf;
    return m;
  }
  lo = hi / 2.0;
  if (!ok(lo))
    lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  m.lambda_max = lo;
  return m;
}

/// Margins for one step on the actual fields (closed form for built-ins,
/// probed otherwise).
inline MonotoneMargins step_margins(const SchemeDef &s, const VectorField &a, const ScalarField &u) {
  const GridSpec &g = u.grid();
  double u_lo = u.min(), u_hi = u.max();
  if (s.kind == SchemeKind::custom) {
    NodeVelocity lo{0.0, 0.0}, hi{0.0, 0.0};
    for (int k = 0; k < s.d; ++k) {
      lo[k] = a.component(k).min();
      hi[k] = a.component(k).max();
    }
    return check_monotone(s, lo, hi, u_lo, u_hi, g.lambda(), 5);
  }
  double sum_abs = 0.0, max_abs = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    double acc = 0.0;
    for (int k = 0; k < a.d(); ++k) {
      acc += std::abs(a(l, k));
      max_abs = std::max(max_abs, std::abs(a(l, k)));
    }
    sum_abs = std::max(sum_abs, acc);
  }
  auto [fmin, fmax] = s.flux.fprime_range(u_lo, u_hi);
  return detail::builtin_margins(s, g.lambda(), sum_abs, max_abs, fmin, fmax);
}

struct StepOptions {
  bool enforce_cfl = true;
};

struct StepReport {
  double mass_in = 0.0;
  double mass_out = 0.0;
  MonotoneMargins margins;
};

struct StepResult {
  ScalarField u;
  StepReport report;
};

/// One explicit step. Throws CflError when the monotonicity margins are
/// negative, unless enforcement is switched off.
inline StepResult step(const SchemeDef &s, const VectorField &a, const ScalarField &u, StepOptions opt = {}) {
  detail::check_compatible(s, a, u);
  detail::require_finite(u);
  if (!a.all_finite())
    throw Error("non-finite field");
  const GridSpec &g = u.grid();
  StepReport rep;
  rep.margins = step_margins(s, a, u);
  if (opt.enforce_cfl && !rep.margins.pass())
    throw CflError("CFL violated: max |a f'| dt/dx = " + std::to_string(rep.margins.cfl_number), rep.margins.cfl_number);
  auto inc = flux_increment(s, a, u.values(), g);
  ScalarField out = u;
  for (std::size_t l = 0; l < out.size(); ++l)
    out[l] += inc[l];
  rep.mass_in = u.sum();
  rep.mass_out = out.sum();
  return {std::move(out), rep};
}

struct DivergenceReport {
  ScalarField D;
  std::vector<double> probes;  ///< constant states used
  double residual = 0.0;       ///< U-dependence of D, relative
  double ftilde_ratio = 0.0;   ///< ||f~||_{W^{1,inf}} / ||f||_{W^{1,inf}} on the probe range
  double dmax() const { return lp_norm(D, kInf); }
};

/// Extracts D_i from sum_j b_{i,j}(a_j, U) = U + dt D_i f~(U) with several
/// constant probes U; throws if the result depends on U.
inline DivergenceReport discrete_divergence(const SchemeDef &s, const VectorField &a, GridSpec g,
                                            double tolerance = 1e-10) {
  if (s.d != g.d() || !a.grid().same_lattice(g))
    throw Error("scheme dimension does not match the grid");
  const FluxLaw &ft = s.ftilde_law();
  std::vector<double> candidates{0.25, 0.5, 0.75, 0.375, 0.625, 1.0, -0.5, 1.5, 2.0, 3.0, -1.0};
  std::vector<double> probes;
  for (double U : candidates)
    if (std::abs(ft.f(U)) > 1e-8 && probes.size() < 3)
      probes.push_back(U);
  if (probes.size() < 3)
    throw Error("no probe state with nonzero f~");
  std::vector<ScalarField> Ds;
  for (double U : probes) {
    std::vector<double> w(g.size(), U);
    auto inc = flux_increment(s, a, w, g);
    ScalarField D(g);
    for (std::size_t l = 0; l < g.size(); ++l)
      D[l] = inc[l] / (g.dt() * ft.f(U));
    Ds.push_back(std::move(D));
  }
  double scale = std::max(lp_norm(Ds[0], kInf), a.max_norm());
  double resid = 0.0;
  for (std::size_t p = 1; p < Ds.size(); ++p)
    for (std::size_t l = 0; l < g.size(); ++l)
      resid = std::max(resid, std::abs(Ds[p][l] - Ds[0][l]));
  resid = scale > 0.0 ? resid / scale : resid;
  if (resid > tolerance)
    throw Error("scheme violates divcondition");

  double lo = *std::min_element(probes.begin(), probes.end());
  double hi = *std::max_element(probes.begin(), probes.end());
  auto w1inf = [&](const FluxLaw &law) {
    double sup = 0.0;
    for (int q = 0; q <= 64; ++q)
      sup = std::max(sup, std::abs(law.f(lo + (hi - lo) * q / 64.0)));
    return sup + law.sampled_lipschitz(lo, hi, 64);
  };
  double ref = w1inf(s.flux);
  return {Ds[0], probes, resid, ref > 0.0 ? w1inf(ft) / ref : 0.0};
}

struct MomentReport {
  double gamma = 1.0;
  double lhs_max = 0.0; ///< max_{i,k} sum_m |i-m|^gamma |F^k_{i-m}(a_m, u_m)|
  double bracket = 0.0; ///< ||f'|| ||a||_{l^2} ||u||_{l^2}
  double ratio = 0.0;
};

inline MomentReport check_moment(const SchemeDef &s, const VectorField &a, const ScalarField &u, double p = 2.0) {
  detail::check_compatible(s, a, u);
  const GridSpec &g = u.grid();
  const double lam = g.lambda();
  MomentReport rep;
  rep.gamma = s.gamma;
  std::vector<double> acc(g.size() * s.d, 0.0);
  for (std::size_t m = 0; m < g.size(); ++m) {
    NodeVelocity am = detail::node_velocity(a, m);
    for (const auto &t : s.terms) {
      double dist = std::hypot(double(t.offset[0]), double(t.offset[1]));
      if (dist == 0.0)
        continue;
      double v = std::pow(dist, s.gamma) * std::abs(t.F(am, u[m], lam));
      acc[g.displaced(m, t.offset) * s.d + t.axis] += v;
    }
  }
  rep.lhs_max = acc.empty() ? 0.0 : *std::max_element(acc.begin(), acc.end());
  double pstar = p / (p - 1.0);
  rep.bracket = s.flux.lip() * lp_norm(a, p) * lp_norm(u, pstar);
  rep.ratio = rep.bracket > 0.0 ? rep.lhs_max / rep.bracket : 0.0;
  return rep;
}

struct LedgerRow {
  double h = 0.0;
  double lhs = 0.0;       ///< sum K |u^{n+1}_i - u^{n+1}_j|
  double transport = 0.0; ///< (i) sum K |u^n_i - u^n_j|
  double divergence = 0.0; ///< (ii) D_h
  double commutator = 0.0; ///< (iii) lambda sum s (K_{i-[1]_k-j} - K_{i-j})(a_ik - a_jk)(f_i - f_j)
  double remainder = 0.0;  ///< (iv) exact residual of the flux terms
  double remainder_scale = 0.0; ///< dt dx^{gamma-2d} h^{-1-gamma} ||f'|| ||a||_2 ||u||_2
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
  double relative_slack() const {
    double scale = std::max({std::abs(lhs), std::abs(transport), 1e-300});
    return (rhs - lhs) / scale;
  }
};

struct KruzkovLedger {
  std::vector<LedgerRow> rows;
  bool holds(double rel_tol = 1e-8) const {
    for (const auto &r : rows)
      if (r.relative_slack() < -rel_tol)
        return false;
    return true;
  }
};

struct LedgerOptions {
  bool throw_on_violation = true;
  double rel_tol = 1e-8;
};

/// Discrete Kruzkov inequality for one step on the periodic lattice:
///   sum K|v_i - v_j| <= sum K|u_i - u_j| + D_h + 2A,
/// A = lambda sum_{m,j} s_mj sum_terms [F(a_m,u_m) - F(a_m,u_j)] (K_{m+o-[1]_k-j} - K_{m+o-j}),
/// split as A-part (iii) plus the residual (iv). All sums are raw.
inline KruzkovLedger kruzkov_ledger(const SchemeDef &s, const VectorField &a, const ScalarField &un,
                                    const ScalarField &unp1, const ScalarField &D, const std::vector<double> &hs,
                                    LedgerOptions opt = {}) {
  detail::check_compatible(s, a, un);
  const GridSpec &g = un.grid();
  const std::size_t N = g.size();
  const int n = g.n();
  const int H = int(hs.size());
  const double lam = g.lambda();
  const double dt = g.dt();

  // Periodised kernel tables, h innermost.
  std::vector<double> K(N * H);
  for (int q = 0; q < H; ++q) {
    LogKernel k(g, hs[q]);
    const auto &tab = k.periodic();
    for (std::size_t l = 0; l < N; ++l)
      K[l * H + q] = tab[l];
  }
  std::vector<Index> idx(N);
  for (std::size_t l = 0; l < N; ++l)
    idx[l] = g.index(l);
  const int mask = n - 1;
  auto off = [&](std::size_t i, std::size_t j, const Offset &shift) -> std::size_t {
    int x = (idx[i][0] - idx[j][0] + shift[0]) & mask;
    if (g.d() == 1)
      return std::size_t(x);
    int y = (idx[i][1] - idx[j][1] + shift[1]) & mask;
    return std::size_t(x) * n + y;
  };

  const FluxLaw &ft = s.ftilde_law();
  std::vector<double> fu(N), ftu(N);
  for (std::size_t l = 0; l < N; ++l) {
    fu[l] = s.flux.f(un[l]);
    ftu[l] = ft.f(un[l]);
  }
  auto shifts = detail::term_shifts(s);
  const std::size_t T = s.terms.size();
  // F(a_m, u_m) per term.
  std::vector<double> Fmm(N * T);
  std::vector<NodeVelocity> av(N);
  for (std::size_t m = 0; m < N; ++m) {
    av[m] = detail::node_velocity(a, m);
    for (std::size_t t = 0; t < T; ++t)
      Fmm[m * T + t] = s.terms[t].F(av[m], un[m], lam);
  }

  std::vector<double> lhs(H, 0.0), tr(H, 0.0), dh(H, 0.0), comm(H, 0.0), A(H, 0.0);
  const Offset zero{0, 0};
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j)
        continue;
      const double* Kij = &K[off(i, j, zero) * H];
      const double dv = unp1[i] - unp1[j];
      const double du = un[i] - un[j];
      const double sn = (du > 0) - (du < 0);
      const double snp1 = (dv > 0) - (dv < 0);
      const double adv = std::abs(dv), adu = std::abs(du);
      const double dterm = snp1 * (D[i] * ftu[j] - D[j] * ftu[i]);
      for (int q = 0; q < H; ++q) {
        lhs[q] += Kij[q] * adv;
        tr[q] += Kij[q] * adu;
        dh[q] += Kij[q] * dterm;
      }
      if (sn == 0.0)
        continue;
      const double df = fu[i] - fu[j];
      for (int k = 0; k < g.d(); ++k) {
        Offset back{0, 0};
        back[k] = -1;
        const double* Kb = &K[off(i, j, back) * H];
        const double w = sn * (av[i][k] - av[j][k]) * df;
        for (int q = 0; q < H; ++q)
          comm[q] += (Kb[q] - Kij[q]) * w;
      }
      // Flux terms with source m = i and reference state u_j.
      for (std::size_t t = 0; t < T; ++t) {
        double dF = Fmm[i * T + t] - s.terms[t].F(av[i], un[j], lam);
        if (dF == 0.0)
          continue;
        const double* Kp = &K[off(i, j, shifts[t].plus) * H];
        const double* Km = &K[off(i, j, shifts[t].minus) * H];
        const double w = sn * dF;
        for (int q = 0; q < H; ++q)
          A[q] += w * (Kp[q] - Km[q]);
      }
    }
  }

  const double fp = s.flux.lip();
  const double norms = fp * lp_norm(a, 2.0) * lp_norm(un, 2.0);
  KruzkovLedger led;
  for (int q = 0; q < H; ++q) {
    LedgerRow r;
    r.h = hs[q];
    r.lhs = lhs[q];
    r.transport = tr[q];
    r.divergence = dt * dh[q];
    r.commutator = lam * comm[q];
    r.remainder = 2.0 * lam * A[q] - r.commutator;
    r.remainder_scale = dt * std::pow(g.dx(), s.gamma - 2.0 * g.d()) / std::pow(hs[q], 1.0 + s.gamma) * norms;
    r.rhs = r.transport + r.divergence + r.commutator + r.remainder;
    led.rows.push_back(r);
  }
  if (opt.throw_on_violation && !led.holds(opt.rel_tol))
    throw Error("entropy ledger violated");
  return led;
}

} // namespace roughflow
