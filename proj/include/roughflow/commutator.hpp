#pragma once

// Kruzkov two-point functions and the commutator
//   int int grad K_h(x - y) . (a(x) - a(y)) |g(x) - g(y)|^2 dx dy
// with its no-cancellation control and right-hand-side brackets.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roughflow/besov.hpp"
#include "roughflow/fft.hpp"
#include "roughflow/flux.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/kernel.hpp"
#include "roughflow/regression.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

inline double sign0(double x) { return double((x > 0.0) - (x < 0.0)); }

/// F(xi, zeta) = (f(xi) - f(zeta)) sign(xi - zeta).
inline double kruzkov_F(const FluxLaw &f, double xi, double zeta) { return (f.f(xi) - f.f(zeta)) * sign0(xi - zeta); }

/// G(xi, zeta) = f(xi) sign(xi - zeta) - F(xi, zeta).
inline double kruzkov_G(const FluxLaw &f, double xi, double zeta) {
  return f.f(xi) * sign0(xi - zeta) - kruzkov_F(f, xi, zeta);
}

/// Gbar(xi, zeta) = (f(xi) + f(zeta)) / 2 * sign(xi - zeta).
inline double kruzkov_Gbar(const FluxLaw &f, double xi, double zeta) {
  return 0.5 * (f.f(xi) + f.f(zeta)) * sign0(xi - zeta);
}

struct LevelSetReport {
  std::size_t pairs = 0;
  double max_rel_error = 0.0;
};

/// Checks F(u_i, u_j) = int_0^inf f'(xi) |k(x_i, xi) - k(x_j, xi)|^2 dxi with
/// k = 1[0 <= xi <= u]. The integrand is f' on [min, max] and zero elsewhere;
/// it is integrated piece by piece between the kinks of f.
inline LevelSetReport level_set_check(const FluxLaw &f, const ScalarField &u,
                                      const std::vector<std::pair<std::size_t, std::size_t>> &pairs) {
  if (u.min() < 0.0)
    throw Error("level-set representation needs u >= 0");
  using boost::math::quadrature::gauss_kronrod;
  LevelSetReport rep;
  for (auto [i, j] : pairs) {
    double lo = std::min(u[i], u[j]), hi = std::max(u[i], u[j]);
    std::vector<double> cuts{lo};
    for (double k : f.kinks())
      if (k > lo && k < hi)
        cuts.push_back(k);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double integral = 0.0;
    for (std::size_t c = 1; c < cuts.size(); ++c)
      if (cuts[c] > cuts[c - 1])
        integral += gauss_kronrod<double, 15>::integrate([&](double x) { return f.fprime(x); }, cuts[c - 1], cuts[c], 10, 1e-14);
    double F = kruzkov_F(f, u[i], u[j]);
    double scale = std::max({std::abs(F), std::abs(integral), 1e-300});
    double err = (F == 0.0 && integral == 0.0) ? 0.0 : std::abs(F - integral) / scale;
    rep.max_rel_error = std::max(rep.max_rel_error, err);
    ++rep.pairs;
  }
  return rep;
}

namespace detail {

inline void require_same(const VectorField &a, const ScalarField &g) {
  if (!a.grid().same_lattice(g.grid()))
    throw Error("fields live on different grids");
}

} // namespace detail

/// dx^{2d} sum_{i,j} grad K_h(x_i - x_j) . (a_i - a_j) |g_i - g_j|^2 on the
/// torus, through four circular convolutions per component.
inline double commutator_lhs(const VectorField &a, const ScalarField &g, double h) {
  detail::require_same(a, g);
  const GridSpec &grid = g.grid();
  LogKernel k(grid, h);
  const std::size_t N = grid.size();
  std::vector<double> g2(N);
  for (std::size_t l = 0; l < N; ++l)
    g2[l] = g[l] * g[l];
  Spectrum g_hat = fft_forward(grid, g.values());
  Spectrum g2_hat = fft_forward(grid, g2);
  auto conv = [&](const Spectrum &kh, const Spectrum &wh) {
    Spectrum p(kh.size());
    for (std::size_t l = 0; l < p.size(); ++l)
      p[l] = kh[l] * wh[l];
    return fft_inverse_real(grid, std::move(p));
  };
  double total = 0.0;
  for (int c = 0; c < grid.d(); ++c) {
    Spectrum G = fft_forward(grid, k.periodic_gradient(c));
    const ScalarField &ac = a.component(c);
    std::vector<double> ag(N);
    for (std::size_t l = 0; l < N; ++l)
      ag[l] = ac[l] * g[l];
    auto Gg2 = conv(G, g2_hat);
    auto Gg = conv(G, g_hat);
    auto Ga = conv(G, fft_forward(grid, ac.values()));
    auto Gag = conv(G, fft_forward(grid, ag));
    for (std::size_t l = 0; l < N; ++l)
      total += ac[l] * Gg2[l] - 2.0 * ac[l] * g[l] * Gg[l] - g2[l] * Ga[l] + 2.0 * g[l] * Gag[l];
  }
  const double cell = grid.cell_volume();
  return cell * cell * total;
}

/// Same quantity by the direct double loop (periodised gradient table).
inline double commutator_lhs_direct(const VectorField &a, const ScalarField &g, double h) {
  detail::require_same(a, g);
  const GridSpec &grid = g.grid();
  LogKernel k(grid, h);
  std::vector<std::vector<double>> G;
  for (int c = 0; c < grid.d(); ++c)
    G.push_back(k.periodic_gradient(c));
  const std::size_t N = grid.size();
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    Index ii = grid.index(i);
    for (std::size_t j = 0; j < N; ++j) {
      Index jj = grid.index(j);
      std::size_t o = grid.linear({grid.wrap(ii[0] - jj[0]), grid.d() == 2 ? grid.wrap(ii[1] - jj[1]) : 0});
      double dg = g[i] - g[j];
      double dot = 0.0;
      for (int c = 0; c < grid.d(); ++c)
        dot += G[c][o] * (a(i, c) - a(j, c));
      total += dot * dg * dg;
    }
  }
  const double cell = grid.cell_volume();
  return cell * cell * total;
}

/// Per-offset pair sums S(o) = sum_i |a_i - a_{i+o}| |g_i - g_{i+o}|^2 for a
/// set of offsets (linear indices of wrapped offsets).
inline std::vector<double> pair_moments(const VectorField &a, const ScalarField &g, const std::vector<std::size_t> &offsets) {
  const GridSpec &grid = g.grid();
  const int n = grid.n(), d = grid.d();
  const std::size_t rows = d == 1 ? 1 : std::size_t(n);
  const double *a0 = a.component(0).values().data();
  const double *a1 = d == 2 ? a.component(1).values().data() : nullptr;
  const double *gv = g.values().data();
  std::vector<double> out;
  out.reserve(offsets.size());
  for (std::size_t ol : offsets) {
    Offset o = grid.index(ol);
    // Row shift (first axis) and column shift (last axis) of the offset.
    const std::size_t dr = d == 1 ? 0 : std::size_t(o[0]);
    const std::size_t dc = std::size_t(d == 1 ? o[0] : o[1]);
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t ri = r * n, rj = ((r + dr) % rows) * n;
      for (std::size_t c = 0; c < std::size_t(n); ++c) {
        const std::size_t cj = c + dc < std::size_t(n) ? c + dc : c + dc - n;
        const std::size_t i = ri + c, j = rj + cj;
        double da = a0[i] - a0[j];
        double da2 = da * da;
        if (a1) {
          double db = a1[i] - a1[j];
          da2 += db * db;
        }
        double dg = gv[i] - gv[j];
        s += std::sqrt(da2) * dg * dg;
      }
    }
    out.push_back(s);
  }
  return out;
}

/// Kernel data for a fixed grid and ladder, built once and reused across
/// fields: gradient spectra for the commutator and the offset sample of the
/// no-cancellation control. Control offsets are exact when N <= exact_limit;
/// otherwise offsets beyond the inner block |o|_inf < 8 are sampled per
/// dyadic shell of |o|_inf, with the same sample reused for every h.
class CommutatorLadder {
public:
  CommutatorLadder(GridSpec grid, std::vector<double> hs, std::uint64_t seed = 0, std::size_t exact_limit = 1u << 14,
                   int samples_per_shell = 96)
      : grid_(grid), hs_(std::move(hs)) {
    const std::size_t N = grid.size();
    if (N <= exact_limit) {
      for (std::size_t l = 1; l < N; ++l) {
        offsets_.push_back(l);
        weight_.push_back(1.0);
      }
    } else {
      auto inf_norm = [&](std::size_t l) {
        Offset o = grid.minimal_image(grid.index(l));
        return std::max(std::abs(o[0]), std::abs(o[1]));
      };
      std::vector<std::vector<std::size_t>> shells;
      for (std::size_t l = 1; l < N; ++l) {
        int r = inf_norm(l);
        if (r < 8) {
          offsets_.push_back(l);
          weight_.push_back(1.0);
          continue;
        }
        int sh = int(std::floor(std::log2(double(r)))) - 3;
        if (int(shells.size()) <= sh)
          shells.resize(sh + 1);
        shells[sh].push_back(l);
      }
      CounterRng rng(seed, "commutator-control");
      std::uint64_t counter = 0;
      for (auto &shell : shells) {
        if (shell.empty())
          continue;
        if (int(shell.size()) <= samples_per_shell) {
          for (auto l : shell) {
            offsets_.push_back(l);
            weight_.push_back(1.0);
          }
          continue;
        }
        double w = double(shell.size()) / samples_per_shell;
        for (int q = 0; q < samples_per_shell; ++q) {
          offsets_.push_back(shell[rng.below(counter++, shell.size())]);
          weight_.push_back(w);
        }
      }
    }
    for (double h : hs_) {
      LogKernel k(grid, h);
      std::vector<Spectrum> spectra;
      std::vector<double> mag(offsets_.size(), 0.0);
      for (int c = 0; c < grid.d(); ++c) {
        auto G = k.periodic_gradient(c);
        for (std::size_t q = 0; q < offsets_.size(); ++q)
          mag[q] += G[offsets_[q]] * G[offsets_[q]];
        spectra.push_back(fft_forward(grid, G));
      }
      for (double &m : mag)
        m = std::sqrt(m);
      grad_hat_.push_back(std::move(spectra));
      grad_mag_.push_back(std::move(mag));
    }
  }

  const std::vector<double> &hs() const { return hs_; }

  /// Commutator at every h of the ladder (same quantity as commutator_lhs).
  std::vector<double> lhs(const VectorField &a, const ScalarField &g) const {
    detail::require_same(a, g);
    if (!g.grid().same_lattice(grid_))
      throw Error("ladder built for a different grid");
    const std::size_t N = grid_.size();
    std::vector<double> g2(N);
    for (std::size_t l = 0; l < N; ++l)
      g2[l] = g[l] * g[l];
    Spectrum g_hat = fft_forward(grid_, g.values());
    Spectrum g2_hat = fft_forward(grid_, g2);
    std::vector<Spectrum> a_hat, ag_hat;
    for (int c = 0; c < grid_.d(); ++c) {
      const ScalarField &ac = a.component(c);
      std::vector<double> ag(N);
      for (std::size_t l = 0; l < N; ++l)
        ag[l] = ac[l] * g[l];
      a_hat.push_back(fft_forward(grid_, ac.values()));
      ag_hat.push_back(fft_forward(grid_, ag));
    }
    auto conv = [&](const Spectrum &kh, const Spectrum &wh) {
      Spectrum p(kh.size());
      for (std::size_t l = 0; l < p.size(); ++l)
        p[l] = kh[l] * wh[l];
      return fft_inverse_real(grid_, std::move(p));
    };
    const double cell = grid_.cell_volume();
    std::vector<double> out;
    for (std::size_t k = 0; k < hs_.size(); ++k) {
      double total = 0.0;
      for (int c = 0; c < grid_.d(); ++c) {
        const Spectrum &G = grad_hat_[k][c];
        const ScalarField &ac = a.component(c);
        auto Gg2 = conv(G, g2_hat);
        auto Gg = conv(G, g_hat);
        auto Ga = conv(G, a_hat[c]);
        auto Gag = conv(G, ag_hat[c]);
        for (std::size_t l = 0; l < N; ++l)
          total += ac[l] * Gg2[l] - 2.0 * ac[l] * g[l] * Gg[l] - g2[l] * Ga[l] + 2.0 * g[l] * Gag[l];
      }
      out.push_back(cell * cell * total);
    }
    return out;
  }

  /// No-cancellation control dx^{2d} sum |grad K_h(x_i - x_j)| |a_i - a_j| |g_i - g_j|^2.
  std::vector<double> control(const VectorField &a, const ScalarField &g) const {
    detail::require_same(a, g);
    if (!g.grid().same_lattice(grid_))
      throw Error("ladder built for a different grid");
    auto S = pair_moments(a, g, offsets_);
    const double cell = grid_.cell_volume();
    std::vector<double> out;
    for (std::size_t k = 0; k < hs_.size(); ++k) {
      double total = 0.0;
      for (std::size_t q = 0; q < offsets_.size(); ++q)
        total += weight_[q] * grad_mag_[k][q] * S[q];
      out.push_back(cell * cell * total);
    }
    return out;
  }

private:
  GridSpec grid_;
  std::vector<double> hs_;
  std::vector<std::size_t> offsets_;
  std::vector<double> weight_;
  std::vector<std::vector<Spectrum>> grad_hat_; ///< [h][component]
  std::vector<std::vector<double>> grad_mag_;   ///< [h][offset]
};

/// Control for every h of a ladder; see CommutatorLadder.
inline std::vector<double> commutator_control(const VectorField &a, const ScalarField &g, const std::vector<double> &hs,
                                              std::uint64_t seed = 0, std::size_t exact_limit = 1u << 14,
                                              int samples_per_shell = 96) {
  return CommutatorLadder(g.grid(), hs, seed, exact_limit, samples_per_shell).control(a, g);
}

struct CommutatorRhs {
  double grad_term = 0.0; ///< ||grad a||_{B^0_{p,q}} |log h|^{1-1/q} ||g||^2_{L^{2p*}}
  double div_term = 0.0;  ///< ||div a||_inf dx^{2d} sum K_h |g_i - g_j|^2
};

inline CommutatorRhs commutator_rhs(const VectorField &a, const ScalarField &g, double h, double p, double q) {
  detail::require_same(a, g);
  if (!(p > 1.0))
    throw Error("commutator bound needs p > 1");
  double pstar = std::isinf(p) ? 1.0 : p / (p - 1.0);
  CommutatorRhs r;
  double gnorm = lp_norm(g, 2.0 * pstar);
  r.grad_term = gradient_besov_norm(a, p, q) * std::pow(std::abs(std::log(h)), 1.0 - 1.0 / q) * gnorm * gnorm;
  LogKernel k(g.grid(), h);
  const double cell = g.grid().cell_volume();
  r.div_term = lp_norm(spectral_divergence(a), kInf) * cell * cell * pair_sum_p2(g, k);
  return r;
}

struct CommutatorPoint {
  double h = 0.0;
  double lhs = 0.0;
  double control = 0.0;
  double rhs_grad_term = 0.0;
  double rhs_div_term = 0.0;
};

struct CommutatorReport {
  std::vector<CommutatorPoint> points;
  LineFit fit;         ///< log|lhs| against log|log h|
  LineFit control_fit; ///< log(control) against log|log h|
};

/// Ladder sweep with both regressions. Needs at least four ladder points.
inline CommutatorReport scaling_regression(const VectorField &a, const ScalarField &g, const std::vector<double> &hs,
                                           double p = 2.0, double q = 2.0, std::uint64_t seed = 0) {
  if (hs.size() < 4)
    throw Error("regression needs at least 4 ladder points");
  CommutatorReport rep;
  auto control = commutator_control(a, g, hs, seed);
  std::vector<double> x, y, yc;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    CommutatorPoint pt;
    pt.h = hs[i];
    pt.lhs = commutator_lhs(a, g, hs[i]);
    pt.control = control[i];
    auto rhs = commutator_rhs(a, g, hs[i], p, q);
    pt.rhs_grad_term = rhs.grad_term;
    pt.rhs_div_term = rhs.div_term;
    rep.points.push_back(pt);
    x.push_back(std::abs(std::log(hs[i])));
    y.push_back(pt.lhs);
    yc.push_back(pt.control);
  }
  rep.fit = fit_loglog(x, y);
  rep.control_fit = fit_loglog(x, yc);
  return rep;
}

struct DiscreteCommutator {
  double value = 0.0; ///< (1/dx) sum s_ij (K_{i-[1]_k-j} - K_{i-j})(a_ik - a_jk)(f(u_i) - f(u_j))
  double proxy = 0.0; ///< sum grad K_h(x_i - x_j) . (a_i - a_j) F(u_i, u_j)
  /// -value / proxy: the backward difference approximates -grad K.
  double ratio() const { return proxy != 0.0 ? -value / proxy : 0.0; }
};

inline DiscreteCommutator discrete_commutator(const VectorField &a, const ScalarField &u, const FluxLaw &f, double h) {
  detail::require_same(a, u);
  const GridSpec &g = u.grid();
  LogKernel k(g, h);
  const auto &K = k.periodic();
  std::vector<std::vector<double>> G;
  for (int c = 0; c < g.d(); ++c)
    G.push_back(k.periodic_gradient(c));
  const std::size_t N = g.size();
  std::vector<double> fu(N);
  for (std::size_t l = 0; l < N; ++l)
    fu[l] = f.f(u[l]);
  DiscreteCommutator out;
  for (std::size_t i = 0; i < N; ++i) {
    Index ii = g.index(i);
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j)
        continue;
      Index jj = g.index(j);
      int ox = ii[0] - jj[0], oy = g.d() == 2 ? ii[1] - jj[1] : 0;
      std::size_t o = g.linear({g.wrap(ox), g.wrap(oy)});
      double s = sign0(u[i] - u[j]);
      double df = fu[i] - fu[j];
      for (int c = 0; c < g.d(); ++c) {
        int bx = ox - (c == 0), by = oy - (c == 1);
        std::size_t ob = g.linear({g.wrap(bx), g.d() == 2 ? g.wrap(by) : 0});
        double da = a(i, c) - a(j, c);
        out.value += s * (K[ob] - K[o]) * da * df;
        out.proxy += G[c][o] * da * s * df;
      }
    }
  }
  out.value /= g.dx();
  return out;
}

} // namespace roughflow
