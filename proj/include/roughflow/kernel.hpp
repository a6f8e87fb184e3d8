#pragma once

// The log-scale kernel K_h(z) = phi(|z|) / (|z| + h)^d, its gradient, and the
// semi-norms built on it.
//
// All lattice sums run over the periodic torus: a pair (i, j) is weighted by
// the sum of K_h over every image of x_i - x_j inside the support |z| <= 2.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roughflow/fft.hpp"
#include "roughflow/grid.hpp"

namespace roughflow {

/// C^2 smootherstep t^3 (10 - 15 t + 6 t^2), clamped to [0, 1].
inline double smootherstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

inline double smootherstep_derivative(double t) {
  if (t <= 0.0 || t >= 1.0)
    return 0.0;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

/// Radial cutoff: 1 on [0,1], smootherstep decay on [1,2], 0 beyond.
inline double cutoff(double r) { return 1.0 - smootherstep(r - 1.0); }
inline double cutoff_derivative(double r) { return -smootherstep_derivative(r - 1.0); }

inline constexpr double kKernelSupport = 2.0;

/// Radial profile phi(r) / (r + h)^d.
inline double kernel_profile(int d, double h, double r) {
  if (r >= kKernelSupport)
    return 0.0;
  return cutoff(r) / std::pow(r + h, d);
}

/// d/dr of the radial profile.
inline double kernel_profile_derivative(int d, double h, double r) {
  if (r >= kKernelSupport)
    return 0.0;
  return cutoff_derivative(r) / std::pow(r + h, d) - d * cutoff(r) / std::pow(r + h, d + 1);
}

/// K_h and its lattice tables on one grid.
class LogKernel {
public:
  LogKernel(GridSpec grid, double h) : grid_(grid), h_(h) {
    if (!(h > 0.0 && h <= 0.5 + 1e-15))
      throw Error("kernel scale h must lie in (0, 1/2]");
    build_periodic();
  }

  double h() const { return h_; }
  const GridSpec &grid() const { return grid_; }

  /// K_h at a point offset x (only the first d entries are used).
  double eval(std::array<double, 2> x) const {
    return kernel_profile(grid_.d(), h_, radius(x));
  }

  /// Exact gradient of K_h; zero at the origin (odd extension).
  std::array<double, 2> grad(std::array<double, 2> x) const {
    double r = radius(x);
    if (r == 0.0 || r >= kKernelSupport)
      return {0.0, 0.0};
    double dr = kernel_profile_derivative(grid_.d(), h_, r);
    return {dr * x[0] / r, grid_.d() == 2 ? dr * x[1] / r : 0.0};
  }

  /// Lattice value K^h_o = K_h(o dx), zero outside the support.
  double table(const Offset &o) const {
    return eval({o[0] * grid_.dx(), grid_.d() == 2 ? o[1] * grid_.dx() : 0.0});
  }

  /// Periodised table indexed like a lattice field: entry at linear index of
  /// the wrapped offset o holds the sum of K^h over all images of o.
  const std::vector<double> &periodic() const { return periodic_; }

  /// Periodised gradient table for component `axis`.
  std::vector<double> periodic_gradient(int axis) const {
    return periodise([&](std::array<double, 2> x) { return grad(x)[axis]; });
  }

  /// Sum over the periodised table (equals sum of the raw table).
  double table_sum() const { return table_sum_; }

  /// Forward FFT of the periodised table (cached).
  const Spectrum &periodic_hat() const {
    if (!periodic_hat_)
      periodic_hat_ = fft_forward(grid_, periodic_);
    return *periodic_hat_;
  }

  /// Sums fn over every image of each wrapped offset inside the support.
  template <class Fn>
  std::vector<double> periodise(Fn &&fn) const {
    const int n = grid_.n();
    const double dx = grid_.dx();
    const int images = int(std::ceil(kKernelSupport)) + 1;
    std::vector<double> out(grid_.size(), 0.0);
    for (std::size_t l = 0; l < out.size(); ++l) {
      Offset base = grid_.minimal_image(grid_.index(l));
      double s = 0.0;
      if (grid_.d() == 1) {
        for (int z = -images; z <= images; ++z) {
          double x = (base[0] + z * n) * dx;
          if (std::abs(x) < kKernelSupport)
            s += fn({x, 0.0});
        }
      } else {
        for (int zx = -images; zx <= images; ++zx)
          for (int zy = -images; zy <= images; ++zy) {
            double x = (base[0] + zx * n) * dx, y = (base[1] + zy * n) * dx;
            if (x * x + y * y < kKernelSupport * kKernelSupport)
              s += fn({x, y});
          }
      }
      out[l] = s;
    }
    return out;
  }

private:
  double radius(std::array<double, 2> x) const {
    return grid_.d() == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
  }

  void build_periodic() {
    periodic_ = periodise([&](std::array<double, 2> x) { return eval(x); });
    table_sum_ = 0.0;
    for (double v : periodic_)
      table_sum_ += v;
  }

  GridSpec grid_;
  double h_;
  std::vector<double> periodic_;
  double table_sum_ = 0.0;
  mutable std::optional<Spectrum> periodic_hat_;
};

/// Point evaluation helpers with an explicit dimension.
inline double kernel_eval(int d, double h, std::array<double, 2> x) {
  double r = d == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
  return kernel_profile(d, h, r);
}

inline std::array<double, 2> grad_kernel_eval(int d, double h, std::array<double, 2> x) {
  double r = d == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
  if (r == 0.0 || r >= kKernelSupport)
    return {0.0, 0.0};
  double dr = kernel_profile_derivative(d, h, r);
  return {dr * x[0] / r, d == 2 ? dr * x[1] / r : 0.0};
}

/// Integral of K_h over R^d (support B(0,2)), by adaptive quadrature on
/// geometric sub-intervals of the radius.
inline double kernel_mass(int d, double h) {
  if (!(h > 0.0 && h <= 0.5 + 1e-15))
    throw Error("kernel scale h must lie in (0, 1/2]");
  if (d != 1 && d != 2)
    throw Error("kernel mass defined for d = 1, 2");
  auto radial = [d, h](double r) {
    double k = kernel_profile(d, h, r);
    return d == 1 ? 2.0 * k : 2.0 * std::numbers::pi * r * k;
  };
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> cuts{0.0};
  for (double r = h; r < 1.0; r *= 2.0)
    cuts.push_back(r);
  cuts.push_back(1.0);
  cuts.push_back(2.0);
  double total = 0.0;
  for (std::size_t s = 1; s < cuts.size(); ++s)
    total += gauss_kronrod<double, 31>::integrate(radial, cuts[s - 1], cuts[s], 8, 1e-13);
  return total;
}

/// Dyadic ladder {2^-m} inside [h_min, h_max], largest first.
inline std::vector<double> dyadic_ladder(double h_max, double h_min) {
  std::vector<double> out;
  for (int m = 1; m < 64; ++m) {
    double h = std::ldexp(1.0, -m);
    if (h < h_min * (1.0 - 1e-12))
      break;
    if (h <= h_max * (1.0 + 1e-12))
      out.push_back(h);
  }
  return out;
}

/// Parameters of the discrete semi-norm ||u||_{alpha,p,theta}.
struct SemiNormParams {
  double alpha = 0.5;
  double p = 1.0;
  double theta = 0.5;
  std::vector<double> h_set;

  /// Dyadic ladder dx^alpha <= h <= 1/2 for the given grid.
  static SemiNormParams for_grid(const GridSpec &g, double alpha, double p, double theta) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw Error("alpha must lie in (0, 1]");
    SemiNormParams out{alpha, p, theta, dyadic_ladder(0.5, std::pow(g.dx(), alpha))};
    return out;
  }

  void validate(const GridSpec &g) const {
    if (h_set.empty())
      throw Error("semi-norm h ladder is empty");
    if (!(p >= 1.0))
      throw Error("semi-norm exponent p must be >= 1");
    if (!(theta >= 0.0 && theta <= 1.0))
      throw Error("theta must lie in [0, 1]");
    const double floor = std::pow(g.dx(), alpha);
    for (std::size_t k = 0; k < h_set.size(); ++k) {
      if (h_set[k] > 0.5 * (1 + 1e-12) || h_set[k] < floor * (1 - 1e-12))
        throw Error("semi-norm ladder entry outside [dx^alpha, 1/2]");
      if (k > 0 && !(h_set[k] < h_set[k - 1]))
        throw Error("semi-norm ladder must be decreasing");
    }
  }
};

struct LadderPoint {
  double h;
  double value;
};

struct SemiNormReport {
  std::vector<LadderPoint> ladder;
  double sup = 0.0;
};

/// Raw pair sum sum_{i,j} w_{i-j} |u_i - u_j|^p with a periodised weight
/// table (no measure factors).
inline double pair_sum(const ScalarField &u, std::span<const double> weights, double p) {
  const GridSpec &g = u.grid();
  const std::size_t N = u.size();
  const auto vals = u.values();
  double total = 0.0;
  if (g.d() == 1) {
    const int n = g.n();
    for (int o = 1; o < n; ++o) {
      const double w = weights[o];
      if (w == 0.0)
        continue;
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        int j = i + o;
        if (j >= n)
          j -= n;
        double diff = std::abs(vals[i] - vals[j]);
        s += p == 1.0 ? diff : (p == 2.0 ? diff * diff : std::pow(diff, p));
      }
      total += w * s;
    }
    return total;
  }
  for (std::size_t ol = 1; ol < N; ++ol) {
    const double w = weights[ol];
    if (w == 0.0)
      continue;
    const Offset o = g.index(ol);
    double s = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
      double diff = std::abs(vals[l] - vals[g.displaced(l, o)]);
      s += p == 1.0 ? diff : (p == 2.0 ? diff * diff : std::pow(diff, p));
    }
    total += w * s;
  }
  return total;
}

/// p = 2 pair sum through the expansion
/// sum K_{i-j}|u_i-u_j|^2 = 2 sum_i u_i^2 (K*1)_i - 2 sum_i u_i (K*u)_i.
inline double pair_sum_p2(const ScalarField &u, const LogKernel &k) {
  const auto vals = u.values();
  auto conv = circular_convolve(u.grid(), k.periodic_hat(), vals);
  const double k0 = k.periodic()[0];
  double s2 = 0.0, cross = 0.0;
  for (std::size_t l = 0; l < vals.size(); ++l) {
    s2 += vals[l] * vals[l];
    cross += vals[l] * conv[l];
  }
  // The o = 0 entry contributes nothing to the pair sum; remove it from both
  // terms before they cancel.
  double total = 2.0 * s2 * (k.table_sum() - k0) - 2.0 * (cross - k0 * s2);
  return std::max(total, 0.0);
}

/// ( |log h|^{-theta} dx^{2d} sum_{i,j} K^h_{i-j} |u_i - u_j|^p )^{1/p} at one h.
inline double seminorm_at(const ScalarField &u, const LogKernel &k, double p, double theta) {
  const double cell = u.grid().cell_volume();
  double raw = p == 2.0 ? pair_sum_p2(u, k) : pair_sum(u, k.periodic(), p);
  double v = std::pow(std::abs(std::log(k.h())), -theta) * cell * cell * raw;
  return std::pow(v, 1.0 / p);
}

/// Discrete log-scale semi-norm: sup over the ladder of seminorm_at.
inline SemiNormReport discrete_seminorm_report(const ScalarField &u, const SemiNormParams &params) {
  params.validate(u.grid());
  detail::require_finite(u);
  SemiNormReport rep;
  for (double h : params.h_set) {
    LogKernel k(u.grid(), h);
    double v = seminorm_at(u, k, params.p, params.theta);
    rep.ladder.push_back({h, v});
    rep.sup = std::max(rep.sup, v);
  }
  return rep;
}

inline double discrete_seminorm(const ScalarField &u, const SemiNormParams &params) {
  return discrete_seminorm_report(u, params).sup;
}

/// Double integral of K_h |u(x) - u(y)|^p for the piecewise-constant
/// extension of u, using exact cell-pair weights
/// W(o) = int K_h(z) Lambda(z - o dx) dz with Lambda the tent of two cells.
inline std::vector<double> cell_pair_weights(const GridSpec &g, double h) {
  using Gauss = boost::math::quadrature::gauss<double, 8>;
  const auto &abscissa = Gauss::abscissa();
  const auto &weight = Gauss::weights();
  // Nodes on [-1, 1] are +-abscissa; build 16 nodes on [0, 1] per half.
  std::vector<double> t, w;
  for (std::size_t q = 0; q < abscissa.size(); ++q) {
    for (int s : {-1, 1}) {
      if (abscissa[q] == 0.0 && s == 1)
        continue;
      t.push_back(0.5 * (1.0 + s * abscissa[q]));
      w.push_back(0.5 * weight[q]);
    }
  }
  const double dx = g.dx();
  const int d = g.d();
  LogKernel k(g, h);
  // For each axis the tent (dx - |s|) on [-dx, dx] is integrated on the two
  // halves separately.
  std::vector<double> nodes, node_w;
  for (int half : {-1, 1})
    for (std::size_t q = 0; q < t.size(); ++q) {
      double s = half * t[q] * dx;
      nodes.push_back(s);
      node_w.push_back(w[q] * dx * (dx - std::abs(s)));
    }
  return k.periodise([&](std::array<double, 2> z) {
    double acc = 0.0;
    if (d == 1) {
      for (std::size_t a = 0; a < nodes.size(); ++a)
        acc += node_w[a] * kernel_eval(1, h, {z[0] + nodes[a], 0.0});
    } else {
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = 0; b < nodes.size(); ++b)
          acc += node_w[a] * node_w[b] * kernel_eval(2, h, {z[0] + nodes[a], z[1] + nodes[b]});
    }
    return acc;
  });
}

/// Continuous semi-norm ||u||_{p,theta} of the piecewise-constant extension,
/// sup over the dyadic ladder dx <= h <= h_max.
inline SemiNormReport continuous_seminorm_report(const ScalarField &u, double p, double theta,
                                                 double h_max = 0.5) {
  detail::require_finite(u);
  SemiNormReport rep;
  for (double h : dyadic_ladder(h_max, u.grid().dx())) {
    // Cell weights include the image sum but were computed on the window
    // |z| < 2 around each node centre; cells straddling the support edge are
    // fully accounted for by the cutoff's smooth decay.
    auto weights = cell_pair_weights(u.grid(), h);
    double raw = pair_sum(u, weights, p);
    double v = std::pow(std::pow(std::abs(std::log(h)), -theta) * raw, 1.0 / p);
    rep.ladder.push_back({h, v});
    rep.sup = std::max(rep.sup, v);
  }
  return rep;
}

inline double continuous_seminorm(const ScalarField &u, double p, double theta, double h_max = 0.5) {
  return continuous_seminorm_report(u, p, theta, h_max).sup;
}

/// Normalised lattice mollification K-bar_h * u with K-bar summing to one.
inline ScalarField mollify(const ScalarField &u, const LogKernel &k) {
  auto conv = circular_convolve(u.grid(), k.periodic_hat(), u.values());
  const double inv = 1.0 / k.table_sum();
  for (auto &v : conv)
    v *= inv;
  return ScalarField(u.grid(), std::move(conv));
}

/// l^1 distance between u and its normalised mollification.
inline double mollification_defect(const ScalarField &u, double h) {
  LogKernel k(u.grid(), h);
  return lp_norm(u - mollify(u, k), 1.0);
}

struct FourierEquivalence {
  double lhs = 0.0; ///< sup_h seminorm^2 + ||u||_2^2
  double rhs = 0.0; ///< sup_h Fourier-side weighted energy
  double ratio = 0.0;
};

/// p = 2 comparison of the semi-norm with its Fourier characterisation.
/// Frequencies are angular, |xi| = 2 pi |m|; the mean mode carries only the
/// "+1" floor.
inline FourierEquivalence fourier_equiv_check(const ScalarField &u, double theta = 0.5) {
  detail::require_finite(u);
  const GridSpec &g = u.grid();
  const auto ladder = dyadic_ladder(0.5, g.dx());
  FourierEquivalence out;
  double semi_sq = 0.0;
  for (double h : ladder) {
    LogKernel k(g, h);
    double v = seminorm_at(u, k, 2.0, theta);
    semi_sq = std::max(semi_sq, v * v);
  }
  double l2 = lp_norm(u, 2.0);
  out.lhs = semi_sq + l2 * l2;

  Spectrum c = fft_forward(u);
  const double N = double(u.size());
  std::vector<double> energy(c.size());
  for (std::size_t l = 0; l < c.size(); ++l)
    energy[l] = std::norm(c[l]) / (N * N);
  for (double h : ladder) {
    double acc = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) {
      double xi = 2.0 * std::numbers::pi * mode_radius(g, l);
      double logterm = xi > 0.0 ? std::abs(std::log(1.0 / xi + h)) : 0.0;
      acc += (logterm + 1.0) * energy[l];
    }
    acc *= std::pow(std::abs(std::log(h)), -theta);
    out.rhs = std::max(out.rhs, acc);
  }
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
  return out;
}

} // namespace roughflow
