#pragma once

// Littlewood-Paley blocks, Besov norms and the delocalised convolution
// integral int_{h0}^1 ||L_r * u||_p dr / r.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "roughflow/fft.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/kernel.hpp"

namespace roughflow {

/// Radial bump: 1 on [0,1], 0 beyond 2 (same C^2 profile as the cutoff).
inline double lp_bump(double r) { return cutoff(r); }

/// Dyadic partition of unity on the lattice frequencies. Frequencies are
/// counted in cycles per unit length (mode radius |m|).
class DyadicPartition {
public:
  explicit DyadicPartition(const GridSpec &g) : grid_(g) {
    double top = (g.n() / 2) * std::sqrt(double(g.d()));
    k_max_ = std::max(0, int(std::ceil(std::log2(top) - 1e-12)));
  }

  int k_max() const { return k_max_; }
  int blocks() const { return k_max_ + 1; }
  const GridSpec &grid() const { return grid_; }

  /// Psi-hat_k at mode radius r.
  double multiplier(int k, double r) const {
    if (k == 0)
      return lp_bump(r);
    return lp_bump(r / std::ldexp(1.0, k)) - lp_bump(r / std::ldexp(1.0, k - 1));
  }

private:
  GridSpec grid_;
  int k_max_ = 0;
};

/// U_k = Psi_k * u for k = 0..K_max.
inline std::vector<ScalarField> lp_blocks(const ScalarField &u, const DyadicPartition &part) {
  detail::require_finite(u);
  const GridSpec &g = u.grid();
  if (!g.same_lattice(part.grid()))
    throw Error("partition built for a different grid");
  Spectrum s = fft_forward(u);
  std::vector<ScalarField> out;
  out.reserve(part.blocks());
  for (int k = 0; k < part.blocks(); ++k) {
    Spectrum sk(s.size());
    for (std::size_t l = 0; l < s.size(); ++l)
      sk[l] = s[l] * part.multiplier(k, mode_radius(g, l));
    out.push_back(inverse_field(g, std::move(sk)));
  }
  return out;
}

inline std::vector<ScalarField> lp_blocks(const ScalarField &u) {
  return lp_blocks(u, DyadicPartition(u.grid()));
}

/// l^q over k of 2^{sk} * ||U_k||_{L^p}; q may be infinite.
inline double besov_from_block_norms(const std::vector<double> &norms, double s, double q) {
  if (!(q >= 1.0))
    throw Error("Besov exponent q must be >= 1");
  double acc = 0.0;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    double v = std::pow(2.0, s * double(k)) * norms[k];
    acc = std::isinf(q) ? std::max(acc, v) : acc + std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

inline double besov_norm(const ScalarField &u, double s, double p, double q) {
  detail::require_exponent(p);
  std::vector<double> norms;
  for (const auto &b : lp_blocks(u))
    norms.push_back(lp_norm(b, p));
  return besov_from_block_norms(norms, s, q);
}

/// Forward-difference gradient of a scalar field, one component per axis.
inline VectorField discrete_gradient(const ScalarField &u) {
  const GridSpec &g = u.grid();
  std::vector<ScalarField> comps;
  for (int k = 0; k < g.d(); ++k) {
    ScalarField c(g);
    for (std::size_t l = 0; l < u.size(); ++l)
      c[l] = (u[g.displaced(l, unit_offset(k))] - u[l]) / g.dx();
    comps.push_back(std::move(c));
  }
  return VectorField(std::move(comps));
}

/// ||grad a||_{B^0_{p,q}}: the k-th block of the d x d matrix of forward
/// differences is measured by the L^p norm of its node-wise Frobenius norm.
inline double gradient_besov_norm(const VectorField &a, double p, double q) {
  const GridSpec &g = a.grid();
  DyadicPartition part(g);
  std::vector<ScalarField> frob(part.blocks(), ScalarField(g));
  for (int c = 0; c < a.d(); ++c) {
    VectorField grad = discrete_gradient(a.component(c));
    for (int k = 0; k < g.d(); ++k) {
      auto blocks = lp_blocks(grad.component(k), part);
      for (int b = 0; b < part.blocks(); ++b)
        for (std::size_t l = 0; l < g.size(); ++l)
          frob[b][l] += blocks[b][l] * blocks[b][l];
    }
  }
  std::vector<double> norms;
  for (auto &f : frob) {
    for (auto &v : f.raw())
      v = std::sqrt(v);
    norms.push_back(lp_norm(f, p));
  }
  return besov_from_block_norms(norms, 0.0, q);
}

struct BernsteinReport {
  int k = 0;
  double alpha = 0.0;
  double p = 2.0;
  double sobolev = 0.0; ///< ||U_k||_{W^{alpha,p}} (homogeneous)
  double lp = 0.0;      ///< ||U_k||_{L^p}
  double ratio = 0.0;   ///< sobolev / (2^{k alpha} lp), 0 for a zero block
};

/// Homogeneous Sobolev norm of order alpha = +-1 of a block. For p = 2 the
/// Fourier weight |2 pi m|^alpha is used; otherwise alpha = 1 is the L^p norm
/// of the spectral gradient and alpha = -1 that of grad Delta^{-1} U.
inline BernsteinReport bernstein_check(const ScalarField &block, int k, double alpha, double p) {
  if (alpha != 1.0 && alpha != -1.0)
    throw Error("Bernstein check supports alpha = 1 or -1");
  detail::require_exponent(p);
  const GridSpec &g = block.grid();
  BernsteinReport rep{k, alpha, p, 0.0, lp_norm(block, p), 0.0};
  if (rep.lp == 0.0)
    return rep;
  auto weight = [&](std::size_t l) {
    double xi = 2.0 * std::numbers::pi * mode_radius(g, l);
    if (xi == 0.0)
      return 0.0;
    return std::pow(xi, alpha);
  };
  if (p == 2.0) {
    rep.sobolev = lp_norm(fourier_multiply(block, weight), 2.0);
  } else {
    ScalarField mag(g);
    for (int axis = 0; axis < g.d(); ++axis) {
      ScalarField comp = fourier_multiply(block, [&](std::size_t l) {
        double xi2 = std::pow(2.0 * std::numbers::pi * mode_radius(g, l), 2);
        if (xi2 == 0.0 || is_nyquist(g, l))
          return 0.0;
        return alpha > 0 ? 1.0 : 1.0 / xi2;
      });
      comp = spectral_derivative(comp, axis);
      for (std::size_t l = 0; l < g.size(); ++l)
        mag[l] += comp[l] * comp[l];
    }
    for (auto &v : mag.raw())
      v = std::sqrt(v);
    rep.sobolev = lp_norm(mag, p);
  }
  rep.ratio = rep.sobolev / (std::pow(2.0, k * alpha) * rep.lp);
  return rep;
}

/// L = B - 2^d B(2 .) with B the normalised bump c_d (1 - |x|^2)^3_+.
/// Zero mean, support in the unit ball, W^{s,1} for every s < 1.
class MollifierL {
public:
  explicit MollifierL(int d, double s = 0.5) : d_(d), s_(s) {
    if (d != 1 && d != 2)
      throw Error("mollifier defined for d = 1, 2");
    c_ = d == 1 ? 35.0 / 32.0 : 4.0 / std::numbers::pi;
  }

  int d() const { return d_; }
  double smoothness() const { return s_; }
  double support() const { return 1.0; }

  double bump(double r) const {
    double t = 1.0 - r * r;
    return t > 0.0 ? c_ * t * t * t : 0.0;
  }

  double operator()(std::array<double, 2> x) const {
    double r = d_ == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    return bump(r) - std::pow(2.0, d_) * bump(2.0 * r);
  }

  /// L_r(x) = r^{-d} L(x / r).
  double scaled(double r, std::array<double, 2> x) const {
    return std::pow(r, -d_) * (*this)({x[0] / r, x[1] / r});
  }

  /// Periodised cell integrals of the bump B_rho = rho^{-d} B(. / rho),
  /// rescaled to sum exactly to one.
  std::vector<double> bump_weights(const GridSpec &g, double rho) const {
    if (g.d() != d_)
      throw Error("mollifier dimension does not match the grid");
    using Gauss = boost::math::quadrature::gauss<double, 8>;
    std::vector<double> t, w;
    for (std::size_t q = 0; q < Gauss::abscissa().size(); ++q)
      for (int s : {-1, 1}) {
        if (Gauss::abscissa()[q] == 0.0 && s == 1)
          continue;
        t.push_back(0.5 * s * Gauss::abscissa()[q]);
        w.push_back(0.5 * Gauss::weights()[q]);
      }
    const double dx = g.dx();
    const int sub = std::max(1, int(std::ceil(4.0 * dx / rho)));
    const double h = dx / sub;
    // Node offsets within the sub-cells, relative to the cell centre.
    std::vector<double> nodes, node_w;
    for (int a = 0; a < sub; ++a)
      for (std::size_t q = 0; q < t.size(); ++q) {
        nodes.push_back(-0.5 * dx + (a + 0.5) * h + t[q] * h);
        node_w.push_back(w[q] * h);
      }
    auto b = [&](double x, double y) {
      double r = (d_ == 1 ? std::abs(x) : std::hypot(x, y)) / rho;
      return std::pow(rho, -d_) * bump(r);
    };
    const int reach = int(std::ceil(rho / dx)) + 1;
    std::vector<double> out(g.size(), 0.0);
    if (d_ == 1) {
      for (int o = -reach; o <= reach; ++o) {
        double acc = 0.0;
        for (std::size_t a = 0; a < nodes.size(); ++a)
          acc += node_w[a] * b(o * dx + nodes[a], 0.0);
        out[g.wrap(o)] += acc;
      }
    } else {
      for (int ox = -reach; ox <= reach; ++ox)
        for (int oy = -reach; oy <= reach; ++oy) {
          double cx = ox * dx, cy = oy * dx;
          // Skip cells that cannot meet the support.
          double nx = std::max(0.0, std::abs(cx) - dx), ny = std::max(0.0, std::abs(cy) - dx);
          if (nx * nx + ny * ny >= rho * rho)
            continue;
          double acc = 0.0;
          for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t c = 0; c < nodes.size(); ++c)
              acc += node_w[a] * node_w[c] * b(cx + nodes[a], cy + nodes[c]);
          out[g.linear({g.wrap(ox), g.wrap(oy)})] += acc;
        }
    }
    double total = 0.0;
    for (double v : out)
      total += v;
    for (double &v : out)
      v /= total;
    return out;
  }

  /// Periodised cell integrals w_o of L_r, indexed like a field. Each bump is
  /// normalised separately so the weights sum to zero up to rounding.
  std::vector<double> cell_weights(const GridSpec &g, double r) const {
    auto outer = bump_weights(g, r);
    auto inner = bump_weights(g, 0.5 * r);
    for (std::size_t l = 0; l < outer.size(); ++l)
      outer[l] -= inner[l];
    return outer;
  }

  /// (L_r * u)_i = sum_o w_o u_{i-o}.
  ScalarField convolve(const ScalarField &u, double r) const {
    auto w = cell_weights(u.grid(), r);
    return ScalarField(u.grid(), circular_convolve(u.grid(), w, u.values()));
  }

private:
  int d_;
  double s_;
  double c_;
};

/// int_{h0}^1 ||L_r * u||_{L^p} dr / r by the midpoint rule in log r on the
/// dyadic cells [h0 2^m, h0 2^{m+1}] inside (0, 1].
inline double delocalized_conv_integral(const ScalarField &u, const MollifierL &L, double h0, double p) {
  detail::require_exponent(p);
  detail::require_finite(u);
  if (h0 < u.grid().dx() * (1.0 - 1e-12))
    throw Error("below resolution");
  if (!(h0 <= 0.5 * (1 + 1e-12)))
    throw Error("h0 must not exceed 1/2");
  double total = 0.0;
  for (int m = 0; h0 * std::ldexp(1.0, m + 1) <= 1.0 * (1 + 1e-12); ++m) {
    double r = h0 * std::ldexp(1.0, m) * std::numbers::sqrt2;
    total += std::numbers::ln2 * lp_norm(L.convolve(u, r), p);
  }
  return total;
}

} // namespace roughflow
