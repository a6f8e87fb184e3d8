#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "roughflow/kernel.hpp"

using namespace roughflow;

namespace {

// Independent cutoff and kernel, written out again for the oracles.
double phi_ref(double r) {
  if (r <= 1.0)
    return 1.0;
  if (r >= 2.0)
    return 0.0;
  double t = r - 1.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double kernel_ref(int d, double h, double r) { return phi_ref(r) / std::pow(r + h, d); }

// Full double loop over all node pairs and all periodic images.
double brute_seminorm(const ScalarField &u, double alpha, double p, double theta) {
  const GridSpec &g = u.grid();
  const int n = g.n();
  double best = 0.0;
  for (int m = 1; m < 40; ++m) {
    double h = std::ldexp(1.0, -m);
    if (h < std::pow(g.dx(), alpha) * (1 - 1e-12))
      break;
    double s = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a)
      for (std::size_t b = 0; b < u.size(); ++b) {
        Index ia = g.index(a), ib = g.index(b);
        double w = 0.0;
        for (int zx = -4; zx <= 4; ++zx)
          for (int zy = (g.d() == 2 ? -4 : 0); zy <= (g.d() == 2 ? 4 : 0); ++zy) {
            double x = (ia[0] - ib[0] + zx * n) * g.dx();
            double y = g.d() == 2 ? (ia[1] - ib[1] + zy * n) * g.dx() : 0.0;
            w += kernel_ref(g.d(), h, std::hypot(x, y));
          }
        s += w * std::pow(std::abs(u[a] - u[b]), p);
      }
    double v = std::pow(std::pow(std::abs(std::log(h)), -theta) * std::pow(g.cell_volume(), 2) * s, 1.0 / p);
    best = std::max(best, v);
  }
  return best;
}

ScalarField noise(GridSpec g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ScalarField u(g);
  for (std::size_t l = 0; l < u.size(); ++l)
    u[l] = nd(rng);
  return u;
}

} // namespace

TEST(Kernel, PointValues) {
  EXPECT_DOUBLE_EQ(kernel_eval(1, 0.25, {0.0, 0.0}), 4.0);
  EXPECT_DOUBLE_EQ(kernel_eval(2, 0.25, {0.0, 0.0}), 16.0);
  EXPECT_EQ(kernel_eval(1, 0.25, {2.0, 0.0}), 0.0);
  EXPECT_EQ(kernel_eval(2, 0.25, {1.5, 1.5}), 0.0);
  EXPECT_NEAR(kernel_eval(1, 0.25, {0.5, 0.0}), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(kernel_eval(1, 0.25, {-0.5, 0.0}), 4.0 / 3.0, 1e-15);
}

TEST(Kernel, GradientIsTrueDerivative) {
  auto g0 = grad_kernel_eval(1, 0.25, {0.0, 0.0});
  EXPECT_EQ(g0[0], 0.0);
  EXPECT_EQ(grad_kernel_eval(2, 0.25, {2.5, 0.0})[0], 0.0);
  // Inside the unit ball: d/dx (|x| + h)^{-1} = -sign(x) / (|x| + h)^2.
  EXPECT_NEAR(grad_kernel_eval(1, 0.25, {0.5, 0.0})[0], -16.0 / 9.0, 1e-14);
  EXPECT_NEAR(grad_kernel_eval(1, 0.25, {-0.5, 0.0})[0], 16.0 / 9.0, 1e-14);
  // Central differences everywhere in 2D, including the cutoff annulus.
  for (double h : {0.5, 0.1, 0.01})
    for (auto x : std::vector<std::array<double, 2>>{{0.3, 0.1}, {-0.7, 0.9}, {1.2, -0.4}, {0.1, 1.7}}) {
      auto gr = grad_kernel_eval(2, h, x);
      double e = 1e-6;
      double gx = (kernel_eval(2, h, {x[0] + e, x[1]}) - kernel_eval(2, h, {x[0] - e, x[1]})) / (2 * e);
      double gy = (kernel_eval(2, h, {x[0], x[1] + e}) - kernel_eval(2, h, {x[0], x[1] - e})) / (2 * e);
      EXPECT_NEAR(gr[0], gx, 1e-6 * (1 + std::abs(gx)));
      EXPECT_NEAR(gr[1], gy, 1e-6 * (1 + std::abs(gy)));
      auto gm = grad_kernel_eval(2, h, {-x[0], -x[1]});
      EXPECT_EQ(gm[0], -gr[0]);
      EXPECT_EQ(gm[1], -gr[1]);
    }
}

TEST(Kernel, LatticeTable) {
  GridSpec g(2, 16, 0.1);
  LogKernel k(g, 0.125);
  EXPECT_DOUBLE_EQ(k.table({0, 0}), 64.0);
  EXPECT_EQ(k.table({40, 0}), 0.0);
  for (int a = -5; a <= 5; ++a)
    for (int b = -5; b <= 5; ++b) {
      EXPECT_GE(k.table({a, b}), 0.0);
      EXPECT_EQ(k.table({a, b}), k.table({-a, -b}));
    }
  double raw = 0.0;
  for (int a = -40; a <= 40; ++a)
    for (int b = -40; b <= 40; ++b)
      raw += k.table({a, b});
  EXPECT_NEAR(k.table_sum(), raw, 1e-10 * raw);
  EXPECT_THROW(LogKernel(g, 0.7), Error);
}

TEST(KernelMass, LogScalingAndBounds) {
  double prev = 0.0;
  double lo = 1e300, hi = 0.0;
  for (int m = 12; m >= 2; --m) {
    double h = std::ldexp(1.0, -m);
    double mass = kernel_mass(1, h);
    EXPECT_GE(mass, 2.0 * std::log((1 + h) / h) * (1 - 1e-12));
    if (prev > 0.0)
      EXPECT_LT(mass, prev);
    prev = mass;
    double ratio = mass / std::abs(std::log(h));
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    double m2 = kernel_mass(2, h);
    EXPECT_GT(m2, 0.0);
  }
  EXPECT_GT(lo, 1.0);
  EXPECT_LT(hi, 4.0);
  // Closed form inside the unit ball for d = 1: 2 log((1 + h) / h), plus the
  // annulus contribution, which lies between 0 and 2 log((2 + h) / (1 + h)).
  double h = 0.01;
  double inner = 2.0 * std::log((1 + h) / h);
  EXPECT_LE(kernel_mass(1, h), inner + 2.0 * std::log((2 + h) / (1 + h)));
}

TEST(Ladder, Dyadic) {
  auto p = SemiNormParams::for_grid(GridSpec(1, 256, 0.1), 0.5, 1.0, 0.5);
  ASSERT_EQ(p.h_set.size(), 4u);
  EXPECT_EQ(p.h_set.front(), 0.5);
  EXPECT_EQ(p.h_set.back(), 0.0625);
  SemiNormParams empty{0.5, 1.0, 0.5, {}};
  EXPECT_THROW(discrete_seminorm(ScalarField(GridSpec(1, 8, 0.1)), empty), Error);
}

TEST(DiscreteSeminorm, ConstantsAndShifts) {
  GridSpec g(1, 64, 0.1);
  auto p = SemiNormParams::for_grid(g, 0.5, 1.0, 0.5);
  EXPECT_EQ(discrete_seminorm(ScalarField(g, 3.0), p), 0.0);
  auto u = noise(g, 1);
  ScalarField v = u;
  v += 7.0;
  EXPECT_NEAR(discrete_seminorm(u, p), discrete_seminorm(v, p), 1e-12 * discrete_seminorm(u, p));
  EXPECT_NEAR(discrete_seminorm(-2.5 * u, p), 2.5 * discrete_seminorm(u, p), 1e-12 * discrete_seminorm(u, p));
  auto p2 = SemiNormParams::for_grid(g, 0.5, 2.0, 0.5);
  EXPECT_NEAR(discrete_seminorm(-2.5 * u, p2), 2.5 * discrete_seminorm(u, p2), 1e-10 * discrete_seminorm(u, p2));
}

TEST(DiscreteSeminorm, HalfIndicatorMatchesBruteForce) {
  GridSpec g(1, 8, 0.1);
  ScalarField u(g);
  for (int i = 0; i < 4; ++i)
    u[i] = 1.0;
  auto p = SemiNormParams::for_grid(g, 0.5, 1.0, 0.5);
  double ref = brute_seminorm(u, 0.5, 1.0, 0.5);
  EXPECT_NEAR(discrete_seminorm(u, p), ref, 1e-12 * ref);
}

TEST(DiscreteSeminorm, SmallGridsMatchBruteForce) {
  for (int d : {1, 2})
    for (int n : {4, 8, 16})
      for (double pe : {1.0, 1.5, 2.0}) {
        GridSpec g(d, n, 0.1);
        auto u = noise(g, 100 + n + d);
        auto params = SemiNormParams::for_grid(g, 1.0, pe, 0.5);
        double ref = brute_seminorm(u, 1.0, pe, 0.5);
        EXPECT_NEAR(discrete_seminorm(u, params), ref, 1e-12 * ref) << d << " " << n << " " << pe;
      }
}

TEST(DiscreteSeminorm, ThetaOneBoundedByLp) {
  double worst = 0.0;
  for (int d : {1, 2})
    for (int n : (d == 1 ? std::vector<int>{64, 256, 1024} : std::vector<int>{16, 32, 64})) {
      GridSpec g(d, n, 0.1);
      for (int s = 0; s < 3; ++s) {
        auto u = noise(g, 7 * n + s);
        auto params = SemiNormParams::for_grid(g, 1.0, 1.0, 1.0);
        worst = std::max(worst, discrete_seminorm(u, params) / lp_norm(u, 1.0));
      }
    }
  // |u_i - u_j| <= |u_i| + |u_j| and sum K ~ |log h| give the bound
  // 2 * max_h (table mass * dx^d / |log h|).
  EXPECT_LT(worst, 2.0 * 4.0 * 2.0);
}

TEST(ContinuousSeminorm, ComparableToDiscrete) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    int d = trial % 2 ? 2 : 1;
    GridSpec g(d, d == 1 ? 64 : 16, 0.1);
    auto u = noise(g, 300 + trial);
    double c = continuous_seminorm(u, 1.0, 0.5);
    double dsc = discrete_seminorm(u, SemiNormParams::for_grid(g, 1.0, 1.0, 0.5));
    EXPECT_GT(c / dsc, 0.25);
    EXPECT_LT(c / dsc, 4.0);
    EXPECT_EQ(continuous_seminorm(ScalarField(g, 2.0), 1.0, 0.5), 0.0);
  }
}

TEST(ContinuousSeminorm, CellWeightsIntegrateKernelTent) {
  // Sum of cell-pair weights over offsets equals dx^d * integral of K_h.
  for (int d : {1, 2}) {
    GridSpec g(d, d == 1 ? 64 : 16, 0.1);
    double h = 0.125;
    auto w = cell_pair_weights(g, h);
    double s = 0.0;
    for (double v : w)
      s += v;
    EXPECT_NEAR(s, g.cell_volume() * kernel_mass(d, h), 1e-6 * s);
  }
}

TEST(ContinuousSeminorm, DecreasingInTheta) {
  GridSpec g(1, 64, 0.1);
  auto u = noise(g, 5);
  double h_max = std::exp(-1.0);
  double prev = 1e300;
  for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double v = continuous_seminorm(u, 1.0, theta, h_max);
    EXPECT_LE(v, prev * (1 + 1e-14));
    prev = v;
  }
}

TEST(FourierEquivalence, ConstantField) {
  GridSpec g(1, 64, 0.1);
  auto r = fourier_equiv_check(ScalarField(g, 2.0), 0.5);
  EXPECT_NEAR(r.lhs, 4.0, 1e-12);
  EXPECT_NEAR(r.ratio, std::pow(std::log(2.0), 0.5), 1e-12);
}

TEST(FourierEquivalence, SingleModesFinite) {
  GridSpec g(1, 256, 0.1);
  for (int m : {1, 2, 4, 8, 16, 32, 64}) {
    auto u = ScalarField::sample(g, [m](double x, double) { return std::cos(2 * std::numbers::pi * m * x); });
    auto r = fourier_equiv_check(u, 0.5);
    EXPECT_TRUE(std::isfinite(r.ratio));
    EXPECT_GT(r.ratio, 0.1);
    EXPECT_LT(r.ratio, 10.0);
  }
}

TEST(Mollification, DefectShrinksWithScale) {
  GridSpec g(1, 256, 0.1);
  auto u = ScalarField::sample(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
  EXPECT_LT(mollification_defect(u, 1.0 / 64), mollification_defect(u, 0.25));
  EXPECT_NEAR(mollification_defect(ScalarField(g, 3.0), 0.1), 0.0, 1e-12);
}
