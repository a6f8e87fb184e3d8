#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roughflow/commutator.hpp"
#include "roughflow/forge.hpp"

using namespace roughflow;

namespace {

ScalarField random_field(GridSpec g, std::mt19937_64 &rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  ScalarField u(g);
  for (std::size_t l = 0; l < u.size(); ++l)
    u[l] = U(rng);
  return u;
}

VectorField random_velocity(GridSpec g, std::mt19937_64 &rng, double amp) {
  std::vector<ScalarField> c;
  for (int k = 0; k < g.d(); ++k)
    c.push_back(random_field(g, rng, -amp, amp));
  return VectorField(std::move(c));
}

// Periodised kernel value and gradient at a lattice offset, summed over
// torus images straight from the point formulas.
struct OracleKernel {
  GridSpec g;
  double h;

  double K(int ox, int oy) const {
    double s = 0.0;
    int zy_hi = g.d() == 2 ? 3 : 0;
    for (int zx = -3; zx <= 3; ++zx)
      for (int zy = -zy_hi; zy <= zy_hi; ++zy)
        s += kernel_eval(g.d(), h, {ox * g.dx() + zx, oy * g.dx() + zy});
    return s;
  }

  std::array<double, 2> grad(int ox, int oy) const {
    std::array<double, 2> s{0.0, 0.0};
    int zy_hi = g.d() == 2 ? 3 : 0;
    for (int zx = -3; zx <= 3; ++zx)
      for (int zy = -zy_hi; zy <= zy_hi; ++zy) {
        auto v = grad_kernel_eval(g.d(), h, {ox * g.dx() + zx, oy * g.dx() + zy});
        s[0] += v[0];
        s[1] += v[1];
      }
    return s;
  }
};

} // namespace

TEST(Kruzkov, BurgersValues) {
  auto f = FluxLaw::burgers();
  EXPECT_DOUBLE_EQ(kruzkov_F(f, 2.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(kruzkov_Gbar(f, 2.0, 1.0), 1.25);
  EXPECT_DOUBLE_EQ(kruzkov_F(f, 1.0, 2.0), 1.5);
  EXPECT_DOUBLE_EQ(kruzkov_F(f, 0.7, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(kruzkov_G(f, 0.7, 0.7), 0.0);
}

TEST(Kruzkov, IdentityFluxGivesDistance) {
  auto f = FluxLaw::linear();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int t = 0; t < 50; ++t) {
    double x = U(rng), y = U(rng);
    EXPECT_NEAR(kruzkov_F(f, x, y), std::abs(x - y), 1e-15);
  }
}

TEST(Kruzkov, Invariants) {
  auto f = FluxLaw::logistic(1.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 100; ++t) {
    double x = U(rng), y = U(rng);
    EXPECT_NEAR(kruzkov_F(f, x, y), kruzkov_F(f, y, x), 1e-15);
    // G + F = f(xi) sign(xi - zeta) and Gbar is the antisymmetric average.
    EXPECT_NEAR(kruzkov_G(f, x, y) + kruzkov_F(f, x, y), f.f(x) * sign0(x - y), 1e-15);
    EXPECT_NEAR(kruzkov_Gbar(f, x, y), -kruzkov_Gbar(f, y, x), 1e-15);
    EXPECT_NEAR(kruzkov_Gbar(f, x, y), 0.5 * (kruzkov_G(f, x, y) - kruzkov_G(f, y, x)), 1e-14);
  }
}

TEST(LevelSet, MatchesFluxDifference) {
  GridSpec g(1, 32, 0.01);
  std::mt19937_64 rng(5);
  auto u = random_field(g, rng, 0.0, 2.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < 32; i += 3)
    for (std::size_t j = 0; j < 32; j += 5)
      pairs.emplace_back(i, j);
  for (auto f : {FluxLaw::burgers(), FluxLaw::logistic(2.0), FluxLaw::piecewise_linear({0, 0.5, 1.2, 3}, {0, 1, 0.4, 2})}) {
    auto rep = level_set_check(f, u, pairs);
    EXPECT_EQ(rep.pairs, pairs.size());
    EXPECT_LT(rep.max_rel_error, 1e-12) << f.name();
  }
}

TEST(LevelSet, NegativeStateRejected) {
  GridSpec g(1, 4, 0.01);
  ScalarField u(g, std::vector<double>{0.1, -0.2, 0.3, 0.4});
  EXPECT_THROW(level_set_check(FluxLaw::burgers(), u, {{0, 1}}), Error);
}

TEST(CommutatorLhs, FftMatchesDirect) {
  std::mt19937_64 rng(6);
  for (int d : {1, 2}) {
    GridSpec g(d, 16, 0.01);
    auto a = random_velocity(g, rng, 1.0);
    auto u = random_field(g, rng, -1.0, 1.0);
    for (double h : {0.5, 0.125, 1.0 / 32}) {
      double fast = commutator_lhs(a, u, h), slow = commutator_lhs_direct(a, u, h);
      EXPECT_NEAR(fast, slow, 1e-10 * std::max(1.0, std::abs(slow))) << d << " " << h;
    }
  }
}

TEST(CommutatorLhs, DirectMatchesPointOracle) {
  std::mt19937_64 rng(7);
  GridSpec g(2, 8, 0.01);
  const double h = 0.2;
  OracleKernel ok{g, h};
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, -1.0, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      Index ii = g.index(i), jj = g.index(j);
      auto G = ok.grad(ii[0] - jj[0], ii[1] - jj[1]);
      double dg = u[i] - u[j];
      s += (G[0] * (a(i, 0) - a(j, 0)) + G[1] * (a(i, 1) - a(j, 1))) * dg * dg;
    }
  s *= std::pow(g.cell_volume(), 2);
  EXPECT_NEAR(commutator_lhs(a, u, h), s, 1e-10 * std::max(1.0, std::abs(s)));
}

TEST(CommutatorLhs, VanishesForConstants) {
  std::mt19937_64 rng(8);
  GridSpec g(2, 16, 0.01);
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, -1.0, 1.0);
  EXPECT_NEAR(commutator_lhs(VectorField::constant(g, {0.3, -0.7}), u, 0.1), 0.0, 1e-12);
  EXPECT_NEAR(commutator_lhs(a, ScalarField(g, 1.5), 0.1), 0.0, 1e-12);
}

TEST(CommutatorLhs, ShiftInvarianceAndHomogeneity) {
  std::mt19937_64 rng(9);
  GridSpec g(2, 16, 0.01);
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, -1.0, 1.0);
  const double h = 0.0625;
  double base = commutator_lhs(a, u, h);
  ASSERT_GT(std::abs(base), 1e-8);
  auto u2 = u;
  u2 += 3.0;
  EXPECT_NEAR(commutator_lhs(a, u2, h), base, 1e-9 * std::abs(base) + 1e-11);
  auto a2 = a;
  for (int k = 0; k < 2; ++k)
    a2.component(k) += 0.4;
  EXPECT_NEAR(commutator_lhs(a2, u, h), base, 1e-9 * std::abs(base) + 1e-11);
  auto u3 = u;
  u3 *= -2.5;
  EXPECT_NEAR(commutator_lhs(a, u3, h), 6.25 * base, 1e-9 * std::abs(base));
  auto a3 = a;
  a3 *= 1.7;
  EXPECT_NEAR(commutator_lhs(a3, u, h), 1.7 * base, 1e-9 * std::abs(base));
}

TEST(CommutatorControl, DominatesLhs) {
  std::mt19937_64 rng(10);
  GridSpec g(2, 16, 0.01);
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, -1.0, 1.0);
  std::vector<double> hs{0.25, 0.125, 0.0625};
  auto c = commutator_control(a, u, hs);
  for (std::size_t i = 0; i < hs.size(); ++i)
    EXPECT_GE(c[i], std::abs(commutator_lhs(a, u, hs[i])) - 1e-12);
}

TEST(CommutatorControl, SampledTracksExact) {
  GridSpec g(2, 64, 0.01);
  RoughFieldSpec spec;
  spec.beta = 2.0;
  spec.seed = 11;
  auto a = spectral_field(spec, g);
  auto u = spectral_scalar(1.5, 12, g);
  std::vector<double> hs{0.25, 0.0625, 1.0 / 64};
  auto exact = commutator_control(a, u, hs, 0, 1u << 14);
  auto sampled = commutator_control(a, u, hs, 0, 0, 96);
  for (std::size_t i = 0; i < hs.size(); ++i)
    EXPECT_NEAR(sampled[i] / exact[i], 1.0, 0.05) << hs[i];
  // Deterministic for a given seed.
  EXPECT_EQ(commutator_control(a, u, hs, 0, 0, 96), sampled);
}

TEST(CommutatorRhs, ConstantVelocityHasNoRightHandSide) {
  std::mt19937_64 rng(13);
  GridSpec g(2, 16, 0.01);
  auto u = random_field(g, rng, -1.0, 1.0);
  auto r = commutator_rhs(VectorField::constant(g, {0.5, 0.2}), u, 0.1, 2.0, 2.0);
  EXPECT_NEAR(r.grad_term, 0.0, 1e-12);
  EXPECT_NEAR(r.div_term, 0.0, 1e-12);
}

TEST(CommutatorRhs, DivergenceFreeHasNoDivTerm) {
  GridSpec g(2, 32, 0.01);
  RoughFieldSpec spec;
  spec.beta = 1.8;
  spec.divfree = true;
  spec.seed = 14;
  auto a = spectral_field(spec, g);
  auto u = spectral_scalar(1.2, 15, g);
  auto r = commutator_rhs(a, u, 0.1, 2.0, 2.0);
  EXPECT_GT(r.grad_term, 0.0);
  EXPECT_LT(r.div_term, 1e-10);
  EXPECT_THROW(commutator_rhs(a, u, 0.1, 1.0, 2.0), Error);
}

TEST(DiscreteCommutator, MatchesBruteForce) {
  std::mt19937_64 rng(16);
  for (int d : {1, 2}) {
    GridSpec g(d, 8, 0.01);
    const double h = 0.15;
    OracleKernel ok{g, h};
    auto a = random_velocity(g, rng, 1.0);
    auto u = random_field(g, rng, 0.0, 1.0);
    auto f = FluxLaw::burgers();
    double value = 0.0, proxy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (i == j)
          continue;
        Index ii = g.index(i), jj = g.index(j);
        int ox = ii[0] - jj[0], oy = d == 2 ? ii[1] - jj[1] : 0;
        double s = sign0(u[i] - u[j]);
        auto G = ok.grad(ox, oy);
        for (int c = 0; c < d; ++c) {
          double back = ok.K(ox - (c == 0), oy - (c == 1)) - ok.K(ox, oy);
          double da = a(i, c) - a(j, c);
          value += s * back * da * (f.f(u[i]) - f.f(u[j])) / g.dx();
          proxy += G[c] * da * kruzkov_F(f, u[i], u[j]);
        }
      }
    auto dc = discrete_commutator(a, u, f, h);
    EXPECT_NEAR(dc.value, value, 1e-9 * std::max(1.0, std::abs(value))) << d;
    EXPECT_NEAR(dc.proxy, proxy, 1e-9 * std::max(1.0, std::abs(proxy))) << d;
  }
}

TEST(DiscreteCommutator, ApproachesContinuumOnSmoothData) {
  // For smooth a and u the backward difference of K tends to -grad K.
  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    GridSpec g(1, n, 0.01);
    auto u = ScalarField::sample(g, [](double x, double) { return 0.5 + 0.3 * std::sin(2 * M_PI * x); });
    auto ax = ScalarField::sample(g, [](double x, double) { return std::cos(2 * M_PI * x) + 0.2 * std::sin(4 * M_PI * x); });
    auto dc = discrete_commutator(VectorField({ax}), u, FluxLaw::burgers(), 0.25);
    double err = std::abs(dc.ratio() - 1.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Regression, NeedsFourPoints) {
  EXPECT_THROW(fit_line({1, 2, 3}, {1, 2, 3}), Error);
  auto fit = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  GridSpec g(1, 16, 0.01);
  ScalarField u(g, 1.0);
  EXPECT_THROW(scaling_regression(VectorField(g), u, {0.25, 0.125, 0.0625}), Error);
}

TEST(CommutatorRhs, DivTermMatchesBruteForce) {
  std::mt19937_64 rng(17);
  GridSpec g(2, 16, 0.01);
  const double h = 0.1;
  OracleKernel ok{g, h};
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, -1.0, 1.0);
  double pairs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j)
        continue;
      Index ii = g.index(i), jj = g.index(j);
      double dg = u[i] - u[j];
      pairs += ok.K(ii[0] - jj[0], ii[1] - jj[1]) * dg * dg;
    }
  double expected = lp_norm(spectral_divergence(a), kInf) * std::pow(g.cell_volume(), 2) * pairs;
  auto r = commutator_rhs(a, u, h, 2.0, 2.0);
  EXPECT_NEAR(r.div_term, expected, 1e-10 * expected);
  double g4 = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l)
    g4 += std::pow(u[l], 4);
  g4 = std::sqrt(g4 * g.cell_volume());
  EXPECT_NEAR(r.grad_term, gradient_besov_norm(a, 2.0, 2.0) * std::sqrt(std::abs(std::log(h))) * g4, 1e-12 * r.grad_term);
}

TEST(DiscreteCommutator, VanishesForConstants) {
  std::mt19937_64 rng(18);
  GridSpec g(2, 8, 0.01);
  auto a = random_velocity(g, rng, 1.0);
  auto u = random_field(g, rng, 0.0, 1.0);
  auto f = FluxLaw::burgers();
  EXPECT_EQ(discrete_commutator(VectorField::constant(g, {0.2, -0.3}), u, f, 0.2).value, 0.0);
  EXPECT_EQ(discrete_commutator(a, ScalarField(g, 0.4), f, 0.2).value, 0.0);
}

TEST(CommutatorLadder, MatchesSingleScaleEvaluation) {
  std::mt19937_64 rng(41);
  for (int d : {1, 2}) {
    GridSpec g(d, d == 1 ? 64 : 16, 0.01);
    auto a = random_velocity(g, rng, 1.0);
    auto u = random_field(g, rng, 0.0, 1.0);
    std::vector<double> hs{0.25, 0.125, 0.0625};
    CommutatorLadder ladder(g, hs);
    auto lhs = ladder.lhs(a, u);
    auto ctrl = ladder.control(a, u);
    for (std::size_t k = 0; k < hs.size(); ++k) {
      double ref = commutator_lhs(a, u, hs[k]);
      EXPECT_NEAR(lhs[k], ref, 1e-12 * (1.0 + std::abs(ref)));
      // Brute-force control from the point oracle.
      OracleKernel ok{g, hs[k]};
      double brute = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (i == j)
            continue;
          Index ii = g.index(i), jj = g.index(j);
          auto G = ok.grad(ii[0] - jj[0], ii[1] - jj[1]);
          double da2 = 0.0;
          for (int c = 0; c < d; ++c)
            da2 += (a(i, c) - a(j, c)) * (a(i, c) - a(j, c));
          double dg = u[i] - u[j];
          brute += std::hypot(G[0], G[1]) * std::sqrt(da2) * dg * dg;
        }
      brute *= g.cell_volume() * g.cell_volume();
      EXPECT_NEAR(ctrl[k], brute, 1e-9 * brute);
    }
  }
}
