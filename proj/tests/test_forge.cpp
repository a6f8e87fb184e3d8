#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "roughflow/forge.hpp"

using namespace roughflow;

TEST(SpectralField, DecayRateMatchesBeta) {
  GridSpec g(2, 128, 0.01);
  for (double beta : {1.5, 2.5}) {
    RoughFieldSpec spec;
    spec.beta = beta;
    spec.seed = 1;
    auto a = spectral_field(spec, g);
    // Shell-averaged power per mode against the mode radius.
    std::vector<double> power(64, 0.0), count(64, 0.0);
    for (int c = 0; c < 2; ++c) {
      Spectrum s = fft_forward(a.component(c));
      for (std::size_t l = 0; l < s.size(); ++l) {
        int r = int(std::lround(mode_radius(g, l)));
        if (r >= 4 && r < 48) {
          power[r] += std::norm(s[l]);
          count[r] += 1.0;
        }
      }
    }
    std::vector<double> x, y;
    for (int r = 4; r < 48; ++r) {
      x.push_back(r);
      y.push_back(power[r] / count[r]);
    }
    // Real part halves the power but keeps the rate |m|^{-2 beta}.
    EXPECT_NEAR(fit_loglog(x, y).slope, -2.0 * beta, 0.15) << beta;
  }
}

TEST(SpectralField, DivergenceFree2D) {
  GridSpec g(2, 64, 0.01);
  RoughFieldSpec spec;
  spec.beta = 1.2;
  spec.divfree = true;
  spec.seed = 2;
  auto a = spectral_field(spec, g);
  EXPECT_LT(lp_norm(spectral_divergence(a), kInf), 1e-10 * std::max(1.0, discrete_w1p(a, kInf)));
  EXPECT_GT(lp_norm(spectral_curl(a), 2.0), 1.0);
}

TEST(SpectralField, OneDimensionalDivergenceFreeIsConstant) {
  GridSpec g(1, 64, 0.01);
  RoughFieldSpec spec;
  spec.divfree = true;
  EXPECT_THROW(spectral_field(spec, g), Error);
  spec.amplitude = 0.0;
  auto a = spectral_field(spec, g);
  EXPECT_EQ(a.max_norm(), 0.0);
}

TEST(SpectralField, DeterministicAndLinearInAmplitude) {
  GridSpec g(2, 32, 0.01);
  RoughFieldSpec spec;
  spec.beta = 2.0;
  spec.seed = 77;
  auto a = spectral_field(spec, g);
  auto b = spectral_field(spec, g);
  for (std::size_t l = 0; l < g.size(); ++l)
    EXPECT_EQ(a(l, 0), b(l, 0));
  spec.amplitude = 3.0;
  auto c = spectral_field(spec, g);
  for (std::size_t l = 0; l < g.size(); ++l)
    EXPECT_NEAR(c(l, 1), 3.0 * a(l, 1), 1e-13);
  spec.amplitude = 1.0;
  spec.seed = 78;
  auto e = spectral_field(spec, g);
  EXPECT_GT(std::abs(e(5, 0) - a(5, 0)), 0.0);
  EXPECT_NEAR(lp_norm(a, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(a.component(0).sum(), 0.0, 1e-10);
}

TEST(SpectralField, TargetNorms) {
  GridSpec g(2, 32, 0.01);
  RoughFieldSpec spec;
  spec.target_w1p = std::make_pair(2.0, 5.0);
  EXPECT_NEAR(discrete_w1p(spectral_field(spec, g), 2.0), 5.0, 1e-10);
  spec.target_w1p.reset();
  spec.target_max = 0.25;
  EXPECT_NEAR(spectral_field(spec, g).max_norm(), 0.25, 1e-12);
  spec.beta = -1.0;
  EXPECT_THROW(spectral_field(spec, g), Error);
}

TEST(Poisson, SingleModeScaling) {
  GridSpec g(2, 32, 0.01);
  const int mx = 3, my = 2;
  auto u = ScalarField::sample(g, [&](double x, double y) { return std::cos(2 * std::numbers::pi * (mx * x + my * y)); });
  auto a = poisson_coupling(u, [](double v) { return v; });
  // c = u / (4 pi^2 |m|^2), a = grad c.
  const double m2 = mx * mx + my * my;
  for (std::size_t l = 0; l < g.size(); l += 7) {
    Index i = g.index(l);
    double phase = 2 * std::numbers::pi * (mx * g.coord(i, 0) + my * g.coord(i, 1));
    double dc = -std::sin(phase) * 2 * std::numbers::pi / (4 * std::numbers::pi * std::numbers::pi * m2);
    EXPECT_NEAR(a(l, 0), mx * dc, 1e-12);
    EXPECT_NEAR(a(l, 1), my * dc, 1e-12);
  }
}

TEST(Poisson, DivergenceIsMinusSource) {
  GridSpec g(2, 64, 0.01);
  auto u = ScalarField::sample(g, [](double x, double y) {
    return 0.5 + 0.3 * std::sin(2 * std::numbers::pi * x) * std::cos(4 * std::numbers::pi * y) + 0.1 * std::cos(2 * std::numbers::pi * (x + y));
  });
  auto gfun = [](double v) { return v * v; };
  auto a = poisson_coupling(u, gfun);
  ScalarField r(g);
  for (std::size_t l = 0; l < g.size(); ++l)
    r[l] = gfun(u[l]);
  double mean = r.sum() / double(g.size());
  auto div = spectral_divergence(a);
  for (std::size_t l = 0; l < g.size(); ++l)
    EXPECT_NEAR(div[l], -(r[l] - mean), 1e-10);
}

TEST(FieldNorms, Report) {
  GridSpec g(2, 32, 0.01);
  RoughFieldSpec spec;
  spec.divfree = true;
  spec.beta = 2.0;
  auto a = spectral_field(spec, g);
  auto rep = field_norm_report(a, 2.0, 2.0);
  EXPECT_NEAR(rep.lp, 1.0, 1e-12);
  EXPECT_NEAR(rep.w1p, discrete_w1p(a, 2.0), 1e-15);
  EXPECT_GT(rep.grad_besov, 0.0);
  EXPECT_LT(rep.max_div, 1e-10);
  auto zero = field_norm_report(VectorField(g), 2.0, 2.0);
  EXPECT_EQ(zero.lp, 0.0);
  EXPECT_EQ(zero.grad_besov, 0.0);
}

TEST(SpectralField, RefinementKeepsCoarseModes) {
  RoughFieldSpec spec;
  spec.beta = 1.5;
  spec.seed = 9;
  GridSpec coarse(1, 64, 0.01), fine(1, 128, 0.01);
  auto a = spectral_field(spec, coarse), b = spectral_field(spec, fine);
  Spectrum sa = fft_forward(a.component(0)), sb = fft_forward(b.component(0));
  // Compare normalised spectra on the shared modes (up to the l^2 rescaling).
  double ratio = std::abs(sb[3]) / 128.0 / (std::abs(sa[3]) / 64.0);
  for (int m : {1, 2, 5, 17, 31}) {
    EXPECT_NEAR(std::abs(sb[m]) / 128.0 / (std::abs(sa[m]) / 64.0), ratio, 1e-10);
    EXPECT_NEAR(std::arg(sb[m]), std::arg(sa[m]), 1e-10);
  }
}
