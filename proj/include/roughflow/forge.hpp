#pragma once

// Synthetic velocity fields with prescribed spectral decay, and the Poisson
// coupling a = grad c, -Delta c = g(u) - mean.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "roughflow/besov.hpp"
#include "roughflow/commutator.hpp"
#include "roughflow/fft.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

struct RoughFieldSpec {
  double beta = 2.0;          ///< Fourier amplitude ~ |m|^{-beta}
  std::uint64_t seed = 0;
  bool divfree = false;
  double amplitude = 1.0;     ///< overall factor
  std::string stream = "velocity";
  /// Optional rescaling so that discrete_w1p(a, p) hits a value.
  std::optional<std::pair<double, double>> target_w1p;
  /// Optional rescaling so that the max norm hits a value.
  std::optional<double> target_max;
};

namespace detail {

/// Random spectrum with |c_m| ~ |m|^{-decay} and zero mean / Nyquist bins.
/// Coefficients are keyed by the mode vector, so refining the grid keeps the
/// coarse modes and only adds new ones.
inline Spectrum random_spectrum(const GridSpec &g, double decay, const CounterRng &rng, std::uint64_t component) {
  Spectrum s(g.size());
  constexpr std::uint64_t bias = 1u << 19;
  for (std::size_t l = 0; l < s.size(); ++l) {
    double r = mode_radius(g, l);
    if (r == 0.0 || is_nyquist(g, l))
      continue;
    auto m = mode_of(g, l);
    std::uint64_t key = ((component << 20) + std::uint64_t(m[0] + bias)) << 20 | std::uint64_t(m[1] + bias);
    std::uint64_t c = key * 2;
    s[l] = Complex(rng.normal(c), rng.normal(c + 1)) * std::pow(r, -decay);
  }
  return s;
}

/// Real part of the inverse transform, scaled so the unnormalised spectrum
/// amplitudes are grid independent.
inline ScalarField synthesise(const GridSpec &g, Spectrum s) {
  ScalarField out = inverse_field(g, std::move(s));
  out *= double(g.size());
  return out;
}

} // namespace detail

/// Random-phase synthesis with amplitude |m|^{-beta}. For divfree in 2D the
/// field is the skew gradient of a stream function with decay beta + 1.
inline VectorField spectral_field(const RoughFieldSpec &spec, const GridSpec &g) {
  if (!(spec.beta > 0.0))
    throw Error("spectral decay beta must be positive");
  CounterRng rng(spec.seed, spec.stream);
  VectorField a(g);
  if (spec.divfree) {
    if (g.d() == 1) {
      if (spec.amplitude != 0.0)
        throw Error("1D divergence-free fields are constant");
      return a;
    }
    ScalarField psi = detail::synthesise(g, detail::random_spectrum(g, spec.beta + 1.0, rng, 0));
    psi *= 1.0 / (2.0 * std::numbers::pi);
    ScalarField dy = spectral_derivative(psi, 1), dx = spectral_derivative(psi, 0);
    dx *= -1.0;
    a = VectorField({std::move(dy), std::move(dx)});
  } else {
    std::vector<ScalarField> comps;
    for (int k = 0; k < g.d(); ++k)
      comps.push_back(detail::synthesise(g, detail::random_spectrum(g, spec.beta, rng, std::uint64_t(k))));
    a = VectorField(std::move(comps));
  }
  // Normalise to unit l^2 before applying the amplitude, so that refinement
  // changes the roughness and not the size.
  double l2 = lp_norm(a, 2.0);
  if (l2 > 0.0)
    a *= 1.0 / l2;
  if (spec.target_w1p) {
    double w = discrete_w1p(a, spec.target_w1p->first);
    if (w > 0.0)
      a *= spec.target_w1p->second / w;
  } else if (spec.target_max) {
    double m = a.max_norm();
    if (m > 0.0)
      a *= *spec.target_max / m;
  }
  a *= spec.amplitude;
  return a;
}

/// Same synthesis for a scalar field (first component of a non-divfree field).
inline ScalarField spectral_scalar(double beta, std::uint64_t seed, const GridSpec &g, std::string stream = "scalar") {
  RoughFieldSpec spec;
  spec.beta = beta;
  spec.seed = seed;
  spec.stream = std::move(stream);
  VectorField v = spectral_field(spec, g);
  ScalarField out = v.component(0);
  double l2 = lp_norm(out, 2.0);
  if (l2 > 0.0)
    out *= 1.0 / l2;
  return out;
}

/// a = grad c with -Delta c = g(u) - mean(g(u)), solved spectrally. Nyquist
/// bins carry no real derivative and are dropped.
inline VectorField poisson_coupling(const ScalarField &u, const std::function<double(double)> &gfun) {
  const GridSpec &g = u.grid();
  ScalarField r(g);
  for (std::size_t l = 0; l < g.size(); ++l)
    r[l] = gfun(u[l]);
  detail::require_finite(r);
  Spectrum s = fft_forward(r);
  for (std::size_t l = 0; l < s.size(); ++l) {
    double m = mode_radius(g, l);
    s[l] = m == 0.0 ? Complex(0.0) : s[l] / (4.0 * std::numbers::pi * std::numbers::pi * m * m);
  }
  ScalarField c = inverse_field(g, std::move(s));
  std::vector<ScalarField> comps;
  for (int k = 0; k < g.d(); ++k)
    comps.push_back(spectral_derivative(c, k));
  return VectorField(std::move(comps));
}

struct FieldNormReport {
  double lp = 0.0;        ///< ||a||_{l^p}
  double w1p = 0.0;       ///< ||a||_{d,W^{1,p}}
  double grad_besov = 0.0; ///< ||grad a||_{B^0_{p,q}}
  double max_div = 0.0;   ///< max spectral |div a|
};

inline FieldNormReport field_norm_report(const VectorField &a, double p, double q) {
  return {lp_norm(a, p), discrete_w1p(a, p), gradient_besov_norm(a, p, q), lp_norm(spectral_divergence(a), kInf)};
}

} // namespace roughflow
