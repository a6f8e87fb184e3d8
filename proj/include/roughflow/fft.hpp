#pragma once

// Thin FFTW wrapper for periodic 1D/2D lattice fields.
//
// Plans are created once per (d, n, direction) under a global mutex and then
// executed through the new-array interface, which FFTW documents as safe to
// call concurrently.

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "roughflow/grid.hpp"

namespace roughflow {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

namespace detail {

class PlanCache {
public:
  static PlanCache &instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int d, int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(d, n, sign);
    if (auto it = plans_.find(key); it != plans_.end())
      return it->second;
    std::size_t total = d == 1 ? std::size_t(n) : std::size_t(n) * n;
    auto *in = fftw_alloc_complex(total);
    auto *out = fftw_alloc_complex(total);
    int dims[2] = {n, n};
    fftw_plan plan = fftw_plan_dft(d, dims, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache &) = delete;
  PlanCache &operator=(const PlanCache &) = delete;

private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto &[key, plan] : plans_)
      fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute(const GridSpec &g, int sign, Spectrum &in, Spectrum &out) {
  fftw_plan plan = PlanCache::instance().get(g.d(), g.n(), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex *>(in.data()), reinterpret_cast<fftw_complex *>(out.data()));
}

} // namespace detail

/// Unnormalised forward transform: c_m = sum_i u_i exp(-2 pi i m.i / n).
inline Spectrum fft_forward(const GridSpec &g, std::span<const double> values) {
  Spectrum in(values.begin(), values.end());
  Spectrum out(in.size());
  detail::execute(g, FFTW_FORWARD, in, out);
  return out;
}

inline Spectrum fft_forward(const ScalarField &u) { return fft_forward(u.grid(), u.values()); }

/// Inverse transform including the 1/N factor; returns the real part.
inline std::vector<double> fft_inverse_real(const GridSpec &g, Spectrum spec) {
  Spectrum out(spec.size());
  detail::execute(g, FFTW_BACKWARD, spec, out);
  std::vector<double> res(out.size());
  const double inv = 1.0 / double(out.size());
  for (std::size_t l = 0; l < out.size(); ++l)
    res[l] = out[l].real() * inv;
  return res;
}

inline ScalarField inverse_field(const GridSpec &g, Spectrum spec) {
  return ScalarField(g, fft_inverse_real(g, std::move(spec)));
}

/// Signed mode number of FFT bin `k` in [-n/2, n/2).
inline int mode_number(int k, int n) { return k < n / 2 ? k : k - n; }

/// Mode vector of spectrum bin `l`.
inline std::array<int, 2> mode_of(const GridSpec &g, std::size_t l) {
  Index i = g.index(l);
  return {mode_number(i[0], g.n()), g.d() == 2 ? mode_number(i[1], g.n()) : 0};
}

/// Euclidean length of the mode vector (cycles per unit length).
inline double mode_radius(const GridSpec &g, std::size_t l) {
  auto m = mode_of(g, l);
  return std::hypot(double(m[0]), double(m[1]));
}

/// True for bins on a Nyquist line, which have no real-valued derivative.
inline bool is_nyquist(const GridSpec &g, std::size_t l) {
  auto m = mode_of(g, l);
  return m[0] == -g.n() / 2 || (g.d() == 2 && m[1] == -g.n() / 2);
}

/// Applies a real Fourier multiplier sigma(mode) to u.
template <class Multiplier>
ScalarField fourier_multiply(const ScalarField &u, Multiplier &&sigma) {
  const GridSpec &g = u.grid();
  Spectrum s = fft_forward(u);
  for (std::size_t l = 0; l < s.size(); ++l)
    s[l] *= sigma(l);
  return inverse_field(g, std::move(s));
}

/// Spectral partial derivative along `axis` (Nyquist bins dropped).
inline ScalarField spectral_derivative(const ScalarField &u, int axis) {
  const GridSpec &g = u.grid();
  Spectrum s = fft_forward(u);
  for (std::size_t l = 0; l < s.size(); ++l) {
    if (is_nyquist(g, l)) {
      s[l] = 0.0;
      continue;
    }
    s[l] *= Complex(0.0, 2.0 * std::numbers::pi * mode_of(g, l)[axis]);
  }
  return inverse_field(g, std::move(s));
}

/// Spectral divergence of a vector field.
inline ScalarField spectral_divergence(const VectorField &a) {
  ScalarField div(a.grid());
  for (int k = 0; k < a.d(); ++k)
    div += spectral_derivative(a.component(k), k);
  return div;
}

/// Spectral curl d_x a_y - d_y a_x (2D only).
inline ScalarField spectral_curl(const VectorField &a) {
  if (a.d() != 2)
    throw Error("curl needs d = 2");
  return spectral_derivative(a.component(1), 0) - spectral_derivative(a.component(0), 1);
}

/// Circular convolution sum_o k_o u_{i-o} (no cell-volume factor). Both
/// arrays are indexed like lattice fields, offsets wrapped into [0, n)^d.
inline std::vector<double> circular_convolve(const GridSpec &g, std::span<const double> kernel,
                                             std::span<const double> u) {
  Spectrum a = fft_forward(g, kernel);
  Spectrum b = fft_forward(g, u);
  for (std::size_t l = 0; l < a.size(); ++l)
    a[l] *= b[l];
  return fft_inverse_real(g, std::move(a));
}

/// Same, with a pre-transformed kernel.
inline std::vector<double> circular_convolve(const GridSpec &g, const Spectrum &kernel_hat,
                                             std::span<const double> u) {
  Spectrum b = fft_forward(g, u);
  for (std::size_t l = 0; l < b.size(); ++l)
    b[l] *= kernel_hat[l];
  return fft_inverse_real(g, std::move(b));
}

} // namespace roughflow
