#pragma once

// Periodic Cartesian lattice on the unit torus, node fields and the discrete
// norms used throughout the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughflow {

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Multi-index of a lattice node. Only the first `d` entries are meaningful.
using Index = std::array<int, 2>;

/// Integer lattice offset, same layout as Index.
using Offset = std::array<int, 2>;

inline constexpr int kMaxDim = 2;

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Lattice geometry: dimension, cells per axis and time step. The domain is
/// always [0,1)^d with periodic wrap, so dx = 1/n.
class GridSpec {
public:
  GridSpec(int d, int n, double dt) : d_(d), n_(n), dt_(dt) {
    if (d != 1 && d != 2)
      throw Error("grid dimension must be 1 or 2");
    if (!is_power_of_two(n) || n < 2)
      throw Error("cells per axis must be a power of two >= 2");
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw Error("time step must be positive");
  }

  int d() const { return d_; }
  int n() const { return n_; }
  double dt() const { return dt_; }
  double dx() const { return 1.0 / n_; }
  /// dt/dx.
  double lambda() const { return dt_ * n_; }
  std::size_t size() const { return d_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }
  /// Cell measure dx^d.
  double cell_volume() const { return d_ == 1 ? dx() : dx() * dx(); }

  GridSpec with_dt(double dt) const { return GridSpec(d_, n_, dt); }

  int wrap(int i) const {
    int r = i % n_;
    return r < 0 ? r + n_ : r;
  }

  std::size_t linear(const Index &i) const {
    return d_ == 1 ? std::size_t(wrap(i[0]))
                   : std::size_t(wrap(i[0])) * n_ + std::size_t(wrap(i[1]));
  }

  Index index(std::size_t lin) const {
    if (d_ == 1)
      return {int(lin), 0};
    return {int(lin / n_), int(lin % n_)};
  }

  /// Node centre coordinate along `axis`.
  double coord(const Index &i, int axis) const { return (i[axis] + 0.5) * dx(); }

  /// i + [tau]_k with periodic wrap.
  Index shift(Index i, int axis, int tau) const {
    if (axis < 0 || axis >= d_)
      throw Error("shift axis out of range");
    i[axis] = wrap(i[axis] + tau);
    return i;
  }

  /// Linear index of node `lin` displaced by `o`.
  std::size_t displaced(std::size_t lin, const Offset &o) const {
    Index i = index(lin);
    i[0] += o[0];
    if (d_ == 2)
      i[1] += o[1];
    return linear(i);
  }

  /// Representative of an offset in (-n/2, n/2] per axis.
  Offset minimal_image(Offset o) const {
    for (int k = 0; k < d_; ++k) {
      int r = wrap(o[k]);
      o[k] = r > n_ / 2 ? r - n_ : r;
    }
    if (d_ == 1)
      o[1] = 0;
    return o;
  }

  friend bool operator==(const GridSpec &a, const GridSpec &b) {
    return a.d_ == b.d_ && a.n_ == b.n_ && a.dt_ == b.dt_;
  }

  bool same_lattice(const GridSpec &o) const { return d_ == o.d_ && n_ == o.n_; }

private:
  int d_;
  int n_;
  double dt_;
};

inline Offset unit_offset(int axis) {
  Offset o{0, 0};
  o[axis] = 1;
  return o;
}

/// Scalar node values u_i, row-major with axis 0 slowest.
class ScalarField {
public:
  explicit ScalarField(GridSpec grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}

  ScalarField(GridSpec grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw Error("scalar field size does not match grid");
  }

  /// Samples `fn(x, y)` at node centres (y ignored in 1D).
  static ScalarField sample(GridSpec grid, const std::function<double(double, double)> &fn) {
    ScalarField out(grid);
    for (std::size_t l = 0; l < grid.size(); ++l) {
      Index i = grid.index(l);
      out[l] = fn(grid.coord(i, 0), grid.d() == 2 ? grid.coord(i, 1) : 0.0);
    }
    return out;
  }

  const GridSpec &grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double &operator[](std::size_t l) { return values_[l]; }
  double operator[](std::size_t l) const { return values_[l]; }
  double at(const Index &i) const { return values_[grid_.linear(i)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::vector<double> &raw() { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  ScalarField &operator*=(double s) {
    for (auto &v : values_)
      v *= s;
    return *this;
  }
  ScalarField &operator+=(double s) {
    for (auto &v : values_)
      v += s;
    return *this;
  }
  ScalarField &operator+=(const ScalarField &o) {
    for (std::size_t l = 0; l < size(); ++l)
      values_[l] += o[l];
    return *this;
  }
  ScalarField &operator-=(const ScalarField &o) {
    for (std::size_t l = 0; l < size(); ++l)
      values_[l] -= o[l];
    return *this;
  }
  friend ScalarField operator-(ScalarField a, const ScalarField &b) { return a -= b; }
  friend ScalarField operator+(ScalarField a, const ScalarField &b) { return a += b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// d components per node, stored as d separate component fields.
class VectorField {
public:
  explicit VectorField(GridSpec grid, double value = 0.0)
      : grid_(grid), comps_(std::size_t(grid.d()), ScalarField(grid, value)) {}

  explicit VectorField(std::vector<ScalarField> comps) : grid_(comps.at(0).grid()), comps_(std::move(comps)) {
    if (int(comps_.size()) != grid_.d())
      throw Error("vector field needs one component per dimension");
    for (const auto &c : comps_)
      if (!c.grid().same_lattice(grid_))
        throw Error("vector field components live on different grids");
  }

  /// Constant field with the given component values.
  static VectorField constant(GridSpec grid, std::array<double, 2> value) {
    VectorField out(grid);
    for (int k = 0; k < grid.d(); ++k)
      for (auto &v : out.comps_[k].values())
        v = value[k];
    return out;
  }

  const GridSpec &grid() const { return grid_; }
  int d() const { return grid_.d(); }
  std::size_t size() const { return grid_.size(); }
  const ScalarField &component(int k) const { return comps_.at(k); }
  ScalarField &component(int k) { return comps_.at(k); }
  double operator()(std::size_t l, int k) const { return comps_[k][l]; }
  double &operator()(std::size_t l, int k) { return comps_[k][l]; }

  /// Node vector at `l` (unused entries zero).
  std::array<double, 2> at(std::size_t l) const {
    std::array<double, 2> v{0.0, 0.0};
    for (int k = 0; k < d(); ++k)
      v[k] = comps_[k][l];
    return v;
  }

  bool all_finite() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const ScalarField &c) { return c.all_finite(); });
  }

  /// Largest Euclidean node magnitude.
  double max_norm() const {
    double m = 0.0;
    for (std::size_t l = 0; l < size(); ++l) {
      double s = 0.0;
      for (int k = 0; k < d(); ++k)
        s += comps_[k][l] * comps_[k][l];
      m = std::max(m, std::sqrt(s));
    }
    return m;
  }

  VectorField &operator*=(double s) {
    for (auto &c : comps_)
      c *= s;
    return *this;
  }

  /// Pointwise copy with the grid's time step replaced.
  VectorField on(GridSpec grid) const {
    if (!grid.same_lattice(grid_))
      throw Error("cannot move vector field to a different lattice");
    std::vector<ScalarField> comps;
    for (const auto &c : comps_)
      comps.emplace_back(grid, std::vector<double>(c.values().begin(), c.values().end()));
    return VectorField(std::move(comps));
  }

private:
  GridSpec grid_;
  std::vector<ScalarField> comps_;
};

/// Positive infinity, used as the `p` argument of the sup norm.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {
inline void require_finite(const ScalarField &u) {
  if (!u.all_finite())
    throw Error("non-finite field");
}
inline void require_exponent(double p) {
  if (!(p >= 1.0))
    throw Error("norm exponent must be >= 1");
}
} // namespace detail

/// (dx^d sum |u_i|^p)^{1/p}, or max |u_i| for p = infinity.
inline double lp_norm(const ScalarField &u, double p) {
  detail::require_exponent(p);
  detail::require_finite(u);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : u.values())
      m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  if (p == 1.0)
    for (double v : u.values())
      s += std::abs(v);
  else if (p == 2.0)
    for (double v : u.values())
      s += v * v;
  else
    for (double v : u.values())
      s += std::pow(std::abs(v), p);
  return std::pow(u.grid().cell_volume() * s, 1.0 / p);
}

/// l^p norm of the node-wise Euclidean magnitude of a vector field.
inline double lp_norm(const VectorField &a, double p) {
  ScalarField mag(a.grid());
  for (std::size_t l = 0; l < a.size(); ++l) {
    double s = 0.0;
    for (int k = 0; k < a.d(); ++k)
      s += a(l, k) * a(l, k);
    mag[l] = std::sqrt(s);
  }
  return lp_norm(mag, p);
}

/// Discrete W^{1,p} semi-norm: (dx^d sum_i sum_k |a_i - a_{i+[1]_k}|^p)^{1/p},
/// the difference taken as Euclidean norm of the d-vector.
inline double discrete_w1p(const VectorField &a, double p) {
  detail::require_exponent(p);
  if (!a.all_finite())
    throw Error("non-finite field");
  const GridSpec &g = a.grid();
  double s = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    for (int k = 0; k < g.d(); ++k) {
      std::size_t nb = g.displaced(l, unit_offset(k));
      double m2 = 0.0;
      for (int c = 0; c < g.d(); ++c) {
        double diff = a(l, c) - a(nb, c);
        m2 += diff * diff;
      }
      double m = std::sqrt(m2);
      s = std::isinf(p) ? std::max(s, m) : s + std::pow(m, p);
    }
  }
  return std::isinf(p) ? s : std::pow(g.cell_volume() * s, 1.0 / p);
}

/// Same semi-norm for a scalar field (treated as a one-component vector).
inline double discrete_w1p(const ScalarField &u, double p) {
  detail::require_exponent(p);
  detail::require_finite(u);
  const GridSpec &g = u.grid();
  double s = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l)
    for (int k = 0; k < g.d(); ++k) {
      double m = std::abs(u[l] - u[g.displaced(l, unit_offset(k))]);
      s = std::isinf(p) ? std::max(s, m) : s + std::pow(m, p);
    }
  return std::isinf(p) ? s : std::pow(g.cell_volume() * s, 1.0 / p);
}

/// i + [tau]_k on an n-periodic lattice.
inline Index shift(const GridSpec &grid, const Index &i, int axis, int tau) {
  return grid.shift(i, axis, tau);
}

/// Lorentz L^{q,1} norm of a nonnegative step function:
/// integral over xi of |{u >= xi}|^{1/q}, evaluated exactly by sorting.
inline double lorentz_q1_norm(const ScalarField &u, double q) {
  if (!(q > 1.0))
    throw Error("Lorentz exponent must exceed 1");
  detail::require_finite(u);
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double x : v)
    if (x < 0.0)
      throw Error("Lorentz norm defined for nonnegative u");
  std::sort(v.begin(), v.end(), std::greater<>());
  const double cell = u.grid().cell_volume();
  double s = 0.0;
  for (std::size_t m = 0; m < v.size(); ++m) {
    double next = m + 1 < v.size() ? v[m + 1] : 0.0;
    s += std::pow(double(m + 1) * cell, 1.0 / q) * (v[m] - next);
  }
  return s;
}

/// Restriction of a fine field onto the grid with half as many cells per
/// axis, by cell averaging (exact for piecewise-constant fields).
inline ScalarField restrict_by_two(const ScalarField &fine, GridSpec coarse) {
  const GridSpec &fg = fine.grid();
  if (coarse.d() != fg.d() || coarse.n() * 2 != fg.n())
    throw Error("restriction needs a grid with half the cells");
  ScalarField out(coarse);
  for (std::size_t l = 0; l < out.size(); ++l) {
    Index c = coarse.index(l);
    double s = 0.0;
    int cnt = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < (fg.d() == 2 ? 2 : 1); ++b) {
        s += fine.at({2 * c[0] + a, 2 * c[1] + b});
        ++cnt;
      }
    out[l] = s / cnt;
  }
  return out;
}

} // namespace roughflow
