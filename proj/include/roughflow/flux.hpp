#pragma once

// Flux non-linearities f with f(0) = 0 and a known Lipschitz bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "roughflow/grid.hpp"

namespace roughflow {

enum class FluxKind { linear, logistic, burgers, piecewise_linear, custom };

class FluxLaw {
public:
  using Fn = std::function<double(double)>;

  /// f(u) = u.
  static FluxLaw linear() { return FluxLaw(FluxKind::linear, "linear", [](double u) { return u; }, [](double) { return 1.0; }, 1.0, {}); }

  /// f(u) = u (u_c - u)_+ ; Lipschitz bound u_c on u >= 0.
  static FluxLaw logistic(double uc) {
    if (!(uc > 0.0))
      throw Error("logistic flux needs u_c > 0");
    return FluxLaw(
        FluxKind::logistic, "logistic",
        [uc](double u) { return u * std::max(uc - u, 0.0); },
        [uc](double u) { return u < uc ? uc - 2.0 * u : 0.0; }, uc, {uc});
  }

  /// f(u) = scale * u^2 / 2, Lipschitz on |u| <= umax.
  static FluxLaw burgers(double umax = 1.0, double scale = 1.0) {
    return FluxLaw(
        FluxKind::burgers, "burgers", [scale](double u) { return 0.5 * scale * u * u; },
        [scale](double u) { return scale * u; }, std::abs(scale) * umax, {});
  }

  /// Continuous piecewise-linear f through (xs[i], ys[i]) with xs sorted;
  /// extended with the end slopes. The data must pass through (0, 0).
  static FluxLaw piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
      throw Error("piecewise-linear flux needs matching knots (>= 2)");
    if (!std::is_sorted(xs.begin(), xs.end()))
      throw Error("piecewise-linear knots must be sorted");
    auto slope = [xs, ys](double u) {
      std::size_t i = std::upper_bound(xs.begin(), xs.end(), u) - xs.begin();
      i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
      return (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
    };
    auto value = [xs, ys, slope](double u) {
      std::size_t i = std::upper_bound(xs.begin(), xs.end(), u) - xs.begin();
      i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
      return ys[i - 1] + slope(u) * (u - xs[i - 1]);
    };
    double lip = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      lip = std::max(lip, std::abs((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])));
    FluxLaw out(FluxKind::piecewise_linear, "piecewise-linear", value, slope, lip, xs);
    if (std::abs(out.f(0.0)) > 1e-14)
      throw Error("flux must satisfy f(0) = 0");
    return out;
  }

  static FluxLaw custom(std::string name, Fn f, Fn fprime, double lip, std::vector<double> kinks = {}) {
    FluxLaw out(FluxKind::custom, std::move(name), std::move(f), std::move(fprime), lip, std::move(kinks));
    if (std::abs(out.f(0.0)) > 1e-14)
      throw Error("flux must satisfy f(0) = 0");
    return out;
  }

  /// Same law with f and f' multiplied by `s`.
  FluxLaw scaled(double s) const {
    auto f = f_;
    auto fp = fp_;
    return FluxLaw(kind_, name_ + "*" + std::to_string(s), [f, s](double u) { return s * f(u); },
                   [fp, s](double u) { return s * fp(u); }, std::abs(s) * lip_, kinks_);
  }

  double f(double u) const { return f_(u); }
  double fprime(double u) const { return fp_(u); }
  double operator()(double u) const { return f_(u); }
  /// Declared sup |f'| on the working range.
  double lip() const { return lip_; }
  FluxKind kind() const { return kind_; }
  const std::string &name() const { return name_; }
  /// Points where f' may jump.
  const std::vector<double> &kinks() const { return kinks_; }

  /// {min f', max f'} over [lo, hi], by dense sampling plus kinks.
  std::pair<double, double> fprime_range(double lo, double hi) const {
    if (lo > hi)
      std::swap(lo, hi);
    double mn = fp_(lo), mx = mn;
    auto visit = [&](double u) {
      double v = fp_(u);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    };
    constexpr int samples = 128;
    for (int s = 0; s <= samples; ++s)
      visit(lo + (hi - lo) * s / samples);
    for (double k : kinks_)
      if (k >= lo && k <= hi) {
        visit(k);
        visit(std::nextafter(k, -1e300));
      }
    return {mn, mx};
  }

  /// Largest |f(x) - f(y)| / |x - y| seen on a sample of [lo, hi].
  double sampled_lipschitz(double lo, double hi, int samples = 200) const {
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
      double x = lo + (hi - lo) * s / samples;
      double y = lo + (hi - lo) * (s + 1) / samples;
      best = std::max(best, std::abs(f_(x) - f_(y)) / (y - x));
    }
    return best;
  }

private:
  FluxLaw(FluxKind kind, std::string name, Fn f, Fn fp, double lip, std::vector<double> kinks)
      : kind_(kind), name_(std::move(name)), f_(std::move(f)), fp_(std::move(fp)), lip_(lip), kinks_(std::move(kinks)) {}

  FluxKind kind_;
  std::string name_;
  Fn f_;
  Fn fp_;
  double lip_;
  std::vector<double> kinks_;
};

} // namespace roughflow
