#pragma once

// Least-squares line fits for scaling exponents.

#include <cmath>
#include <vector>

#include "roughflow/grid.hpp"

namespace roughflow {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0; ///< standard error of the slope
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y, std::size_t min_points = 4) {
  if (x.size() != y.size())
    throw Error("regression needs matching samples");
  if (x.size() < min_points)
    throw Error("regression needs at least " + std::to_string(min_points) + " points");
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw Error("regression abscissae are degenerate");
  LineFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

/// Slope of log|y| against log x.
inline LineFit fit_loglog(const std::vector<double> &x, const std::vector<double> &y, std::size_t min_points = 4) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || y[i] == 0.0)
      throw Error("log-log fit needs positive abscissae and nonzero values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_line(lx, ly, min_points);
}

} // namespace roughflow
