#pragma once

// Time-stepping experiments: plain simulation, semi-norm ladders, the uniform
// regularity envelope across refinements and the refinement convergence study.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "roughflow/harness/common.hpp"
#include "roughflow/kernel.hpp"
#include "roughflow/regression.hpp"
#include "roughflow/scheme.hpp"

namespace roughflow {

inline int steps_for(const ExperimentConfig &c, const GridSpec &g) { return int(std::lround(c.T / g.dt())); }

inline SemiNormParams ladder_for(const ExperimentConfig &c, const GridSpec &g, double p) {
  auto params = SemiNormParams::for_grid(g, c.alpha, p, c.theta);
  double floor = std::max(c.h_min, std::pow(g.dx(), c.alpha));
  params.h_set = dyadic_ladder(c.h_max, floor);
  return params;
}

/// One run of the configured scheme with per-step scalars and semi-norm
/// checkpoints (one plot series per ladder h).
inline RunRecord run_simulate(const ExperimentConfig &c, const RunContext &) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  const GridSpec g = c.grid();
  const SchemeDef s = c.scheme_def();
  VectorField a = make_velocity(c, g, c.seed);
  ScalarField u = make_initial(c, g, c.seed);
  const int steps = steps_for(c, g);
  const int every = std::max(1, steps / c.checkpoints);
  auto params = ladder_for(c, g, 1.0);
  Table per_step{"steps", {"step", "t", "mass", "l1", "l2", "linf", "min", "max", "cfl_number", "diag_margin", "off_margin"}, {}};
  Table ladder{"seminorm", {"step", "t", "h", "value"}, {}};
  Plot plot{"seminorm_trajectories", "t", "|log h|^-theta pair sum", {}};
  for (double h : params.h_set)
    plot.series.push_back({"h=" + format_double(h), {}, {}});
  double scale = 0.0;
  for (double v : u.values())
    scale += std::abs(v);
  double defect = 0.0;
  auto record_ladder = [&](int n) {
    auto rep = discrete_seminorm_report(u, params);
    for (std::size_t k = 0; k < rep.ladder.size(); ++k) {
      ladder.add({double(n), n * g.dt(), rep.ladder[k].h, rep.ladder[k].value});
      plot.series[k].x.push_back(std::max(n, 1) * g.dt());
      plot.series[k].y.push_back(rep.ladder[k].value);
    }
  };
  record_ladder(0);
  for (int n = 0; n < steps; ++n) {
    auto res = step(s, a, u);
    defect = std::max(defect, std::abs(res.report.mass_out - res.report.mass_in) / std::max(scale, 1e-300));
    u = std::move(res.u);
    const auto &m = res.report.margins;
    per_step.add({double(n + 1), (n + 1) * g.dt(), u.sum() * g.cell_volume(), lp_norm(u, 1.0), lp_norm(u, 2.0),
                  lp_norm(u, kInf), u.min(), u.max(), m.cfl_number, m.diag, m.off});
    if ((n + 1) % every == 0 || n + 1 == steps)
      record_ladder(n + 1);
  }
  rec.tables = {per_step, ladder};
  rec.plots = {plot};
  rec.scalar("steps", steps);
  rec.scalar("max_rel_mass_defect", defect);
  rec.check_le("mass conservation", defect, 1e-12);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Discrete and continuous semi-norm ladders of the configured initial datum.
inline RunRecord run_seminorm(const ExperimentConfig &c, const RunContext &) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  const GridSpec g = c.grid();
  ScalarField u = make_initial(c, g, c.seed);
  auto params = ladder_for(c, g, c.p);
  params.validate(g);
  auto disc = discrete_seminorm_report(u, params);
  auto cont = continuous_seminorm_report(u, c.p, c.theta, c.h_max);
  Table t{"ladder", {"h", "discrete"}, {}};
  Plot plot{"seminorm_ladder", "h", "weighted pair sum", {{"discrete", {}, {}}}};
  for (const auto &pt : disc.ladder) {
    t.add({pt.h, pt.value});
    plot.series[0].x.push_back(pt.h);
    plot.series[0].y.push_back(pt.value);
  }
  Table tc{"continuous", {"h", "value"}, {}};
  for (const auto &pt : cont.ladder)
    tc.add({pt.h, pt.value});
  rec.tables = {t, tc};
  rec.plots = {plot};
  rec.scalar("discrete_seminorm", disc.sup);
  rec.scalar("continuous_seminorm", cont.sup);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Ingredients of the regularity envelope at one checkpoint. For a constant
/// C the envelope is exp(C growth) (u0_norm + C forcing).
struct EnvelopePoint {
  int step = 0;
  double seminorm = 0.0;
  double growth = 0.0;  ///< ||f'|| sup|D| n dt
  double forcing = 0.0; ///< sum of the three source terms
  double value(double C, double u0_norm) const { return std::exp(C * growth) * (u0_norm + C * forcing); }
};

struct RegularityRun {
  int n = 0;
  bool finite = true;
  double u0_norm = 0.0;
  double max_seminorm = 0.0;
  std::vector<EnvelopePoint> points;
};

/// Smallest C >= 0 with the trajectory under the envelope (bisection; the
/// envelope is increasing in C).
inline double fit_envelope_constant(const RegularityRun &run) {
  auto ok = [&](double C) {
    for (const auto &p : run.points)
      if (p.seminorm > p.value(C, run.u0_norm) * (1 + 1e-12))
        return false;
    return true;
  };
  if (ok(0.0))
    return 0.0;
  double lo = 0.0, hi = 1e-3;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12)
      return kInf;
  }
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// One refinement of the regularity sweep: ||u^n||_{alpha,1,theta} at
/// checkpoints with the envelope ingredients for exponent p = c.p and
/// q = 2 p*.
inline RegularityRun regularity_run(const ExperimentConfig &c, const SchemeDef &s, int n) {
  const GridSpec g = c.grid(n);
  VectorField a = make_velocity(c, g, c.seed);
  ScalarField u = make_initial(c, g, c.seed);
  const int steps = steps_for(c, g);
  const int every = std::max(1, steps / c.checkpoints);
  const auto params = ladder_for(c, g, 1.0);
  const double p = c.p;
  const double pstar = p / (p - 1.0);
  const double q = 2.0 * pstar;

  RegularityRun run;
  run.n = n;
  run.u0_norm = discrete_seminorm(u, params);
  run.max_seminorm = run.u0_norm;
  run.points.push_back({0, run.u0_norm, 0.0, 0.0});

  // Velocity-dependent factors are time independent here.
  const SchemeDef monotone_ref = s.kind == SchemeKind::centered ? SchemeDef::upwind(s.flux, s.d) : s;
  auto div = discrete_divergence(monotone_ref, a, g);
  double dsemi = 0.0;
  const double theta_d = p * (c.theta - 1.0 / pstar);
  if (theta_d >= 0.0) {
    auto dparams = ladder_for(c, g, p);
    dparams.theta = theta_d;
    dsemi = discrete_seminorm(div.D, dparams);
  }
  const double w1p = discrete_w1p(a, p);
  const double lpa = lp_norm(a, p);
  const double gamma = s.gamma;
  const double remainder = std::pow(g.dx(), gamma - c.alpha - c.alpha * c.theta);
  double lip = 0.0;
  {
    auto [lo, hi] = s.flux.fprime_range(0.0, std::max(2.0 * u.max(), 1.0));
    lip = std::max(std::abs(lo), std::abs(hi));
  }
  double sup_q = lp_norm(u, q), sup_pstar = lp_norm(u, pstar);
  for (int k = 0; k < steps; ++k) {
    u = step(s, a, u, {s.kind != SchemeKind::centered}).u;
    if (!u.all_finite()) {
      run.finite = false;
      run.max_seminorm = kInf;
      break;
    }
    sup_q = std::max(sup_q, lp_norm(u, q));
    sup_pstar = std::max(sup_pstar, lp_norm(u, pstar));
    if ((k + 1) % every == 0 || k + 1 == steps) {
      double t = (k + 1) * g.dt();
      EnvelopePoint pt;
      pt.step = k + 1;
      pt.seminorm = discrete_seminorm(u, params);
      pt.growth = lip * div.dmax() * t;
      pt.forcing = lip * t * (sup_q * w1p + sup_pstar * dsemi + remainder * sup_pstar * lpa);
      run.points.push_back(pt);
      if (!std::isfinite(pt.seminorm)) {
        run.finite = false;
        run.max_seminorm = kInf;
        break;
      }
      run.max_seminorm = std::max(run.max_seminorm, pt.seminorm);
    }
  }
  return run;
}

/// Uniform-in-refinement bound on max_n ||u^n||_{alpha,1,theta} and the
/// envelope with a frozen constant; the centred scheme is the control.
inline RunRecord run_regularity_envelope(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  std::vector<int> ns = c.refinements.empty() ? std::vector<int>{c.n} : c.refinements;
  const SchemeDef s = c.scheme_def();
  const SchemeDef control = SchemeDef::centered(c.flux_law(), c.d);
  std::vector<RegularityRun> runs(ns.size()), ctrl(ns.size());
  parallel_for(ctx.threads, 2 * ns.size(), [&](std::size_t i) {
    if (i < ns.size())
      runs[i] = regularity_run(c, s, ns[i]);
    else
      ctrl[i - ns.size()] = regularity_run(c, control, ns[i - ns.size()]);
  });

  std::optional<double> C;
  const bool in_hypotheses = c.p > 1.0 && c.p <= 2.0 && c.theta >= 1.0 - 1.0 / c.p;
  if (!in_hypotheses)
    rec.warnings.push_back("theta below 1 - 1/p or p outside (1, 2]: envelope check skipped");
  else if (c.constants_file.empty())
    rec.warnings.push_back("no constants file: envelope check skipped");
  else
    C = FrozenConstants::load(c.constants_file).get("envelope.C");

  Table t{"refinements", {"n", "dx", "u0_seminorm", "max_seminorm", "control_max_seminorm", "fitted_C", "envelope_margin"}, {}};
  Plot plot{"regularity", "n dt", "||u^n||_{alpha,1,theta}", {}};
  double lo = kInf, hi = 0.0, worst_margin = kInf;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const auto &r = runs[k];
    lo = std::min(lo, r.max_seminorm);
    hi = std::max(hi, r.max_seminorm);
    double margin = kInf;
    if (C)
      for (const auto &pt : r.points)
        if (pt.step > 0)
          margin = std::min(margin, pt.value(*C, r.u0_norm) / pt.seminorm - 1.0);
    worst_margin = std::min(worst_margin, margin);
    t.add({double(ns[k]), 1.0 / ns[k], r.u0_norm, r.max_seminorm, ctrl[k].max_seminorm, fit_envelope_constant(r), margin});
    Series sr{"n=" + std::to_string(ns[k]), {}, {}};
    const double dt = c.lambda / ns[k];
    for (const auto &pt : r.points)
      if (pt.step > 0) {
        sr.x.push_back(pt.step * dt);
        sr.y.push_back(pt.seminorm);
      }
    plot.series.push_back(std::move(sr));
  }
  rec.tables.push_back(t);
  rec.plots.push_back(plot);
  const double ratio = hi / lo;
  const double control_growth = ctrl.back().max_seminorm / ctrl.front().max_seminorm;
  rec.scalar("refinement_ratio", ratio);
  rec.scalar("control_growth", control_growth);
  rec.check_le("max/min of max_n seminorm over refinements", ratio, 3.0);
  rec.check_ge("centred control growth over the sweep", control_growth, 10.0);
  if (C) {
    rec.scalar("frozen_C", *C);
    rec.check_ge("trajectory under the frozen envelope", worst_margin, 0.0);
  }
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Successive-refinement l^1 differences at time T via exact restriction.
struct ConvergenceResult {
  std::vector<int> ns;
  std::vector<double> differences; ///< ||R u^{m+1} - u^m||_{l^1}, m = 0..M-2
  double order = 0.0;              ///< fitted decay exponent in dx
  bool monotone = true;
  std::vector<std::string> errors;
};

inline ConvergenceResult convergence_study(const ExperimentConfig &c, const SchemeDef &s, const RunContext &ctx) {
  ConvergenceResult out;
  out.ns = c.refinements;
  std::vector<std::optional<ScalarField>> finals(out.ns.size());
  std::vector<std::string> errs(out.ns.size());
  parallel_for(ctx.threads, out.ns.size(), [&](std::size_t m) {
    const GridSpec g = c.grid(out.ns[m]);
    VectorField a = make_velocity(c, g, c.seed);
    ScalarField u = make_initial(c, g, c.seed);
    const int steps = steps_for(c, g);
    try {
      for (int k = 0; k < steps; ++k)
        u = step(s, a, u, {s.kind != SchemeKind::centered}).u;
      finals[m] = std::move(u);
    } catch (const Error &e) {
      errs[m] = "n=" + std::to_string(out.ns[m]) + ": " + e.what();
    }
  });
  for (const auto &e : errs)
    if (!e.empty())
      out.errors.push_back(e);
  std::vector<double> dx;
  for (std::size_t m = 0; m + 1 < out.ns.size(); ++m) {
    double diff = kInf;
    if (finals[m] && finals[m + 1] && out.ns[m + 1] == 2 * out.ns[m]) {
      auto r = restrict_by_two(*finals[m + 1], finals[m]->grid());
      diff = lp_norm(r - *finals[m], 1.0);
    }
    out.differences.push_back(diff);
    dx.push_back(1.0 / out.ns[m]);
    if (m > 0 && !(diff < out.differences[m - 1]))
      out.monotone = false;
  }
  bool finite = true;
  for (double v : out.differences)
    finite = finite && std::isfinite(v);
  if (finite && out.differences.size() >= 4)
    out.order = fit_loglog(dx, out.differences).slope;
  else if (finite && out.differences.size() >= 2)
    out.order = std::log(out.differences.front() / out.differences.back()) / std::log(dx.front() / dx.back());
  else
    out.order = -kInf;
  return out;
}

/// Refinement study of the configured scheme with the centred control
/// recorded alongside.
inline RunRecord run_convergence(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  if (c.refinements.size() < 3)
    throw ConfigError("convergence needs at least three refinements");
  auto main = convergence_study(c, c.scheme_def(), ctx);
  auto ctrl = convergence_study(c, SchemeDef::centered(c.flux_law(), c.d), ctx);
  Table t{"differences", {"n_coarse", "l1_difference", "control_l1_difference"}, {}};
  Plot plot{"convergence", "dx", "l1 difference", {{c.scheme, {}, {}}, {"centered", {}, {}}}};
  for (std::size_t m = 0; m < main.differences.size(); ++m) {
    t.add({double(main.ns[m]), main.differences[m], ctrl.differences[m]});
    plot.series[0].x.push_back(1.0 / main.ns[m]);
    plot.series[0].y.push_back(main.differences[m]);
    plot.series[1].x.push_back(1.0 / main.ns[m]);
    plot.series[1].y.push_back(ctrl.differences[m]);
  }
  for (const auto &e : main.errors)
    rec.warnings.push_back("refinement aborted: " + e);
  for (const auto &e : ctrl.errors)
    rec.warnings.push_back("control refinement aborted: " + e);
  rec.tables.push_back(t);
  rec.plots.push_back(plot);
  rec.scalar("order", main.order);
  rec.scalar("control_order", ctrl.order);
  rec.scalar("control_monotone", ctrl.monotone ? 1.0 : 0.0);
  rec.check_ge("differences decrease monotonically", main.monotone ? 1.0 : 0.0, 1.0);
  rec.check_ge("runs completed", main.errors.empty() ? 1.0 : 0.0, 1.0);
  rec.checks.push_back({"fitted order", main.order > 0.0 && main.order >= c.min_order, main.order, c.min_order,
                        "positive and at least the configured minimum"});
  rec.wall_clock = clock.seconds();
  return rec;
}

} // namespace roughflow
