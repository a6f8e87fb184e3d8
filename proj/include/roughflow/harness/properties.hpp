#pragma once

// Property suites over randomized configurations: mass conservation, order
// preservation, the discrete Kruzkov ledger, the logistic maximum principle
// and the scheme axioms.

#include <cmath>
#include <string>
#include <vector>

#include "roughflow/harness/common.hpp"
#include "roughflow/oracle.hpp"
#include "roughflow/scheme.hpp"

namespace roughflow {

struct RandomSetup {
  SchemeDef scheme;
  VectorField a;
  ScalarField u0;
  std::string label;
};

struct RandomSetupOptions {
  bool lax_friedrichs = false;
  bool allow_2d = true;
  int n_1d = 0;             ///< fixed 1D size, 0 draws from {32, 64, 128}
  bool logistic_only = false;
  double lambda_fraction = 0.8;
  double u_range = 2.0; ///< density range the ratio must accommodate
};

/// A random (grid, flux, velocity, initial datum) draw for property suites.
/// Upwind draws only fluxes with f' >= 0 on the density range, which its
/// monotonicity needs; Lax-Friedrichs also draws the logistic flux.
inline RandomSetup random_setup(std::uint64_t seed, std::size_t index, const std::string &stream,
                                const RandomSetupOptions &opt) {
  CounterRng rng(seed, stream);
  std::uint64_t c = index * 64;
  const int d = (opt.allow_2d && rng.uniform(c++) < 0.3) ? 2 : 1;
  int n = d == 2 ? (rng.uniform(c++) < 0.5 ? 16 : 32) : (opt.n_1d ? opt.n_1d : 32 << rng.below(c++, 3));
  FluxLaw f = FluxLaw::linear();
  double u_top = 1.0;
  if (opt.logistic_only) {
    u_top = 0.5 + 1.5 * rng.uniform(c++);
    f = FluxLaw::logistic(u_top);
  } else {
    int pick = int(rng.below(c++, opt.lax_friedrichs ? 3 : 2));
    if (pick == 1)
      f = FluxLaw::burgers(2.0);
    else if (pick == 2)
      f = FluxLaw::logistic(1.0);
  }
  const double nu = d == 1 ? 0.2 : 0.1;
  SchemeDef s = opt.lax_friedrichs ? SchemeDef::lax_friedrichs(f, d, nu) : SchemeDef::upwind(f, d);

  GridSpec probe(d, n, 1.0 / n);
  RoughFieldSpec spec;
  spec.beta = 1.2 + 1.8 * rng.uniform(c++);
  spec.seed = rng.bits(c++);
  spec.divfree = d == 2 && rng.uniform(c++) < 0.5;
  spec.target_max = 0.3 + 1.2 * rng.uniform(c++);
  VectorField a = spectral_field(spec, probe);

  ScalarField u0 = spectral_scalar(0.5 + 1.5 * rng.uniform(c++), rng.bits(c++), probe, "initial");
  double m = std::max(std::abs(u0.min()), std::abs(u0.max()));
  if (opt.logistic_only) {
    // Fill [0, uc] and touch both ends, where the flux vanishes.
    u0 *= 0.5 * u_top / m;
    u0 += 0.5 * u_top;
    u0[0] = 0.0;
    u0[1] = u_top;
  } else {
    u0 *= 0.4 / m;
    u0 += 0.5;
  }
  // Densities can grow under compression, so the ratio covers [0, u_range].
  double lam = opt.lambda_fraction * admissible_lambda(s, a, 0.0, opt.logistic_only ? u_top : opt.u_range);
  GridSpec g(d, n, lam / n);
  RandomSetup out{s, a.on(g), ScalarField(g, std::vector<double>(u0.values().begin(), u0.values().end())), {}};
  out.label = s.name + "/" + f.name() + " d=" + std::to_string(d) + " n=" + std::to_string(n);
  return out;
}

/// Mass conservation per step for both built-in schemes.
inline RunRecord run_conservation(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  Table t{"defects", {"scheme", "config", "d", "n", "max_rel_defect"}, {}};
  const int steps = 20;
  double worst = 0.0;
  for (int lf = 0; lf < 2; ++lf) {
    std::vector<std::vector<double>> rows(c.samples);
    parallel_for(ctx.threads, c.samples, [&](std::size_t i) {
      auto setup = random_setup(c.seed, i, "conservation", {.lax_friedrichs = lf == 1});
      ScalarField u = setup.u0;
      double scale = 0.0;
      for (double v : u.values())
        scale += std::abs(v);
      double defect = 0.0;
      for (int n = 0; n < steps; ++n) {
        auto res = step(setup.scheme, setup.a, u);
        defect = std::max(defect, std::abs(res.report.mass_out - res.report.mass_in) / scale);
        u = std::move(res.u);
      }
      rows[i] = {double(lf), double(i), double(setup.a.d()), double(u.grid().n()), defect};
    });
    for (auto &r : rows) {
      worst = std::max(worst, r[4]);
      t.add(r);
    }
  }
  rec.tables.push_back(t);
  rec.scalar("max_rel_defect", worst);
  rec.check_le("mass defect per step", worst, 1e-12);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Order preservation u0 <= v0 => u^n <= v^n, with the centred control.
inline RunRecord run_monotonicity(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  Table t{"order", {"scheme", "config", "min_gap", "control_violated", "control_first_step"}, {}};
  const int steps = 100;
  const double tol = 1e-12;
  double worst = kInf;
  int control_hits = 0, total = 0;
  for (int lf = 0; lf < 2; ++lf) {
    std::vector<std::vector<double>> rows(c.samples);
    parallel_for(ctx.threads, c.samples, [&](std::size_t i) {
      auto setup = random_setup(c.seed, i, "monotonicity", {.lax_friedrichs = lf == 1, .u_range = 4.0});
      const GridSpec &g = setup.u0.grid();
      CounterRng rng(c.seed, "monotonicity-bump");
      ScalarField v0 = setup.u0;
      for (std::size_t l = 0; l < g.size(); ++l)
        if (rng.uniform(i * g.size() * 2 + l) < 0.3)
          v0[l] += 0.2 * rng.uniform(i * g.size() * 2 + g.size() + l);
      auto gap_of = [&](const ScalarField &u, const ScalarField &v) {
        double m = kInf;
        for (std::size_t l = 0; l < g.size(); ++l)
          m = std::min(m, std::isfinite(v[l] - u[l]) ? v[l] - u[l] : -kInf);
        return m;
      };
      ScalarField u = setup.u0, v = v0;
      double gap = kInf;
      for (int n = 0; n < steps; ++n) {
        u = step(setup.scheme, setup.a, u).u;
        v = step(setup.scheme, setup.a, v).u;
        gap = std::min(gap, gap_of(u, v));
      }
      auto ctrl = SchemeDef::centered(setup.scheme.flux, g.d());
      ScalarField uc = setup.u0, vc = v0;
      int first = -1;
      for (int n = 0; n < steps && first < 0; ++n) {
        try {
          uc = step(ctrl, setup.a, uc, {false}).u;
          vc = step(ctrl, setup.a, vc, {false}).u;
        } catch (const Error &) {
          first = n; // blow-up to non-finite values
          break;
        }
        if (gap_of(uc, vc) < -tol)
          first = n;
      }
      rows[i] = {double(lf), double(i), gap, first >= 0 ? 1.0 : 0.0, double(first)};
    });
    for (auto &r : rows) {
      worst = std::min(worst, r[2]);
      control_hits += int(r[3]);
      ++total;
      t.add(r);
    }
  }
  rec.tables.push_back(t);
  rec.scalar("min_gap", worst);
  rec.scalar("control_violation_fraction", double(control_hits) / total);
  rec.check_ge("monotone schemes keep the order", worst, -tol);
  rec.check_ge("centred control violates the order", double(control_hits) / total, 0.9);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Discrete Kruzkov ledger at every step and every ladder h on 1D runs.
inline RunRecord run_ledger(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  Table t{"ledger", {"config", "scheme", "min_relative_slack", "max_lhs"}, {}};
  const int steps = 200;
  std::vector<std::vector<double>> rows(c.samples);
  parallel_for(ctx.threads, c.samples, [&](std::size_t i) {
    CounterRng pick(c.seed, "ledger-scheme");
    bool lf = pick.uniform(i) < 0.5;
    auto setup = random_setup(c.seed, i, "ledger", {.lax_friedrichs = lf, .allow_2d = false, .n_1d = c.n, .u_range = 4.0});
    const GridSpec &g = setup.u0.grid();
    auto D = discrete_divergence(setup.scheme, setup.a, g).D;
    auto hs = dyadic_ladder(0.5, g.dx());
    double slack = kInf, lhs = 0.0;
    ScalarField u = setup.u0;
    for (int n = 0; n < steps; ++n) {
      ScalarField v = step(setup.scheme, setup.a, u).u;
      auto led = kruzkov_ledger(setup.scheme, setup.a, u, v, D, hs, {.throw_on_violation = false});
      for (const auto &row : led.rows) {
        slack = std::min(slack, row.relative_slack());
        lhs = std::max(lhs, row.lhs);
      }
      u = std::move(v);
    }
    rows[i] = {double(i), lf ? 1.0 : 0.0, slack, lhs};
  });
  double worst = kInf;
  for (auto &r : rows) {
    worst = std::min(worst, r[2]);
    t.add(r);
  }
  rec.tables.push_back(t);
  rec.scalar("min_relative_slack", worst);
  rec.check_ge("ledger relative slack", worst, -1e-8);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// 0 <= u^n <= u_c for the logistic flux u (u_c - u)_+ under Lax-Friedrichs.
inline RunRecord run_max_principle(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  Table t{"bounds", {"config", "uc", "min", "max_minus_uc"}, {}};
  const int steps = 200;
  std::vector<std::vector<double>> rows(c.samples);
  parallel_for(ctx.threads, c.samples, [&](std::size_t i) {
    auto setup = random_setup(c.seed, i, "max-principle", {.lax_friedrichs = true, .logistic_only = true});
    const double uc = setup.u0.max();
    ScalarField u = setup.u0;
    double lo = u.min(), hi = u.max();
    for (int n = 0; n < steps; ++n) {
      u = step(setup.scheme, setup.a, u).u;
      lo = std::min(lo, u.min());
      hi = std::max(hi, u.max());
    }
    rows[i] = {double(i), uc, lo, hi - uc};
  });
  double lo = kInf, over = -kInf;
  for (auto &r : rows) {
    lo = std::min(lo, r[2]);
    over = std::max(over, r[3]);
    t.add(r);
  }
  rec.tables.push_back(t);
  rec.scalar("min_u", lo);
  rec.scalar("max_u_minus_uc", over);
  rec.check_ge("u stays non-negative", lo, -1e-12);
  rec.check_le("u stays below uc", over, 1e-12);
  rec.wall_clock = clock.seconds();
  return rec;
}

/// Closed-form discrete divergence: one-sided split differences for upwind,
/// centred differences for Lax-Friedrichs.
inline ScalarField closed_form_divergence(const SchemeDef &s, const VectorField &a) {
  const GridSpec &g = a.grid();
  ScalarField D(g);
  for (std::size_t l = 0; l < g.size(); ++l)
    for (int k = 0; k < g.d(); ++k) {
      Offset e = unit_offset(k), me{-e[0], -e[1]};
      double ap = a(g.displaced(l, e), k), a0 = a(l, k), am = a(g.displaced(l, me), k);
      if (s.kind == SchemeKind::upwind)
        D[l] += (std::max(ap, 0.0) - std::max(a0, 0.0) + std::min(a0, 0.0) - std::min(am, 0.0)) / g.dx();
      else
        D[l] += (ap - am) / (2.0 * g.dx());
    }
  return D;
}

/// Normalisation residual and U-independence of the discrete divergence.
inline RunRecord run_axioms(const ExperimentConfig &c, const RunContext &ctx) {
  Stopwatch clock;
  RunRecord rec = new_record(c);
  Table t{"axioms", {"config", "scheme", "normflux_residual", "div_residual", "closed_form_error"}, {}};
  std::vector<std::vector<double>> rows(2 * c.samples);
  parallel_for(ctx.threads, rows.size(), [&](std::size_t i) {
    bool lf = i % 2 == 1;
    auto setup = random_setup(c.seed, i / 2, "axioms", {.lax_friedrichs = lf});
    const GridSpec &g = setup.u0.grid();
    double resid = normflux_residual(setup.scheme, g.lambda(), setup.a.max_norm(), 0.0, 2.0);
    auto div = discrete_divergence(setup.scheme, setup.a, g);
    auto closed = closed_form_divergence(setup.scheme, setup.a);
    double err = 0.0, scale = std::max(1.0, lp_norm(closed, kInf));
    for (std::size_t l = 0; l < g.size(); ++l)
      err = std::max(err, std::abs(div.D[l] - closed[l]) / scale);
    rows[i] = {double(i / 2), lf ? 1.0 : 0.0, resid, div.residual, err};
  });
  double nf = 0.0, dr = 0.0, ce = 0.0;
  for (auto &r : rows) {
    nf = std::max(nf, r[2]);
    dr = std::max(dr, r[3]);
    ce = std::max(ce, r[4]);
    t.add(r);
  }
  rec.tables.push_back(t);
  rec.scalar("normflux_residual", nf);
  rec.scalar("div_residual", dr);
  rec.scalar("closed_form_error", ce);
  rec.check_le("normflux residual", nf, 1e-12);
  rec.check_le("divcondition residual", dr, 1e-10);
  rec.check_le("closed-form D match", ce, 1e-12);
  rec.wall_clock = clock.seconds();
  return rec;
}

} // namespace roughflow
