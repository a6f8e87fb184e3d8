#pragma once

// Dispatch from experiment kind to its runner.

#include <string>

#include "roughflow/harness/analysis.hpp"
#include "roughflow/harness/properties.hpp"
#include "roughflow/harness/regularity.hpp"

namespace roughflow {

inline RunRecord run_experiment(const ExperimentConfig &c, const RunContext &ctx = {}) {
  const std::string &k = c.kind;
  if (k == "simulate")
    return run_simulate(c, ctx);
  if (k == "seminorm")
    return run_seminorm(c, ctx);
  if (k == "commutator")
    return run_commutator(c, ctx);
  if (k == "convergence")
    return run_convergence(c, ctx);
  if (k == "besov-check")
    return run_besov_check(c, ctx);
  if (k == "regularity-envelope")
    return run_regularity_envelope(c, ctx);
  if (k == "conservation")
    return run_conservation(c, ctx);
  if (k == "monotonicity")
    return run_monotonicity(c, ctx);
  if (k == "ledger")
    return run_ledger(c, ctx);
  if (k == "max-principle")
    return run_max_principle(c, ctx);
  if (k == "fourier")
    return run_fourier(c, ctx);
  if (k == "oracle")
    return run_oracle(c, ctx);
  if (k == "axioms")
    return run_axioms(c, ctx);
  if (k == "calibrate")
    return run_calibrate(c, ctx);
  throw ConfigError("unknown experiment kind '" + k + "'");
}

} // namespace roughflow
