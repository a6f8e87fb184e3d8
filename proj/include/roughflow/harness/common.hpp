#pragma once

// Shared plumbing for the experiments: field construction from a config,
// admissible time-step ratios, deterministic parallel loops.

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

#include "roughflow/forge.hpp"
#include "roughflow/harness/config.hpp"
#include "roughflow/harness/records.hpp"
#include "roughflow/scheme.hpp"

namespace roughflow {

struct RunContext {
  int threads = 1;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to slot i, so the outcome does not depend on the schedule.
inline void parallel_for(int threads, std::size_t count, const std::function<void(std::size_t)> &body) {
  const int workers = std::max(1, std::min<int>(threads, int(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

/// Largest dt/dx keeping the closed-form margins non-negative for velocity a
/// and densities in [u_lo, u_hi].
inline double admissible_lambda(const SchemeDef &s, const VectorField &a, double u_lo, double u_hi) {
  double sum_abs = 0.0, max_abs = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    double acc = 0.0;
    for (int k = 0; k < a.d(); ++k) {
      acc += std::abs(a(l, k));
      max_abs = std::max(max_abs, std::abs(a(l, k)));
    }
    sum_abs = std::max(sum_abs, acc);
  }
  auto [fmin, fmax] = s.flux.fprime_range(u_lo, u_hi);
  return detail::builtin_margins(s, 1.0, sum_abs, max_abs, fmin, fmax).lambda_max;
}

inline VectorField make_velocity(const ExperimentConfig &c, const GridSpec &g, std::uint64_t seed, std::string stream = "velocity") {
  if (!c.velocity_file.empty()) {
    auto a = read_field_csv(c.velocity_file, g);
    a *= c.amplitude;
    return a;
  }
  RoughFieldSpec spec;
  spec.beta = c.beta;
  spec.seed = seed;
  spec.divfree = c.divfree;
  spec.amplitude = c.amplitude;
  spec.stream = std::move(stream);
  if (c.velocity_max > 0.0)
    spec.target_max = c.velocity_max;
  return spectral_field(spec, g);
}

inline ScalarField make_initial(const ExperimentConfig &c, const GridSpec &g, std::uint64_t seed) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (c.profile == "smooth")
    return ScalarField::sample(g, [&](double x, double y) {
      return c.level + c.contrast * std::sin(two_pi * x) * (g.d() == 2 ? std::cos(two_pi * y) : 1.0);
    });
  if (c.profile == "step")
    return ScalarField::sample(g, [&](double x, double y) {
      bool in = x >= 0.25 && x < 0.75 && (g.d() == 1 || (y >= 0.25 && y < 0.75));
      return c.level + (in ? c.contrast : -c.contrast);
    });
  if (c.profile == "noise") {
    ScalarField w = spectral_scalar(c.initial_beta, seed, g, "initial");
    double m = std::max(std::abs(w.min()), std::abs(w.max()));
    if (m > 0.0)
      w *= c.contrast / m;
    w += c.level;
    return w;
  }
  if (c.profile == "constant")
    return ScalarField(g, c.level);
  auto f = read_field_csv(c.initial_file, g);
  return f.component(0);
}

/// Wall-clock timer for records.
class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline RunRecord new_record(const ExperimentConfig &c) {
  RunRecord r;
  r.experiment = c.kind;
  r.config_hash = c.hash();
  r.seed = c.seed;
  return r;
}

} // namespace roughflow
