// Acceptance runner: one PASS/FAIL line per criterion, each backed by a
// pinned config under config/acceptance and the frozen constants file.
// Usage: acceptance [criterion...]   (default: all of 1..11)

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "roughflow.hpp"

namespace {

namespace fs = std::filesystem;
using namespace roughflow;

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> configs;
  double time_limit; ///< seconds, 0 when unconstrained
};

const std::vector<Criterion> &criteria() {
  static const std::vector<Criterion> list{
      {1, "mass conservation", {"c1_conservation.ini"}, 60},
      {2, "monotonicity and order preservation", {"c2_monotonicity.ini"}, 0},
      {3, "discrete Kruzkov ledger", {"c3_ledger.ini"}, 300},
      {4, "maximum principle for the logistic flux", {"c4_max_principle.ini"}, 0},
      {5, "uniform regularity across refinements", {"c5_regularity.ini"}, 600},
      {6, "compactness proxy under refinement", {"c6_smooth.ini", "c6_rough.ini"}, 0},
      {7, "commutator scaling", {"c7_commutator.ini"}, 300},
      {8, "delocalised convolution scaling and Besov bound", {"c8_besov.ini"}, 0},
      {9, "Fourier equivalence and mollification bound", {"c9_fourier.ini"}, 0},
      {10, "oracle agreement", {"c10_oracle.ini"}, 0},
      {11, "scheme axiom self-checks", {"c11_axioms.ini"}, 0},
  };
  return list;
}

bool run_criterion(const Criterion &c, const fs::path &config_dir, const fs::path &out_dir) {
  bool ok = true;
  double elapsed = 0.0;
  std::string summary;
  for (const auto &name : c.configs) {
    try {
      auto cfg = ExperimentConfig::load(config_dir / name);
      RunRecord rec = run_experiment(cfg, RunContext{1});
      emit_outputs({rec}, out_dir / fs::path(name).stem(), OutputFormat::csv);
      elapsed += rec.wall_clock;
      for (const auto &ch : rec.checks) {
        std::printf("    %s %s: %s vs %s\n", ch.passed ? "ok  " : "FAIL", ch.name.c_str(), format_double(ch.value).c_str(),
                    format_double(ch.threshold).c_str());
        ok = ok && ch.passed;
      }
      for (const auto &w : rec.warnings)
        std::printf("    warning: %s\n", w.c_str());
    } catch (const std::exception &e) {
      std::printf("    error in %s: %s\n", name.c_str(), e.what());
      ok = false;
    }
  }
  if (c.time_limit > 0.0 && elapsed > c.time_limit) {
    std::printf("    FAIL runtime %.1f s exceeds %.0f s\n", elapsed, c.time_limit);
    ok = false;
  }
  std::printf("criterion %2d %s: %s (%.1f s)\n", c.id, ok ? "PASS" : "FAIL", c.title.c_str(), elapsed);
  std::fflush(stdout);
  return ok;
}

} // namespace

int main(int argc, char **argv) {
  const fs::path root = ROUGHFLOW_SOURCE_DIR;
  const fs::path config_dir = root / "config" / "acceptance";
  const fs::path out_dir = fs::temp_directory_path() / "roughflow-acceptance";
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i)
    wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto &c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end())
      continue;
    if (!run_criterion(c, config_dir, out_dir))
      ++failed;
  }
  return failed == 0 ? 0 : 1;
}
