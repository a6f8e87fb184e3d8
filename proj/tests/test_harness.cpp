#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <cstring>
#include <sys/wait.h>

#include "roughflow.hpp"

using namespace roughflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  auto p = fs::temp_directory_path() / ("roughflow-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path &dir, const std::string &body) {
  auto p = dir / "run.ini";
  std::ofstream(p) << body;
  return p;
}

int cli(const std::string &args) {
  int status = std::system((std::string(ROUGHFLOW_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Records, CsvRoundTripIsBitIdentical) {
  auto dir = scratch("csv");
  Table t{"values", {"x", "y"}, {}};
  t.add({0.1, 1.0 / 3.0});
  t.add({-2.5e-300, 6.02214076e23});
  t.add({std::nextafter(1.0, 2.0), -0.0});
  write_csv(t, dir / "values.csv");
  Table back = read_csv(dir / "values.csv");
  ASSERT_EQ(back.columns, t.columns);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_EQ(std::memcmp(&back.rows[r][c], &t.rows[r][c], sizeof(double)), 0);
}

TEST(Records, EmptySetGivesHeaderOnlyTable) {
  auto dir = scratch("empty");
  auto files = emit_outputs({}, dir, OutputFormat::csv);
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(slurp(files[0]), "record,check,passed,value,threshold\n");
  EXPECT_TRUE(read_csv(files[0]).rows.empty());
}

TEST(Records, UnwritablePathIsAnError) {
  auto dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(emit_outputs({}, dir / "file" / "sub", OutputFormat::csv), Error);
}

TEST(Records, JsonKeepsNonFiniteValuesAsStrings) {
  RunRecord r;
  r.experiment = "x";
  r.scalar("growth", kInf);
  r.check_ge("growth", kInf, 10.0);
  auto j = to_json(r);
  EXPECT_EQ(j["scalars"]["growth"], "inf");
  EXPECT_TRUE(j["passed"].get<bool>());
}

TEST(Records, SvgHasOnePolylinePerLadderScale) {
  ExperimentConfig c;
  c.kind = "simulate";
  c.n = 64;
  c.T = 0.05;
  c.scheme = "upwind";
  c.flux = "linear";
  c.velocity_max = 0.5;
  RunRecord rec = run_simulate(c, {});
  ASSERT_EQ(rec.plots.size(), 1u);
  const auto ladder = dyadic_ladder(c.h_max, std::pow(1.0 / 64, c.alpha));
  ASSERT_EQ(rec.plots[0].series.size(), ladder.size());
  std::string svg = render_svg(rec.plots[0]);
  const std::regex polyline("<polyline");
  auto count = std::distance(std::sregex_iterator(svg.begin(), svg.end(), polyline), std::sregex_iterator());
  EXPECT_EQ(count, long(ladder.size()));
  EXPECT_TRUE(rec.passed());
}

TEST(Config, UnknownKeyAndSectionAreErrors) {
  auto dir = scratch("config");
  EXPECT_THROW(ExperimentConfig::load(write_config(dir, "[grid]\nn = 64\nsize = 3\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::load(write_config(dir, "[gird]\nn = 64\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::load(write_config(dir, "[grid]\nn = 63\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::load(write_config(dir, "[velocity]\nfile = missing.csv\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::load(write_config(dir, "[experiment]\nschema = 2\n")), ConfigError);
  auto c = ExperimentConfig::load(write_config(dir, "[grid]\nn = 64\nrefinements = 64,128\n"));
  EXPECT_EQ(c.n, 64);
  EXPECT_EQ(c.refinements, (std::vector<int>{64, 128}));
}

TEST(Config, MissingConstantsFileIsAConfigError) {
  auto dir = scratch("constants");
  auto c = ExperimentConfig::load(write_config(dir, "[experiment]\nkind = fourier\nsamples = 3\n[grid]\nn = 32\n"
                                                    "[constants]\nfile = nowhere.ini\n"));
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Config, FrozenConstantsRoundTrip) {
  auto dir = scratch("frozen");
  FrozenConstants k;
  k.values["besov.C"] = 1.0 / 3.0;
  k.save(dir / "c.ini");
  EXPECT_EQ(FrozenConstants::load(dir / "c.ini").get("besov.C"), 1.0 / 3.0);
  EXPECT_THROW(k.get("fourier.c1"), ConfigError);
}

TEST(Determinism, SameConfigSameRecordAcrossSchedules) {
  ExperimentConfig c;
  c.kind = "convergence";
  c.refinements = {32, 64, 128, 256};
  c.scheme = "upwind";
  c.flux = "linear";
  c.velocity_max = 0.5;
  auto r1 = run_experiment(c, RunContext{1});
  auto r2 = run_experiment(c, RunContext{3});
  ASSERT_EQ(r1.tables[0].rows, r2.tables[0].rows);
  EXPECT_EQ(to_json(r1)["scalars"], to_json(r2)["scalars"]);
  EXPECT_EQ(r1.config_hash, r2.config_hash);
}

TEST(Regularity, ConstantDatumWithoutDivergenceStaysAtZero) {
  ExperimentConfig c;
  c.kind = "regularity-envelope";
  c.refinements = {32, 64, 128, 256};
  c.profile = "constant";
  c.amplitude = 0.0;
  c.scheme = "lax-friedrichs";
  c.flux = "logistic";
  c.T = 0.1;
  auto run = regularity_run(c, c.scheme_def(), 64);
  for (const auto &pt : run.points)
    EXPECT_EQ(pt.seminorm, 0.0);
  EXPECT_EQ(fit_envelope_constant(run), 0.0);
}

TEST(Regularity, ThetaBelowHypothesisSkipsEnvelope) {
  ExperimentConfig c;
  c.kind = "regularity-envelope";
  c.refinements = {32, 64};
  c.scheme = "lax-friedrichs";
  c.flux = "logistic";
  c.velocity_max = 1.0;
  c.lambda = 0.32;
  c.T = 0.05;
  c.theta = 0.25;
  c.p = 2.0;
  c.constants_file = "unused.ini";
  auto rec = run_regularity_envelope(c, {});
  ASSERT_FALSE(rec.warnings.empty());
  EXPECT_NE(rec.warnings[0].find("skipped"), std::string::npos);
  for (const auto &ch : rec.checks)
    EXPECT_EQ(ch.name.find("envelope"), std::string::npos);
}

TEST(Regularity, FittedConstantIsTight) {
  RegularityRun run;
  run.u0_norm = 1.0;
  run.points = {{0, 1.0, 0.0, 0.0}, {4, 1.5, 0.2, 1.0}, {8, 1.7, 0.4, 2.0}};
  double C = fit_envelope_constant(run);
  bool tight = false;
  for (const auto &p : run.points) {
    EXPECT_LE(p.seminorm, p.value(C, run.u0_norm) * (1 + 1e-9));
    tight = tight || p.seminorm > p.value(0.999 * C, run.u0_norm);
  }
  EXPECT_TRUE(tight);
}

TEST(Convergence, CentredControlFailsToDecrease) {
  ExperimentConfig c;
  c.kind = "convergence";
  c.refinements = {64, 128, 256, 512, 1024};
  c.scheme = "centered";
  c.flux = "linear";
  c.beta = 1.5;
  c.profile = "step";
  c.velocity_max = 0.5;
  auto rec = run_convergence(c, {});
  EXPECT_FALSE(rec.passed());
}

TEST(Oracle, ShockPositionWithinTwoCells) {
  ExperimentConfig c;
  c.kind = "oracle";
  c.lambda = 0.5;
  c.T = 1.0;
  c.refinements = {64, 128};
  auto rec = run_oracle(c, {});
  EXPECT_LE(rec.checks[0].value, 2.0);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch("cli");
  auto good = write_config(dir, "[experiment]\nkind = axioms\nsamples = 3\n[output]\ndir = out\n");
  EXPECT_EQ(cli("axioms --config " + good.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "checks.csv"));
  EXPECT_EQ(cli("axioms --config " + good.string() + " --format json --out " + (dir / "j").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "j" / "records.json"));
  EXPECT_EQ(cli("simulate --config " + good.string()), 2);
  auto bad = write_config(dir, "[experiment]\nkind = axioms\nbogus = 1\n");
  EXPECT_EQ(cli("axioms --config " + bad.string()), 2);
  auto failing = write_config(dir, "[experiment]\nkind = convergence\n[grid]\nrefinements = 64,128,256,512\n"
                                   "[scheme]\nname = centered\n[flux]\nlaw = linear\n[velocity]\nbeta = 1.5\nmax = 0.5\n"
                                   "[initial]\nprofile = step\n[output]\ndir = out2\n");
  EXPECT_EQ(cli("convergence --config " + failing.string()), 1);
}
