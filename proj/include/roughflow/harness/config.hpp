#pragma once

// Experiment configuration: INI file with fixed sections and keys (schema 1).
// Unknown keys, out-of-range values and missing referenced files are
// configuration errors.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "roughflow/flux.hpp"
#include "roughflow/grid.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/scheme.hpp"

namespace roughflow {

struct ConfigError : Error {
  using Error::Error;
};

inline const std::vector<std::string> &experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate",   "seminorm",     "commutator",  "convergence",
                                              "besov-check", "regularity-envelope", "conservation", "monotonicity",
                                              "ledger",     "max-principle", "fourier",     "oracle",
                                              "axioms",     "calibrate"};
  return kinds;
}

struct ExperimentConfig {
  std::filesystem::path source;

  // [experiment]
  std::string kind = "simulate";
  std::uint64_t seed = 0;
  int samples = 20;

  // [grid]
  int d = 1;
  int n = 128;
  double lambda = 0.25;
  double T = 0.5;
  std::vector<int> refinements;

  // [scheme]
  std::string scheme = "upwind";
  double nu = 0.2;

  // [flux]
  std::string flux = "burgers";
  double uc = 1.0;
  double umax = 1.0;
  double flux_scale = 1.0;

  // [velocity]
  double beta = 2.0;
  bool divfree = false;
  double amplitude = 1.0;
  double velocity_max = 0.0; ///< 0 keeps the unit l^2 normalisation
  std::filesystem::path velocity_file;

  // [initial]
  std::string profile = "smooth";
  double level = 0.5;
  double contrast = 0.3;
  double initial_beta = 1.0;
  std::filesystem::path initial_file;

  // [ladder]
  double alpha = 0.5;
  double theta = 0.5;
  double p = 2.0;
  double q = 2.0;
  double h_max = 0.5;
  double h_min = 0.0; ///< 0 selects the grid floor
  int checkpoints = 16;

  // [convergence]
  double min_order = 0.0; ///< fitted order must be positive and at least this

  // [output]
  std::filesystem::path out_dir = "out";
  std::string format = "csv";

  // [constants]
  std::filesystem::path constants_file;
  std::vector<std::filesystem::path> calibration_sources; ///< configs refitted by the calibrate experiment

  std::map<std::string, std::string> entries; ///< effective section.key -> value

  GridSpec grid(int n_override = 0) const {
    int nn = n_override ? n_override : n;
    return GridSpec(d, nn, lambda / nn);
  }

  FluxLaw flux_law() const {
    if (flux == "linear")
      return FluxLaw::linear();
    if (flux == "logistic")
      return FluxLaw::logistic(uc);
    if (flux == "burgers")
      return FluxLaw::burgers(umax, flux_scale);
    throw ConfigError("unknown flux law '" + flux + "'");
  }

  SchemeDef scheme_def() const {
    if (scheme == "upwind")
      return SchemeDef::upwind(flux_law(), d);
    if (scheme == "lax-friedrichs")
      return SchemeDef::lax_friedrichs(flux_law(), d, nu);
    if (scheme == "centered")
      return SchemeDef::centered(flux_law(), d);
    throw ConfigError("unknown scheme '" + scheme + "'");
  }

  std::string hash() const {
    std::ostringstream s;
    for (const auto &[k, v] : entries)
      s << k << '=' << v << '\n';
    s << "seed=" << seed;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
    return buf;
  }

  void validate() const {
    auto fail = [](const std::string &m) { throw ConfigError(m); };
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
      fail("unknown experiment kind '" + kind + "'");
    if (d != 1 && d != 2)
      fail("grid.d must be 1 or 2");
    auto check_n = [&](int v) {
      if (v < 4 || v % 2)
        fail("grid sizes must be even and at least 4");
    };
    check_n(n);
    for (int r : refinements)
      check_n(r);
    if (!(lambda > 0.0))
      fail("grid.lambda must be positive");
    if (!(T >= 0.0))
      fail("grid.T must be non-negative");
    if (samples < 1)
      fail("experiment.samples must be positive");
    if (scheme != "upwind" && scheme != "lax-friedrichs" && scheme != "centered")
      fail("unknown scheme '" + scheme + "'");
    if (!(nu >= 0.0 && nu <= 0.25))
      fail("scheme.nu must lie in [0, 1/4]");
    if (flux != "linear" && flux != "logistic" && flux != "burgers")
      fail("unknown flux law '" + flux + "'");
    if (!(uc > 0.0 && umax > 0.0 && flux_scale > 0.0))
      fail("flux parameters must be positive");
    if (!(beta > 0.0 && initial_beta > 0.0))
      fail("spectral exponents must be positive");
    if (!(velocity_max >= 0.0))
      fail("velocity.max must be non-negative");
    static const std::set<std::string> profiles{"smooth", "step", "noise", "constant", "file"};
    if (!profiles.count(profile))
      fail("unknown initial profile '" + profile + "'");
    if (!(alpha > 0.0 && alpha <= 1.0))
      fail("ladder.alpha must lie in (0, 1]");
    if (!(theta >= 0.0 && theta <= 1.0))
      fail("ladder.theta must lie in [0, 1]");
    if (!(p >= 1.0 && q >= 1.0))
      fail("ladder exponents must be >= 1");
    if (!(h_max > 0.0 && h_max <= 0.5 && h_min >= 0.0 && h_min < h_max))
      fail("ladder range must satisfy 0 <= h_min < h_max <= 1/2");
    if (checkpoints < 1)
      fail("ladder.checkpoints must be positive");
    if (format != "csv" && format != "json" && format != "svg")
      fail("output.format must be csv, json or svg");
    // The constants file is checked when it is read: calibrate creates it.
    std::vector<std::filesystem::path> inputs{velocity_file, initial_file};
    inputs.insert(inputs.end(), calibration_sources.begin(), calibration_sources.end());
    for (const auto &f : inputs)
      if (!f.empty() && !std::filesystem::exists(f))
        fail("referenced file does not exist: " + f.string());
    if (kind == "calibrate" && (constants_file.empty() || calibration_sources.empty()))
      fail("calibrate needs constants.file and constants.sources");
    if (profile == "file" && initial_file.empty())
      fail("initial.profile = file needs initial.file");
  }

  static ExperimentConfig load(const std::filesystem::path &path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
      pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
      throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    ExperimentConfig c;
    c.source = path;
    const auto base = path.parent_path();
    static const std::map<std::string, std::set<std::string>> schema{
        {"experiment", {"kind", "seed", "samples", "schema"}},
        {"grid", {"d", "n", "lambda", "T", "refinements"}},
        {"scheme", {"name", "nu"}},
        {"flux", {"law", "uc", "umax", "scale"}},
        {"velocity", {"beta", "divfree", "amplitude", "max", "file"}},
        {"initial", {"profile", "level", "contrast", "beta", "file"}},
        {"ladder", {"alpha", "theta", "p", "q", "h_max", "h_min", "checkpoints"}},
        {"convergence", {"min_order"}},
        {"output", {"dir", "format"}},
        {"constants", {"file", "sources"}},
    };
    for (const auto &[section, body] : tree) {
      auto it = schema.find(section);
      if (it == schema.end())
        throw ConfigError("unknown config section [" + section + "]");
      for (const auto &[key, value] : body) {
        if (!it->second.count(key))
          throw ConfigError("unknown config key " + section + "." + key);
        c.entries[section + "." + key] = value.data();
      }
    }
    if (tree.get<int>("experiment.schema", 1) != 1)
      throw ConfigError("unsupported config schema version");
    auto get = [&]<class T>(const std::string &key, T &dst) {
      try {
        dst = tree.get<T>(key, dst);
      } catch (const pt::ptree_error &) {
        throw ConfigError("bad value for " + key);
      }
    };
    auto get_path = [&](const std::string &key, std::filesystem::path &dst) {
      auto v = tree.get_optional<std::string>(key);
      if (v && !v->empty())
        dst = std::filesystem::path(*v).is_absolute() ? std::filesystem::path(*v) : base / *v;
    };
    get("experiment.kind", c.kind);
    get("experiment.seed", c.seed);
    get("experiment.samples", c.samples);
    get("grid.d", c.d);
    get("grid.n", c.n);
    get("grid.lambda", c.lambda);
    get("grid.T", c.T);
    if (auto r = tree.get_optional<std::string>("grid.refinements")) {
      std::stringstream ss(*r);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          c.refinements.push_back(std::stoi(item));
        } catch (const std::exception &) {
          throw ConfigError("bad value for grid.refinements");
        }
      }
    }
    get("scheme.name", c.scheme);
    get("scheme.nu", c.nu);
    get("flux.law", c.flux);
    get("flux.uc", c.uc);
    get("flux.umax", c.umax);
    get("flux.scale", c.flux_scale);
    get("velocity.beta", c.beta);
    get("velocity.divfree", c.divfree);
    get("velocity.amplitude", c.amplitude);
    get("velocity.max", c.velocity_max);
    get_path("velocity.file", c.velocity_file);
    get("initial.profile", c.profile);
    get("initial.level", c.level);
    get("initial.contrast", c.contrast);
    get("initial.beta", c.initial_beta);
    get_path("initial.file", c.initial_file);
    get("ladder.alpha", c.alpha);
    get("ladder.theta", c.theta);
    get("ladder.p", c.p);
    get("ladder.q", c.q);
    get("ladder.h_max", c.h_max);
    get("ladder.h_min", c.h_min);
    get("ladder.checkpoints", c.checkpoints);
    get("convergence.min_order", c.min_order);
    get_path("output.dir", c.out_dir);
    get("output.format", c.format);
    get_path("constants.file", c.constants_file);
    if (auto r = tree.get_optional<std::string>("constants.sources")) {
      std::stringstream ss(*r);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty())
          c.calibration_sources.push_back(std::filesystem::path(item).is_absolute() ? std::filesystem::path(item) : base / item);
      }
    }
    c.validate();
    return c;
  }
};

/// Frozen constants, one INI section per inequality.
struct FrozenConstants {
  std::map<std::string, double> values; ///< section.key -> value

  double get(const std::string &key) const {
    auto it = values.find(key);
    if (it == values.end())
      throw ConfigError("constant " + key + " missing; run the calibrate experiment");
    return it->second;
  }

  static FrozenConstants load(const std::filesystem::path &path) {
    namespace pt = boost::property_tree;
    if (!std::filesystem::exists(path))
      throw ConfigError("constants file does not exist: " + path.string() + "; run the calibrate experiment");
    pt::ptree tree;
    try {
      pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
      throw ConfigError(std::string("cannot parse constants: ") + e.what());
    }
    FrozenConstants c;
    for (const auto &[section, body] : tree)
      for (const auto &[key, value] : body)
        try {
          c.values[section + "." + key] = std::stod(value.data());
        } catch (const std::exception &) {
          throw ConfigError("bad constant " + section + "." + key);
        }
    return c;
  }

  void save(const std::filesystem::path &path) const {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    for (const auto &[key, v] : values) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      tree.put(key, std::string(buf));
    }
    std::error_code ec;
    if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path(), ec);
    try {
      pt::write_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
      throw Error(std::string("cannot write constants: ") + e.what());
    }
  }
};

} // namespace roughflow
