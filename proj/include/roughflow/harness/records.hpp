#pragma once

// Run records and their persistence: CSV tables at 17 significant digits,
// JSON summaries and log-log SVG plots.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roughflow/grid.hpp"

namespace roughflow {

inline constexpr const char *kVersion = "0.1.0";

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size())
      throw Error("table '" + name + "': row width does not match the header");
    rows.push_back(std::move(row));
  }
};

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Plot {
  std::string name;
  std::string xlabel, ylabel;
  std::vector<Series> series;
};

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunRecord {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_clock = 0.0;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<Table> tables;
  std::vector<Plot> plots;
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  void scalar(std::string key, double v) { scalars.emplace_back(std::move(key), v); }

  /// Records an upper-bound check value <= threshold.
  bool check_le(std::string name, double value, double threshold, std::string detail = {}) {
    checks.push_back({std::move(name), value <= threshold, value, threshold, std::move(detail)});
    return checks.back().passed;
  }

  bool check_ge(std::string name, double value, double threshold, std::string detail = {}) {
    checks.push_back({std::move(name), value >= threshold, value, threshold, std::move(detail)});
    return checks.back().passed;
  }

  bool passed() const {
    for (const auto &c : checks)
      if (!c.passed)
        return false;
    return true;
  }
};

/// %.17g, which round-trips every finite double.
inline std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string &s) {
  if (s == "nan")
    return std::nan("");
  if (s == "inf")
    return kInf;
  if (s == "-inf")
    return -kInf;
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size())
    throw Error("malformed number '" + s + "'");
  return v;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path &path) {
  std::error_code ec;
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  return out;
}

} // namespace detail

inline void write_csv(const Table &t, const std::filesystem::path &path) {
  auto out = detail::open_for_write(path);
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto &row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  if (!out)
    throw Error("write failed for " + path.string());
}

inline Table read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read " + path.string());
  Table t;
  t.name = path.stem().string();
  std::string line;
  auto split = [](const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ','))
      out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line))
    throw Error("empty csv " + path.string());
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<double> row;
    for (const auto &cell : split(line))
      row.push_back(parse_double(cell));
    t.add(std::move(row));
  }
  return t;
}

inline nlohmann::json to_json(const RunRecord &r) {
  using nlohmann::json;
  // Non-finite values are stored as strings so the document stays valid JSON.
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); };
  json j;
  j["experiment"] = r.experiment;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["version"] = r.version;
  j["wall_clock"] = r.wall_clock;
  j["passed"] = r.passed();
  j["scalars"] = json::object();
  for (const auto &[k, v] : r.scalars)
    j["scalars"][k] = num(v);
  j["checks"] = json::array();
  for (const auto &c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"value", num(c.value)}, {"threshold", num(c.threshold)}, {"detail", c.detail}});
  j["warnings"] = r.warnings;
  j["tables"] = json::object();
  for (const auto &t : r.tables) {
    json rows = json::array();
    for (const auto &row : t.rows) {
      json jr = json::array();
      for (double v : row)
        jr.push_back(num(v));
      rows.push_back(jr);
    }
    j["tables"][t.name] = {{"columns", t.columns}, {"rows", rows}};
  }
  return j;
}

/// Log-log SVG with one polyline per series; non-positive points are skipped.
inline std::string render_svg(const Plot &p) {
  const double W = 640, H = 420, L = 70, R = 20, T = 30, B = 50;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (const auto &s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xmin = std::min(xmin, std::log10(s.x[i]));
        xmax = std::max(xmax, std::log10(s.x[i]));
        ymin = std::min(ymin, std::log10(s.y[i]));
        ymax = std::max(ymax, std::log10(s.y[i]));
      }
  if (!(xmin < kInf)) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  if (xmax - xmin < 1e-12)
    xmax = xmin + 1;
  if (ymax - ymin < 1e-12)
    ymax = ymin + 1;
  auto px = [&](double x) { return L + (std::log10(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - ymin) / (ymax - ymin) * (H - T - B); };
  static const char *colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << p.name << "</text>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">log10 " << p.xlabel << " ["
    << format_double(xmin) << ", " << format_double(xmax) << "]</text>\n";
  o << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2 << ")\" text-anchor=\"middle\">log10 "
    << p.ylabel << "</text>\n";
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto &s = p.series[k];
    o << "<polyline fill=\"none\" stroke=\"" << colours[k % 8] << "\" data-label=\"" << s.label << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
        o << px(s.x[i]) << "," << py(s.y[i]) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 5 << "\" y=\"" << T + 15 * (k + 1) << "\" text-anchor=\"end\" fill=\"" << colours[k % 8]
      << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

enum class OutputFormat { csv, json, svg };

inline OutputFormat parse_format(const std::string &s) {
  if (s == "csv")
    return OutputFormat::csv;
  if (s == "json")
    return OutputFormat::json;
  if (s == "svg")
    return OutputFormat::svg;
  throw Error("unknown output format '" + s + "'");
}

/// Writes a record set. CSV: one file per table plus a checks summary (header
/// only when the set is empty). JSON: one document per record. SVG: one file
/// per plot.
inline std::vector<std::filesystem::path> emit_outputs(const std::vector<RunRecord> &records, const std::filesystem::path &dir,
                                                       OutputFormat format) {
  std::vector<std::filesystem::path> written;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir))
    throw Error("cannot create output directory " + dir.string());
  switch (format) {
  case OutputFormat::csv: {
    Table summary{"checks", {"record", "check", "passed", "value", "threshold"}, {}};
    for (std::size_t r = 0; r < records.size(); ++r) {
      for (std::size_t c = 0; c < records[r].checks.size(); ++c) {
        const auto &ch = records[r].checks[c];
        summary.add({double(r), double(c), ch.passed ? 1.0 : 0.0, ch.value, ch.threshold});
      }
      for (const auto &t : records[r].tables) {
        auto path = dir / (records[r].experiment + "_" + t.name + ".csv");
        write_csv(t, path);
        written.push_back(path);
      }
    }
    auto path = dir / "checks.csv";
    write_csv(summary, path);
    written.push_back(path);
    break;
  }
  case OutputFormat::json: {
    nlohmann::json all = nlohmann::json::array();
    for (const auto &r : records)
      all.push_back(to_json(r));
    auto path = dir / "records.json";
    auto out = detail::open_for_write(path);
    out << all.dump(2) << '\n';
    written.push_back(path);
    break;
  }
  case OutputFormat::svg:
    for (const auto &r : records)
      for (const auto &p : r.plots) {
        auto path = dir / (r.experiment + "_" + p.name + ".svg");
        auto out = detail::open_for_write(path);
        out << render_svg(p);
        written.push_back(path);
      }
    break;
  }
  return written;
}

/// One column per component, one row per node in linear order.
inline void write_field_csv(const VectorField &a, const std::filesystem::path &path) {
  Table t{"field", {}, {}};
  for (int k = 0; k < a.d(); ++k)
    t.columns.push_back("a" + std::to_string(k));
  for (std::size_t l = 0; l < a.size(); ++l) {
    std::vector<double> row;
    for (int k = 0; k < a.d(); ++k)
      row.push_back(a(l, k));
    t.add(std::move(row));
  }
  write_csv(t, path);
}

inline VectorField read_field_csv(const std::filesystem::path &path, const GridSpec &g) {
  Table t = read_csv(path);
  if (t.rows.size() != g.size() || int(t.columns.size()) != g.d())
    throw Error("field file " + path.string() + " does not match the grid");
  std::vector<ScalarField> comps(g.d(), ScalarField(g));
  for (std::size_t l = 0; l < g.size(); ++l)
    for (int k = 0; k < g.d(); ++k)
      comps[k][l] = t.rows[l][k];
  return VectorField(std::move(comps));
}

} // namespace roughflow
