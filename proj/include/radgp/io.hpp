#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "radgp/draws.hpp"
#include "radgp/error.hpp"
#include "radgp/geometry.hpp"
#include "radgp/kernels.hpp"
#include "radgp/partition.hpp"
#include "radgp/precision.hpp"

namespace radgp {

// values serialized with 17 significant digits so a read-back is lossless
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("io", "cannot parse number '" + s + "' in " + context);
  }
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("io", "empty file '" + path + "'");
  CsvTable t;
  t.header = detail::split_csv_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw Error("io", "row with " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.header.size()) + " in '" + path + "'");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = detail::parse_double(cells[i], path);
    rows.push_back(std::move(row));
  }
  t.values = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j) t.values(i, j) = rows[i][j];
  return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out << (c ? "," : "") << format_value(values(r, c));
    out << "\n";
  }
}

// training file: x1..xd, y [, cov_1..cov_p]
struct TrainingFile {
  LocationSet locations;
  Vector y;
  Matrix X;
};

inline TrainingFile read_training_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int d = 0;
  while (t.column("x" + std::to_string(d + 1)) >= 0) ++d;
  if (d == 0) throw Error("io", "no coordinate columns x1.. in '" + path + "'");
  int ycol = t.column("y");
  if (ycol < 0) throw Error("io", "no response column y in '" + path + "'");
  int p = 0;
  while (t.column("cov_" + std::to_string(p + 1)) >= 0) ++p;

  TrainingFile f;
  Matrix coords(t.values.rows(), d);
  for (int k = 0; k < d; ++k) coords.col(k) = t.values.col(t.column("x" + std::to_string(k + 1)));
  f.locations = LocationSet(coords);
  f.y = t.values.col(ycol);
  if (p > 0) {
    f.X = Matrix(t.values.rows(), p);
    for (int k = 0; k < p; ++k) f.X.col(k) = t.values.col(t.column("cov_" + std::to_string(k + 1)));
  }
  return f;
}

inline LocationSet read_test_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int d = 0;
  while (t.column("x" + std::to_string(d + 1)) >= 0) ++d;
  if (d == 0) throw Error("io", "no coordinate columns x1.. in '" + path + "'");
  Matrix coords(t.values.rows(), d);
  for (int k = 0; k < d; ++k) coords.col(k) = t.values.col(t.column("x" + std::to_string(k + 1)));
  if (coords.rows() == 0) return LocationSet();
  return LocationSet(coords);
}

inline void write_locations_csv(const std::string& path, const LocationSet& set,
                                const Vector* y = nullptr) {
  std::vector<std::string> header;
  for (Eigen::Index k = 0; k < set.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
  Matrix values(set.size(), set.dim() + (y ? 1 : 0));
  values.leftCols(set.dim()) = set.coords();
  if (y) {
    header.push_back("y");
    values.col(set.dim()) = *y;
  }
  write_csv(path, header, values);
}

// one row per iteration: iteration, beta_0.., sigma2, theta_<name>..
inline void write_draws_csv(const std::string& path, const PosteriorDraws& d) {
  std::vector<std::string> header = {"iteration"};
  for (Eigen::Index j = 0; j < d.beta.cols(); ++j) header.push_back("beta_" + std::to_string(j));
  header.push_back("sigma2");
  for (const auto& n : d.theta_names) header.push_back("theta_" + n);
  Matrix values(d.L1, static_cast<Eigen::Index>(header.size()));
  for (int l = 0; l < d.L1; ++l) {
    int c = 0;
    values(l, c++) = l + 1;
    for (Eigen::Index j = 0; j < d.beta.cols(); ++j) values(l, c++) = d.beta(l, j);
    values(l, c++) = d.sigma2[l];
    for (Eigen::Index j = 0; j < d.theta.cols(); ++j) values(l, c++) = d.theta(l, j);
  }
  write_csv(path, header, values);
}

// long format: iteration, location_index, value
inline void write_field_draws_csv(const std::string& path, const std::vector<int>& iterations,
                                  const Matrix& field) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << "iteration,location_index,value\n";
  for (Eigen::Index r = 0; r < field.rows(); ++r)
    for (Eigen::Index j = 0; j < field.cols(); ++j)
      out << iterations[static_cast<std::size_t>(r)] << "," << j << ","
          << format_value(field(r, j)) << "\n";
}

inline std::pair<std::vector<int>, Matrix> read_field_draws_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int ci = t.column("iteration"), cl = t.column("location_index"), cv = t.column("value");
  if (ci < 0 || cl < 0 || cv < 0)
    throw Error("io", "'" + path + "' lacks iteration/location_index/value columns");
  std::vector<int> iters;
  std::map<int, int> iter_row;
  int max_loc = -1;
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    int it = static_cast<int>(t.values(r, ci));
    if (!iter_row.count(it)) {
      iter_row[it] = static_cast<int>(iters.size());
      iters.push_back(it);
    }
    max_loc = std::max(max_loc, static_cast<int>(t.values(r, cl)));
  }
  Matrix field = Matrix::Zero(static_cast<Eigen::Index>(iters.size()), max_loc + 1);
  for (Eigen::Index r = 0; r < t.values.rows(); ++r)
    field(iter_row[static_cast<int>(t.values(r, ci))], static_cast<int>(t.values(r, cl))) =
        t.values(r, cv);
  return {iters, field};
}

inline void write_summary_csv(const std::string& path, const PredictionSummary& s) {
  std::vector<std::string> header = {"location_index", "post_mean", "post_sd", "q025", "q975"};
  Matrix values(s.post_mean.size(), 5);
  for (Eigen::Index j = 0; j < s.post_mean.size(); ++j) {
    values(j, 0) = j;
    values(j, 1) = s.post_mean[j];
    values(j, 2) = s.post_sd[j];
    values(j, 3) = s.lower[j];
    values(j, 4) = s.upper[j];
  }
  write_csv(path, header, values);
}

inline void write_partition_csv(const std::string& path, const AlternatingPartition& p) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << "point_index,subset_index\n";
  for (std::size_t s = 0; s < p.subsets.size(); ++s)
    for (int x : p.subsets[s]) out << x << "," << s << "\n";
}

inline void write_dag_csv(const std::string& path, const RadialDag& g) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << "child_position,parent_position\n";
  for (int i = 0; i < g.size(); ++i) {
    auto [b, e] = g.parents(i);
    for (auto it = b; it != e; ++it) out << i << "," << *it << "\n";
  }
}

inline void write_factor_csv(const std::string& b_path, const std::string& d_path,
                             const SparseFactor& f) {
  {
    std::ofstream out(b_path);
    if (!out) throw Error("io", "cannot write '" + b_path + "'");
    out << "row,col,value\n";
    for (int i = 0; i < f.size(); ++i)
      for (int k = f.offsets[i]; k < f.offsets[i + 1]; ++k)
        out << i << "," << f.cols[k] << "," << format_value(f.b[k]) << "\n";
  }
  {
    std::ofstream out(d_path);
    if (!out) throw Error("io", "cannot write '" + d_path + "'");
    out << "row,d_value\n";
    for (int i = 0; i < f.size(); ++i) out << i << "," << format_value(f.d[i]) << "\n";
  }
}

// Flat INI-style configuration: `[section]` headers plus `key = value` lines
// address options as `section.key`; `#` and `;` start comments. Every option
// can also arrive pre-dotted (command-line overrides).
class Config {
public:
  Config() = default;

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot open config '" + path + "'");
    Config cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error("cli", "config line " + std::to_string(lineno) + " is not key = value");
      std::string key = detail::trim(line.substr(0, eq));
      std::string value = detail::trim(line.substr(eq + 1));
      cfg.set(section.empty() ? key : section + "." + key, value);
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : detail::parse_double(it->second, "config key " + key);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return static_cast<std::int64_t>(get_double(key, static_cast<double>(fallback)));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("cli", "config key " + key + " is not a boolean: '" + v + "'");
  }

  std::vector<double> get_list(const std::string& key) const {
    auto it = values_.find(key);
    std::vector<double> out;
    if (it == values_.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(detail::parse_double(item, "config key " + key));
    }
    return out;
  }

  // stable content hash for run metadata
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [k, v] : values_) {
      for (char c : k) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
      h = (h ^ '=') * 1099511628211ULL;
      for (char c : v) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
      h = (h ^ '\n') * 1099511628211ULL;
    }
    return h;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

inline KernelSpec kernel_from_config(const Config& cfg) {
  std::string fam = cfg.get("kernel.family", "exponential");
  KernelFamily f = family_from_name(fam);
  // kernel.params.<name> preferred; bare kernel.<name> accepted
  auto param = [&](const char* name, double fallback) {
    std::string dotted = std::string("kernel.params.") + name;
    if (cfg.has(dotted)) return cfg.get_double(dotted, fallback);
    return cfg.get_double(std::string("kernel.") + name, fallback);
  };
  switch (f) {
    case KernelFamily::exponential:
      return KernelSpec::exponential(param("tau2", 1.0), param("phi", 19.97));
    case KernelFamily::matern:
      return KernelSpec::matern(param("sigma2", 1.0), param("alpha", 2.0), param("nu", 0.5));
    case KernelFamily::gaussian:
      return KernelSpec::gaussian(param("sigma2", 1.0), param("a", 1.0));
    case KernelFamily::generalized_cauchy:
      return KernelSpec::generalized_cauchy(param("sigma2", 1.0), param("alpha", 1.0),
                                            param("delta", 1.0), param("lambda", 4.0));
  }
  throw Error("cli", "unreachable kernel family");
}

inline void write_metadata(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
}

}  // namespace radgp
