// Copyright 2026 The catchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catchain/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "catchain/errors.hpp"

namespace catchain {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  out << join(header) << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("CsvTable: row width differs from header in " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_controls_csv(const std::filesystem::path& path, const ControlSet& controls) {
  CsvTable table;
  table.header.push_back("t");
  for (const auto& l : controls.labels()) table.header.push_back(l);
  for (int k = 0; k < controls.grid().n_steps(); ++k) {
    std::vector<double> row{controls.grid().time(k)};
    for (std::size_t l = 0; l < controls.n_controls(); ++l) row.push_back(controls.value(l, k));
    table.rows.push_back(std::move(row));
  }
  table.write(path);
}

ControlSet read_controls_csv(const std::filesystem::path& path, const TimeGrid& grid,
                             const std::vector<std::string>& labels) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open controls file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("controls file " + path.string() + " is empty");

  std::vector<std::string> expected{"t"};
  expected.insert(expected.end(), labels.begin(), labels.end());
  const auto header = split(line, ',');
  if (header != expected)
    throw ConfigError("controls file " + path.string() + ": header '" + join(header) +
                      "' does not match expected '" + join(expected) + "'");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line, ',');
    if (fields.size() != expected.size())
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected.size()) + " fields, found " +
                        std::to_string(fields.size()));
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != grid.n_steps())
    throw ConfigError("controls file " + path.string() + ": expected nt = " +
                      std::to_string(grid.n_steps()) + " rows, found " + std::to_string(rows.size()));

  Eigen::MatrixXd values(static_cast<Eigen::Index>(labels.size()), grid.n_steps());
  for (int k = 0; k < grid.n_steps(); ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    if (std::abs(row[0] - grid.time(k)) > 1e-9 * std::max(1.0, grid.t_final()))
      throw ConfigError("controls file " + path.string() + ": row " + std::to_string(k) +
                        " has t = " + format_double(row[0]) + ", expected " +
                        format_double(grid.time(k)));
    for (std::size_t l = 0; l < labels.size(); ++l)
      values(static_cast<Eigen::Index>(l), k) = row[l + 1];
  }
  if (!values.allFinite()) throw ConfigError("controls file " + path.string() + ": non-finite value");
  return ControlSet(grid, labels, std::move(values));
}

void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history) {
  CsvTable table{{"iteration", "J_T", "running_cost"}, {}};
  for (const auto& r : history)
    table.rows.push_back({static_cast<double>(r.iteration), r.j_t, r.running_cost});
  table.write(path);
}

void write_wigner(const std::filesystem::path& csv_path, const WignerGrid& grid,
                  const std::string& source) {
  {
    std::ofstream out = open_out(csv_path);
    out << "x,p,W\n";
    for (std::size_t i = 0; i < grid.x_axis.size(); ++i)
      for (std::size_t j = 0; j < grid.p_axis.size(); ++j)
        out << format_double(grid.x_axis[i]) << ',' << format_double(grid.p_axis[j]) << ','
            << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
            << '\n';
  }
  nlohmann::ordered_json meta;
  meta["csv"] = csv_path.filename().string();
  meta["source"] = source;
  meta["mode"] = grid.mode + 1;
  meta["time"] = grid.time;
  meta["x_axis"] = {{"min", grid.x_axis.front()}, {"max", grid.x_axis.back()}, {"n", grid.x_axis.size()}};
  meta["p_axis"] = {{"min", grid.p_axis.front()}, {"max", grid.p_axis.back()}, {"n", grid.p_axis.size()}};
  meta["convention"] = "x=(a+a^dagger)/sqrt(2), p=(a-a^dagger)/(i sqrt(2)), integral 1";
  meta["integral"] = grid.integral();
  meta["boundary_ratio"] = grid.boundary_ratio;
  meta["max_imaginary"] = grid.max_imaginary;
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream out = open_out(json_path);
  out << meta.dump(2) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const DensityMatrix& rho) {
  if (rho.space().n_modes() != 1)
    throw std::invalid_argument("write_density_csv: need a single-mode state");
  CsvTable table{{"m", "n", "re", "im"}, {}};
  const CMatrix& e = rho.entries();
  for (Eigen::Index m = 0; m < e.rows(); ++m)
    for (Eigen::Index n = 0; n < e.cols(); ++n)
      table.rows.push_back({static_cast<double>(m), static_cast<double>(n), e(m, n).real(), e(m, n).imag()});
  table.write(path);
}

DensityMatrix read_density_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open density file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"m", "n", "re", "im"})
    throw ConfigError("density file " + path.string() + ": header must be 'm,n,re,im'");
  std::vector<std::array<double, 4>> entries;
  std::size_t line_no = 1;
  int dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line, ',');
    if (f.size() != 4)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    std::array<double, 4> e{};
    for (std::size_t i = 0; i < 4; ++i) e[i] = parse_double(f[i], path, line_no);
    if (e[0] < 0 || e[1] < 0 || e[0] != std::floor(e[0]) || e[1] != std::floor(e[1]))
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad index");
    dim = std::max({dim, static_cast<int>(e[0]) + 1, static_cast<int>(e[1]) + 1});
    entries.push_back(e);
  }
  if (dim == 0) throw ConfigError("density file " + path.string() + " has no entries");
  CMatrix m = CMatrix::Zero(dim, dim);
  for (const auto& e : entries) m(static_cast<Eigen::Index>(e[0]), static_cast<Eigen::Index>(e[1])) = cplx(e[2], e[3]);
  return DensityMatrix(FockSpace(1, dim), std::move(m));
}

}  // namespace catchain
