#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nltsa/types.hpp"

namespace nltsa {

struct Table {
  std::vector<std::string> columns;  // empty strings when the file had no header
  Eigen::MatrixXd data;
  std::vector<std::string> comments;  // '#' lines, marker stripped

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

}  // namespace detail

inline Table load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  Table t;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool saw_data_or_header = false;
  Index width = -1;

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = detail::trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      v.remove_prefix(1);
      t.comments.emplace_back(detail::trim(v));
      continue;
    }
    auto fields = detail::split_fields(v);
    if (!saw_data_or_header) {
      saw_data_or_header = true;
      double probe;
      if (!detail::parse_double(fields[0], probe)) {  // header row
        for (auto f : fields) t.columns.emplace_back(f);
        width = static_cast<Index>(fields.size());
        continue;
      }
    }
    if (width < 0) width = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != width) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ragged row, expected " +
                               std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_double(fields[j], row[j])) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": column " + std::to_string(j + 1) +
                                 ": non-numeric value '" + std::string(fields[j]) + "'");
      }
    }
    rows.push_back(std::move(row));
  }

  if (width < 0) throw std::runtime_error(path + ": no data rows");
  t.data.resize(static_cast<Index>(rows.size()), width);
  for (Index i = 0; i < t.data.rows(); ++i)
    for (Index j = 0; j < width; ++j) t.data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (t.columns.empty()) t.columns.assign(static_cast<std::size_t>(width), std::string{});
  return t;
}

inline TimeSeries load_series(const std::string& path, Index column = 0, double dt = 1.0) {
  Table t = load_table(path);
  if (column < 0 || column >= t.cols())
    throw std::out_of_range(path + ": column " + std::to_string(column) + " out of range (file has " +
                            std::to_string(t.cols()) + ")");
  TimeSeries s;
  s.values = t.data.col(column);
  s.dt = dt;
  s.name = t.columns[static_cast<std::size_t>(column)];
  return s;
}

/// Writes a CSV with optional '#' comment lines and a header row.
/// Values carry 15 significant digits so a load/save round trip is lossless to
/// well below 1e-12 relative error.
inline void save_table(const std::string& path, const std::vector<std::string>& columns,
                       const Eigen::MatrixXd& data, const std::vector<std::string>& comments = {}) {
  if (!columns.empty() && static_cast<Index>(columns.size()) != data.cols())
    throw std::invalid_argument("save_table: header width does not match data");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& c : comments) out << "# " << c << "\n";
  if (!columns.empty()) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << "\n";
  }
  char buf[40];
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.15g", data(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline void save_series(const std::string& path, const TimeSeries& s,
                        const std::vector<std::string>& comments = {}) {
  Eigen::MatrixXd m(s.values.size(), 1);
  m.col(0) = s.values;
  save_table(path, {s.name.empty() ? std::string("x") : s.name}, m, comments);
}

}  // namespace nltsa
