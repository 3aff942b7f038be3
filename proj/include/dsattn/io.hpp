// Copyright 2026 The dsattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsattn/attention.hpp"
#include "dsattn/core.hpp"

// Matrix file formats.
//   CSV:  one row per line, comma-separated decimals, shape inferred.
//   JSON: {"n": <int>, "data": [n*n numbers, row-major]}.

namespace dsattn::io {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, std::size_t line) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw UsageError("malformed number '" + std::string(tok) + "' on line " + std::to_string(line));
  return v;
}

/// Rectangular CSV; blank lines are skipped.
inline DenseMatrix read_dense_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t count = 0, start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      data.push_back(parse_double(std::string_view(line).substr(start, comma - start), line_no));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw UsageError("ragged CSV row on line " + std::to_string(line_no));
    ++rows;
  }
  if (rows == 0) throw UsageError("empty matrix file");
  return DenseMatrix(rows, cols, std::move(data));
}

inline SquareMatrix read_matrix_csv(std::istream& in) {
  DenseMatrix d = read_dense_csv(in);
  if (d.rows() != d.cols()) throw UsageError("matrix CSV is not square");
  return SquareMatrix(d.rows(), d.values());
}

inline SquareMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("data") || !j["n"].is_number_integer() ||
      !j["data"].is_array())
    throw UsageError("matrix JSON must be an object with integer 'n' and array 'data'");
  const auto n = j["n"].get<long long>();
  if (n < 1) throw UsageError("matrix JSON: n must be >= 1");
  std::vector<double> data;
  for (const auto& v : j["data"]) {
    if (!v.is_number()) throw UsageError("matrix JSON: non-numeric entry");
    data.push_back(v.get<double>());
  }
  if (data.size() != static_cast<std::size_t>(n * n))
    throw UsageError("matrix JSON: data has " + std::to_string(data.size()) + " entries, expected n^2");
  return SquareMatrix(static_cast<std::size_t>(n), std::move(data));
}

inline SquareMatrix read_matrix_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed matrix JSON: ") + e.what());
  }
  return matrix_from_json(j);
}

inline bool looks_like_json(const std::string& path, std::istream& in) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return true;
  const int c = (in >> std::ws).peek();
  return c == '{';
}

inline SquareMatrix read_matrix(std::istream& in, const std::string& path_hint = {}) {
  return looks_like_json(path_hint, in) ? read_matrix_json(in) : read_matrix_csv(in);
}

inline SquareMatrix read_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open matrix file '" + path + "'");
  return read_matrix(f, path);
}

inline DenseMatrix read_dense_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open matrix file '" + path + "'");
  return read_dense_csv(f);
}

inline void write_csv(std::ostream& out, const SquareMatrix& m) {
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.n(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline nlohmann::json to_json(const SquareMatrix& m) {
  return {{"n", m.n()}, {"data", m.values()}};
}

inline nlohmann::json to_json(const StochasticityReport& r) {
  nlohmann::json j{{"max_row_deviation", r.max_row_deviation},
                   {"max_col_deviation", r.max_col_deviation},
                   {"min_entry", r.min_entry}};
  if (r.frobenius_to_birkhoff) j["frobenius_to_birkhoff"] = *r.frobenius_to_birkhoff;
  return j;
}

}  // namespace dsattn::io
