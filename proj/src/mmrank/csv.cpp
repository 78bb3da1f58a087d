// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmrank/errors.hpp"

namespace mmrank {
namespace {

std::string slurp(std::string const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

// Splits one line on commas; double quotes group a field and "" escapes a quote.
std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(trim(cur));
  return out;
}

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> split_lines(std::string const& text) {
  std::vector<Line> out;
  std::size_t start = 0, number = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    const std::string_view raw(text.data() + start, end - start);
    if (!trim(raw).empty()) out.push_back({number, split_line(raw, number)});
    start = end + 1;
  }
  return out;
}

bool parse_number(std::string const& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double cell_value(std::string const& s, std::size_t line, std::size_t col) {
  double v = 0.0;
  if (!parse_number(s, v) || !std::isfinite(v))
    throw DataError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                    ": expected a finite number, found '" + s + "'");
  return v;
}

}  // namespace

Dataset parse_data_csv(std::string const& text, CsvLayout const& layout) {
  const auto lines = split_lines(text);
  std::vector<std::string> col_names;
  std::size_t first = 0;
  if (lines.empty()) return {};
  if (layout.header) {
    col_names = lines[0].fields;
    if (layout.ids) col_names.erase(col_names.begin());
    first = 1;
  }
  const std::size_t skip = layout.ids ? 1 : 0;
  std::size_t width = layout.header ? col_names.size() : 0;
  std::vector<std::string> row_names;
  std::vector<std::vector<double>> rows;
  for (std::size_t r = first; r < lines.size(); ++r) {
    auto const& ln = lines[r];
    if (ln.fields.size() < skip + 1)
      throw DataError("line " + std::to_string(ln.number) + ": no values");
    const std::size_t n_values = ln.fields.size() - skip;
    if (width == 0) width = n_values;
    if (n_values != width)
      throw DataError("line " + std::to_string(ln.number) + ": expected " +
                      std::to_string(width) + " values, found " + std::to_string(n_values) +
                      " (ragged row)");
    if (layout.ids) row_names.push_back(ln.fields[0]);
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) row[c] = cell_value(ln.fields[c + skip], ln.number, c + skip + 1);
    rows.push_back(std::move(row));
  }

  Dataset out;
  const auto R = static_cast<Eigen::Index>(rows.size());
  const auto C = static_cast<Eigen::Index>(width);
  if (layout.features_as_rows) {
    out.values.resize(R, C);
    for (Eigen::Index r = 0; r < R; ++r)
      for (Eigen::Index c = 0; c < C; ++c) out.values(r, c) = rows[r][c];
    out.feature_names = row_names;
    out.sample_ids = col_names;
  } else {
    out.values.resize(C, R);
    for (Eigen::Index r = 0; r < R; ++r)
      for (Eigen::Index c = 0; c < C; ++c) out.values(c, r) = rows[r][c];
    out.sample_ids = row_names;
    out.feature_names = col_names;
  }
  if (out.sample_ids.empty())
    for (std::size_t n = 0; n < out.samples(); ++n) out.sample_ids.push_back(std::to_string(n + 1));
  return out;
}

Dataset read_data_csv(std::string const& path, CsvLayout const& layout) {
  return parse_data_csv(slurp(path), layout);
}

LabelVector parse_labels_csv(std::string const& text) {
  // Keep blank lines here: a blank line is a missing label.
  std::vector<std::pair<std::size_t, std::string>> cells;
  std::size_t start = 0, number = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    auto fields = split_line(std::string_view(text.data() + start, end - start), number);
    if (fields.size() > 2)
      throw DataError("line " + std::to_string(number) + ": expected one label column");
    cells.emplace_back(number, fields.back());
    start = end + 1;
  }
  double probe = 0.0;
  // A non-numeric first cell is a header.
  if (!cells.empty() && !cells.front().second.empty() && !parse_number(cells.front().second, probe))
    cells.erase(cells.begin());

  std::vector<int> raw;
  bool saw_negative = false;
  for (auto const& [line, cell] : cells) {
    if (cell.empty()) {
      raw.push_back(2);  // missing
      continue;
    }
    double v = 0.0;
    if (!parse_number(cell, v) || (v != -1.0 && v != 0.0 && v != 1.0))
      throw DataError("line " + std::to_string(line) + ": label must be -1, 0, +1 or blank, found '" +
                      cell + "'");
    if (v < 0.0) saw_negative = true;
    raw.push_back(static_cast<int>(v));
  }
  LabelVector out;
  out.reserve(raw.size());
  for (int v : raw) {
    if (v == 2) out.push_back(0);
    else if (v == 0 && !saw_negative) out.push_back(-1);
    else out.push_back(static_cast<std::int8_t>(v));
  }
  return out;
}

LabelVector read_labels_csv(std::string const& path) { return parse_labels_csv(slurp(path)); }

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string format_csv(CsvTable const& table) {
  auto quote = [](std::string const& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  auto emit = [&](std::vector<std::string> const& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += quote(row[c]);
    }
    out += '\n';
  };
  emit(table.header);
  for (auto const& row : table.rows) emit(row);
  return out;
}

void write_csv(std::string const& path, CsvTable const& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << format_csv(table);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace mmrank
