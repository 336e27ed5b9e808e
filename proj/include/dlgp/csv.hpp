#ifndef DLGP_CSV_HPP
#define DLGP_CSV_HPP

#include "error.hpp"
#include "linalg.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dlgp::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return npos;
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

/// Reads a header plus numeric rows. Ragged rows, non-numeric cells and
/// non-finite values are rejected with the offending line number.
inline Table read_numeric(const std::filesystem::path& path) {
  auto in = open_input(path);
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    if (!have_header) {
      table.header = split(line);
      have_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], row[c]))
        throw InputError(path.string() + " line " + std::to_string(line_no) + ": cannot parse '" + cells[c] +
                         "' in column " + table.header[c]);
      if (!std::isfinite(row[c]))
        throw InputError(path.string() + " line " + std::to_string(line_no) + ": non-finite value in column " +
                         table.header[c]);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw InputError(path.string() + " is empty");
  return table;
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot write " + path.string());
  }

  void header(const std::vector<std::string>& names) { row_strings(names); }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  Writer& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  Writer& cell(double v) { return cell(format_double(v)); }
  Writer& cell(long long v) { return cell(std::to_string(v)); }
  Writer& cell(std::size_t v) { return cell(std::to_string(v)); }
  Writer& cell(int v) { return cell(std::to_string(v)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }

  void close() {
    out_.flush();
    if (!out_) throw InputError("write failed for " + path_.string());
    out_.close();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline std::vector<std::string> numbered(const std::string& prefix, std::size_t n, std::size_t first = 1) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + first));
  return out;
}

}  // namespace dlgp::csv

#endif
