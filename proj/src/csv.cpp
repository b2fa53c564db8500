#include "rsbfm/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rsbfm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

enum class field_kind { ok, non_numeric, non_finite };

field_kind parse_field(const std::string& raw, double& out) {
  std::string s = trim(raw);
  if (s.empty()) return field_kind::non_numeric;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) return field_kind::non_numeric;
  return std::isfinite(out) ? field_kind::ok : field_kind::non_finite;
}

}  // namespace

CsvTable read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (first_content_line) {
      first_content_line = false;
      double probe;
      // a first line whose leading field is non-numeric (not merely non-finite,
      // e.g. "NaN") is taken as a header row
      if (parse_field(fields[0], probe) == field_kind::non_numeric) {
        for (auto& f : fields) table.column_names.push_back(trim(f));
        width = fields.size();
        continue;
      }
      width = fields.size();
    }
    if (fields.size() != width)
      throw csv_error("ragged row: expected " + std::to_string(width) + " fields, got " +
                          std::to_string(fields.size()),
                      lineno, 0);
    std::vector<double> vals(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (parse_field(fields[c], vals[c]) != field_kind::ok)
        throw csv_error("non-numeric or non-finite value '" + trim(fields[c]) + "'",
                        lineno, static_cast<int>(c + 1));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument("no data rows in " + path);
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const MatrixXd& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      out << (c ? "," : "") << header[c];
    out << "\n";
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << format_double(m(r, c));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace rsbfm
