#pragma once
// Numeric CSV input/output. Reading detects an optional header row; writing
// uses round-trip-exact decimal formatting (17 significant digits).
#include <string>
#include <vector>

#include "rsbfm/types.hpp"

namespace rsbfm {

struct csv_error : std::runtime_error {
  int row;     // 1-based line number in the file
  int column;  // 1-based field number, 0 when the whole row is at fault
  csv_error(const std::string& what, int r, int c)
      : std::runtime_error(what + " at row " + std::to_string(r) +
                           (c > 0 ? ", column " + std::to_string(c) : std::string())),
        row(r),
        column(c) {}
};

struct CsvTable {
  MatrixXd values;
  std::vector<std::string> column_names;  // empty when the file had no header
};

CsvTable read_matrix_csv(const std::string& path);

// round-trip-exact float formatting shared by every writer
std::string format_double(double v);

void write_matrix_csv(const std::string& path, const MatrixXd& m,
                      const std::vector<std::string>& header = {});

}  // namespace rsbfm
