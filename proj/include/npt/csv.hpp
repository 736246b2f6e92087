#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace npt {

// Minimal CSV support: UTF-8, comma separator, '.' decimal point, header row
// required, no quoting (fields may not contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

// Parses all columns of a CSV as doubles, requiring the exact header names.
Eigen::MatrixXd read_numeric_csv(const std::string& path,
                                 const std::vector<std::string>& expected_header);

double parse_double(const std::string& text, const std::string& context);

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

// Writes via a temporary file in the same directory, then renames.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace npt
