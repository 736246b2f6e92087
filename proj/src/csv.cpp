#include "npt/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "npt/errors.hpp"

namespace npt {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace and a trailing CR from DOS line endings.
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ' ||
                              field.back() == '\t')) {
      field.pop_back();
    }
    std::size_t start = 0;
    while (start < field.size() && (field[start] == ' ' || field[start] == '\t')) {
      ++start;
    }
    fields.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("file '" + path + "' is empty (header row required)");
  }
  table.header = split_line(line);
  if (table.header.empty()) {
    throw ValidationError("file '" + path + "' has an empty header row");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << table.header.size()
          << " fields, found " << fields.size();
      throw ValidationError(msg.str());
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

double parse_double(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ValidationError(context + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

Eigen::MatrixXd read_numeric_csv(
    const std::string& path, const std::vector<std::string>& expected_header) {
  const CsvTable table = read_csv(path);
  if (table.header != expected_header) {
    std::ostringstream msg;
    msg << path << ": malformed header; expected";
    for (const auto& h : expected_header) msg << " " << h;
    throw ValidationError(msg.str());
  }
  Eigen::MatrixXd out(table.rows.size(), expected_header.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < expected_header.size(); ++c) {
      std::ostringstream ctx;
      ctx << path << " row " << (r + 2) << " column " << expected_header[c];
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(table.rows[r][c], ctx.str());
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw ValidationError("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw ValidationError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace npt
