#ifndef POTVINE_CSV_HPP
#define POTVINE_CSV_HPP

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "potvine/errors.hpp"
#include "potvine/numeric.hpp"

namespace potvine {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

// Strict numeric CSV reader: one header row, no missing cells. Errors carry
// 1-based line numbers.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  const std::size_t ncol = table.header.size();
  if (ncol == 0) throw DataError("csv has no columns: " + path);

  std::vector<double> values;
  std::size_t nrow = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty())
        throw DataError(path + ":" + std::to_string(lineno) + ": missing value");
      double v = 0.0;
      const char* b = cell.data();
      const char* e = b + cell.size();
      const auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc{} || res.ptr != e)
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                        cell + "'");
      values.push_back(v);
      ++col;
    }
    if (col != ncol)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(ncol) + " cells, found " + std::to_string(col));
    ++nrow;
  }
  if (nrow == 0) throw DataError("csv has no data rows: " + path);
  table.values = Matrix(nrow, ncol);
  table.values.data() = std::move(values);
  return table;
}

// Fixed deterministic float formatting for all emitted files.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw IoError("cannot open output file: " + path);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace potvine

#endif  // POTVINE_CSV_HPP
