#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::io {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : f_(path) {
    gf::ad::check(f_.good(), "csv: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i) f_ << (i ? "," : "") << header[i];
    f_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) f_ << (i ? "," : "") << values[i];
    f_ << "\n";
  }

  void row_mixed(const std::vector<std::string>& values) {
    for (size_t i = 0; i < values.size(); ++i) f_ << (i ? "," : "") << values[i];
    f_ << "\n";
  }

  void flush() { f_.flush(); }

 private:
  std::ofstream f_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("csv: no column '" + name + "'");
  }
  double num(size_t row, int c) const { return std::stod(rows[row][c]); }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  gf::ad::check(f.good(), "csv: cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

}  // namespace gf::io
