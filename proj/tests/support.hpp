#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing {

struct CsvRow {
  std::map<std::string, std::string> cells;
  double num(const std::string& key) const { return std::stod(cells.at(key)); }
  const std::string& str(const std::string& key) const { return cells.at(key); }
};

inline std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string h; std::getline(ss, h, ',');) header.push_back(h);
  }
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    CsvRow r;
    for (const auto& h : header) std::getline(ss, r.cells[h], ',');
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace testing
