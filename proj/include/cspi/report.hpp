#pragma once

// CSV emission with fixed formatting so repeated runs are byte-identical:
// doubles use %.17g (shortest round-trippable width), integers plain decimal.
// Files land via write-to-temp + rename so partial output never appears.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cspi/common.hpp"
#include "cspi/errors.hpp"

namespace cspi {

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_complex_pair(Complex z) {
  return format_double(z.real()) + "," + format_double(z.imag());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header.size()) {
      throw validation_error("CsvTable: row width disagrees with header");
    }
    rows.push_back(std::move(cells));
  }

  std::string serialize() const {
    std::ostringstream out;
    auto join = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
      }
      out << '\n';
    };
    join(header);
    for (const auto& row : rows) join(row);
    return out.str();
  }
};

// Minimal CSV reader for the files this tool writes: no quoting, no escapes.
inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.add_row(std::move(cells));
    }
  }
  return table;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw integration_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw integration_error("write failure: " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace cspi
