#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "edgeseg/errors.hpp"

namespace edgeseg {

// Shortest round-trip decimal form; bit-identical inputs give identical text.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc() ? p : buf);
}

inline std::string format_u64(std::uint64_t v) { return std::to_string(v); }

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string render_csv(const CsvTable& t) {
  if (t.header.empty()) throw EmptyInput("render_csv: no columns");
  std::string out;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c) out += ',';
    out += t.header[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SimulationError("cannot open for writing: " + path);
  f << content;
  if (!f) throw SimulationError("write failed: " + path);
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  write_file(path, render_csv(t));
}

}  // namespace edgeseg
