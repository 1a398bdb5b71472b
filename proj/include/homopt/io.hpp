/**
 * @file   io.hpp
 *
 * @brief  Plain-text density matrices, 8-bit binary graymaps and CSV tables.
 *
 * A density file holds ny rows of nx space-separated decimals; row j is
 * lattice row j. Blank lines and lines starting with '#' are skipped.
 */
#pragma once

#include "homopt/grid.hpp"
#include "homopt/types.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

namespace homopt {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::ofstream open_for_writing(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::vector<double> read_density(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open density file '" + path.string() + "'");
  std::vector<double> rho;
  rho.reserve(grid.n_pixels());
  std::string line;
  int line_no = 0, rows = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (rows == grid.ny) fail("more than " + std::to_string(grid.ny) + " rows");
    std::istringstream ss(line);
    std::string tok;
    int cols = 0;
    while (ss >> tok) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || errno == ERANGE) fail("cannot parse '" + tok + "' as a number");
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) fail("density " + tok + " outside [0, 1]");
      rho.push_back(v);
      ++cols;
    }
    if (cols != grid.nx) {
      fail("expected " + std::to_string(grid.nx) + " values, found " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows != grid.ny) {
    throw ConfigError(path.string() + ": expected " + std::to_string(grid.ny) + " rows, found " +
                      std::to_string(rows));
  }
  return rho;
}

inline void write_density(const std::filesystem::path& path, const GridSpec& grid, std::span<const double> rho) {
  auto out = open_for_writing(path);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i) out << ' ';
      out << format_double(rho[grid.index(i, j)]);
    }
    out << '\n';
  }
}

/// P5 graymap, rows in lattice order, 0 = void and 255 = solid.
inline std::string pgm_bytes(const GridSpec& grid, std::span<const double> rho) {
  std::string out = "P5\n" + std::to_string(grid.nx) + " " + std::to_string(grid.ny) + "\n255\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double r = std::clamp(rho[grid.index(i, j)], 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * r))));
    }
  }
  return out;
}

inline void write_pgm(const std::filesystem::path& path, const GridSpec& grid, std::span<const double> rho) {
  auto out = open_for_writing(path, true);
  const auto bytes = pgm_bytes(grid, rho);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Comma-separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != header_.size()) throw std::invalid_argument("CSV row width does not match the header");
    rows_.push_back(std::move(r));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + cells[k];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::filesystem::path& path) const { open_for_writing(path) << str(); }

  size_t size() const { return rows_.size(); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
  static std::enable_if_t<std::is_integral_v<I>, std::string> cell(I v) {
    return std::to_string(v);
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace homopt
