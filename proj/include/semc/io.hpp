// Text formats used repo-wide.
//
// Matrix file: first line "rows cols", then one line per row with cols
// whitespace-separated decimals at full precision (round-trip safe).
// Pattern file: "rows cols", then one "i j" pair per observed entry,
// zero-indexed, row-major order.
// Manifest file: "key value" lines, '#' starts a comment line.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semc/dense.hpp"

namespace semc {

class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

inline void write_matrix(std::ostream& os, const Matrix& a) {
  os << a.rows() << ' ' << a.cols() << '\n';
  os << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) os << ' ';
      os << a(i, j);
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is) {
  Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 1 || cols < 1) {
    throw ParseError("read_matrix: bad header");
  }
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(is >> a(i, j))) {
        throw ParseError("read_matrix: truncated data at row " + std::to_string(i));
      }
    }
  }
  return a;
}

inline void write_matrix_file(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  write_matrix(os, a);
}

inline Matrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path.string());
  return read_matrix(is);
}

inline void write_pattern(std::ostream& os, const SamplingPattern& p) {
  os << p.rows() << ' ' << p.cols() << '\n';
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j < p.cols(); ++j) {
      if (p.mask(i, j)) os << i << ' ' << j << '\n';
    }
  }
}

inline SamplingPattern read_pattern(std::istream& is) {
  Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 1 || cols < 1) {
    throw ParseError("read_pattern: bad header");
  }
  SamplingPattern p = SamplingPattern::none(rows, cols);
  Index i = 0, j = 0;
  while (is >> i >> j) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw ParseError("read_pattern: index out of range");
    }
    p.mask(i, j) = true;
  }
  return p;
}

inline void write_pattern_file(const std::filesystem::path& path, const SamplingPattern& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  write_pattern(os, p);
}

inline SamplingPattern read_pattern_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path.string());
  return read_pattern(is);
}

using Manifest = std::vector<std::pair<std::string, std::string>>;

inline void write_manifest(std::ostream& os, const Manifest& entries) {
  for (const auto& [key, value] : entries) {
    os << key << ' ' << value << '\n';
  }
}

inline Manifest read_manifest(std::istream& is) {
  Manifest entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    std::string value;
    std::getline(ls, value);
    const auto pos = value.find_first_not_of(" \t");
    value = pos == std::string::npos ? std::string{} : value.substr(pos);
    entries.emplace_back(key, value);
  }
  return entries;
}

inline void write_manifest_file(const std::filesystem::path& path, const Manifest& entries) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  write_manifest(os, entries);
}

inline Manifest read_manifest_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path.string());
  return read_manifest(is);
}

}  // namespace semc
