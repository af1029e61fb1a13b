#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rwl1/linalg.hpp"

namespace rwl1::mm {

/// Parse or I/O failure; the message names the source.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Dense array format: header, "rows cols", then entries in column-major order.
inline void write_array(std::ostream& os, const DenseMatrix& m) {
  os << "%%MatrixMarket matrix array real general\n";
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) os << format_real(m(i, j)) << '\n';
}

inline void write_array(std::ostream& os, const Vector& v) {
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n";
  for (Index i = 0; i < v.size(); ++i) os << format_real(v(i)) << '\n';
}

/// Reads "%%MatrixMarket matrix array real general" files and also bare
/// dimension-first text (no banner). Lines starting with '%' are comments.
inline DenseMatrix read_array(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  bool have_dims = false;
  Index rows = 0;
  Index cols = 0;
  bool first = true;
  while (std::getline(is, line)) {
    if (first && line.rfind("%%MatrixMarket", 0) == 0) {
      std::istringstream banner(line.substr(14));
      std::string object, format, field, symmetry;
      banner >> object >> format >> field >> symmetry;
      if (object != "matrix" || format != "array" || (field != "real" && field != "double") ||
          (!symmetry.empty() && symmetry != "general"))
        throw FormatError(source + ": unsupported MatrixMarket banner '" + line + "'");
    }
    first = false;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream dims(line);
    if (!(dims >> rows >> cols) || rows < 0 || cols < 0)
      throw FormatError(source + ": malformed dimension line '" + line + "'");
    have_dims = true;
    break;
  }
  if (!have_dims) throw FormatError(source + ": missing dimension line");

  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      double v = 0.0;
      if (!(is >> v)) throw FormatError(source + ": expected " + std::to_string(rows * cols) + " entries");
      m(i, j) = v;
    }
  }
  if (!m.allFinite()) throw FormatError(source + ": non-finite entry");
  return m;
}

inline Vector read_vector(std::istream& is, const std::string& source = "<stream>") {
  const DenseMatrix m = read_array(is, source);
  if (m.cols() != 1 && m.rows() != 1)
    throw FormatError(source + ": expected a vector, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  return m.cols() == 1 ? Vector(m.col(0)) : Vector(m.row(0).transpose());
}

inline DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_array(in, path);
}

inline Vector load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_vector(in, path);
}

template <typename T>
void save(const std::string& path, const T& value) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  write_array(out, value);
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace rwl1::mm
