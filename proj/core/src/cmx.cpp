#include "simnet/cmx.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "simnet/errors.hpp"

namespace simnet::netcore {

void write_cmx(std::ostream& os, const CMatrix& m) {
  os << "cmx " << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ' ';
      os << m(i, j).real() << ' ' << m(i, j).imag();
    }
    os << '\n';
  }
}

void write_cmx(const std::filesystem::path& path, const CMatrix& m) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_cmx(os, m);
}

CMatrix read_cmx(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("cmx: missing header");
  std::istringstream header(line);
  std::string tag;
  Index rows = -1, cols = -1;
  header >> tag >> rows >> cols;
  if (tag != "cmx" || rows < 0 || cols < 0) throw Error("cmx: malformed header '" + line + "'");
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      double re = 0.0, im = 0.0;
      if (!(is >> re >> im)) {
        throw Error("cmx: truncated data at row " + std::to_string(i) + ", col " + std::to_string(j));
      }
      m(i, j) = cplx(re, im);
    }
  }
  return m;
}

CMatrix read_cmx(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return read_cmx(is);
}

}  // namespace simnet::netcore
