#include "qbmor/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "qbmor/errors.hpp"

namespace qbmor::mm {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

Matrix read(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("matrix market: empty input");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    throw FormatError("matrix market: missing %%MatrixMarket matrix banner");
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "double" && field != "integer") {
    throw FormatError("matrix market: unsupported field '" + field + "'");
  }
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") {
    throw FormatError("matrix market: unsupported symmetry '" + symmetry + "'");
  }

  std::string line;
  if (!next_data_line(in, line)) throw FormatError("matrix market: missing size line");
  std::istringstream sizes(line);

  if (format == "array") {
    Index rows = 0, cols = 0;
    if (!(sizes >> rows >> cols) || rows < 0 || cols < 0) {
      throw FormatError("matrix market: bad array size line");
    }
    Matrix m = Matrix::Zero(rows, cols);
    // Column-major; symmetric arrays store the lower triangle only.
    for (Index j = 0; j < cols; ++j) {
      for (Index i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line)) throw FormatError("matrix market: truncated array data");
        std::istringstream vs(line);
        double v = 0.0;
        if (!(vs >> v)) throw FormatError("matrix market: bad value '" + line + "'");
        m(i, j) = v;
        if (symmetric) m(j, i) = v;
      }
    }
    return m;
  }

  if (format == "coordinate") {
    Index rows = 0, cols = 0, nnz = 0;
    if (!(sizes >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw FormatError("matrix market: bad coordinate size line");
    }
    Matrix m = Matrix::Zero(rows, cols);
    for (Index k = 0; k < nnz; ++k) {
      if (!next_data_line(in, line)) throw FormatError("matrix market: truncated coordinate data");
      std::istringstream es(line);
      Index i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v) || i < 1 || j < 1 || i > rows || j > cols) {
        throw FormatError("matrix market: bad entry '" + line + "'");
      }
      m(i - 1, j - 1) += v;
      if (symmetric && i != j) m(j - 1, i - 1) += v;
    }
    return m;
  }

  throw FormatError("matrix market: unsupported format '" + format + "'");
}

Matrix read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return read(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write(std::ostream& out, const Eigen::Ref<const Matrix>& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  out << std::setprecision(17);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) out << m(i, j) << '\n';
  }
}

void write_file(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write(out, m);
}

}  // namespace qbmor::mm
