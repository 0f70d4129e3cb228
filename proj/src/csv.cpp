#include "ddc/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "ddc/error.hpp"

namespace ddc {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# rows=" << m.rows() << " cols=" << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string line;
  long rows = -1, cols = -1;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 ||
      rows < 0 || cols < 0) {
    throw Error(ErrorCode::kIo, path.string() + ": missing dimension header");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kIo, path.string() + ": expected " +
                                      std::to_string(rows) + " data rows");
    }
    std::stringstream ss(line);
    std::string cell;
    long j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= cols) break;
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        throw Error(ErrorCode::kIo, path.string() + ": bad number '" + cell +
                                        "' on data row " + std::to_string(i));
      }
      m(i, j++) = v;
    }
    if (j != cols) {
      throw Error(ErrorCode::kIo, path.string() + ": data row " +
                                      std::to_string(i) + " has wrong width");
    }
  }
  return m;
}

}  // namespace ddc
