#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace ddc {

/// Matrix CSV: a "# rows=R cols=C" header line, then R comma-separated rows
/// printed as shortest round-trip decimals.
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal for `v`.
std::string format_double(double v);

}  // namespace ddc
