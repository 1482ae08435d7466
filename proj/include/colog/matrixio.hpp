#pragma once

#include <string>

#include <Eigen/Dense>

namespace colog {

// Binary matrix file: two little-endian uint64 (rows, cols) followed by
// row-major 32-bit floats. Used for event-vector stores and exports.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);  // throws DataError

}  // namespace colog
