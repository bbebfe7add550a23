#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

namespace shrinkeq {

// Binary layout "SEQMAT01": 8-byte ASCII magic, then rows and cols as
// little-endian uint64, then rows*cols IEEE float64 values in column order.
// CSV is one line per matrix row with comma-separated full-precision values.

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(const std::string& path);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace shrinkeq
