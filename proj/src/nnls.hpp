#pragma once

#include <Eigen/Dense>

namespace graphwhittle::detail {

/// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                     int max_iterations = 0, double tol = 1e-14);

}  // namespace graphwhittle::detail
