#pragma once

#include <Eigen/Dense>

namespace siv {

struct LeastSquares {
    Eigen::VectorXd coeffs;
    bool rank_deficient = false;
};

/// Minimum-norm least squares via a complete orthogonal decomposition with
/// relative pivot cutoff `cutoff` (pseudoinverse semantics when singular).
LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double cutoff = 1e-10);

/// Moore-Penrose pseudoinverse with the same cutoff convention.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double cutoff = 1e-10);

}  // namespace siv
