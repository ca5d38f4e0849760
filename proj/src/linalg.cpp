#include "sparse_iv/linalg.hpp"

namespace siv {

LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double cutoff) {
    LeastSquares out;
    if (a.cols() == 0) {
        out.coeffs.resize(0);
        return out;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.rows(), a.cols());
    cod.setThreshold(cutoff);
    cod.compute(a);
    out.rank_deficient = cod.rank() < a.cols();
    out.coeffs = cod.solve(b);
    return out;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double cutoff) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a.rows(), a.cols());
    cod.setThreshold(cutoff);
    cod.compute(a);
    return cod.pseudoInverse();
}

}  // namespace siv
