#pragma once

#include "sparse_iv/model_core.hpp"
#include "sparse_iv/rng.hpp"

#include <cmath>
#include <random>

namespace siv::testing {

inline Eigen::MatrixXd gaussian(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
    return m;
}

inline Eigen::VectorXd gaussian_vector(Index n, Rng& rng) { return gaussian(n, 1, rng).col(0); }

// Centers every column and rescales it to norm sqrt(rows).
inline Eigen::MatrixXd standardize(Eigen::MatrixXd m) {
    const double root_n = std::sqrt(static_cast<double>(m.rows()));
    for (Index j = 0; j < m.cols(); ++j) {
        m.col(j).array() -= m.col(j).mean();
        m.col(j) *= root_n / m.col(j).norm();
    }
    return m;
}

// Columns with A^T A / n = I: scaled columns of an orthonormal basis.
inline Eigen::MatrixXd orthogonal_design(Index rows, Index cols, Rng& rng) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rows, cols, rng));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    return q * std::sqrt(static_cast<double>(rows));
}

// Minimizer of 0.5 (z - theta)^2 + pen(|theta|) on a 1e-5 grid over
// [min(0, z), max(0, z)]. The objective is convex for the supported shapes,
// so a 1e-3 scan refined at 1e-5 around its best point finds the fine-grid
// minimizer.
template <class Pen>
double grid_minimizer(double z, Pen pen) {
    auto f = [&](double t) { return 0.5 * (z - t) * (z - t) + pen(std::abs(t)); };
    const double lo = std::min(0.0, z);
    const double hi = std::max(0.0, z);
    auto scan = [&](double from, double to, double step) {
        double best = from;
        double best_val = f(from);
        const long count = static_cast<long>(std::floor((to - from) / step + 1e-9));
        for (long k = 1; k <= count; ++k) {
            const double t = from + step * static_cast<double>(k);
            const double v = f(t);
            if (v < best_val) {
                best_val = v;
                best = t;
            }
        }
        if (f(to) < best_val) best = to;
        return best;
    };
    const double coarse = scan(lo, hi, 1e-3);
    return scan(std::max(lo, coarse - 2e-3), std::min(hi, coarse + 2e-3), 1e-5);
}

}  // namespace siv::testing
