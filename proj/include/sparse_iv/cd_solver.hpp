#pragma once

#include "sparse_iv/model_core.hpp"

#include <span>
#include <vector>

namespace siv {

struct SolverOptions {
    double tol = 1e-7;   // max absolute coordinate change over a full sweep
    int max_iter = 10000;  // sweeps, counting active-set sweeps
    bool record_objective = false;
};

struct SolveResult {
    Eigen::VectorXd coeffs;
    int iterations = 0;
    bool converged = false;
    /// 0.5/n ||y - A b||^2 + sum_j p(|b_j|)
    double objective = 0.0;
    std::vector<Index> active_set;
    /// Objective after every sweep, when SolverOptions::record_objective is set.
    std::vector<double> objective_trace;
    /// y - A b as maintained by the sweeps (residual-form solves only).
    Eigen::VectorXd residual;
};

struct PathResult {
    std::vector<double> grid;
    std::vector<SolveResult> results;
    bool warm_started = true;
};

/// Sufficient statistics of a least-squares problem with a standardized
/// design: gram = A^T A / n (unit diagonal), corr = A^T y / n and
/// response_ss = y^T y / n. Lets many responses share one Gram matrix.
struct GramProblem {
    const Eigen::MatrixXd* gram = nullptr;
    Eigen::VectorXd corr;
    double response_ss = 0.0;
};

/// Throws Error(Input) naming the first column whose L2 norm differs from
/// sqrt(n) by more than 1e-8 sqrt(n).
void check_standardized(const Eigen::MatrixXd& a);

/// Cyclic coordinate descent on 0.5/n ||y - A b||^2 + sum_j p(|b_j|) with an
/// incrementally maintained residual. Columns of A must have norm sqrt(n).
/// Alternates full sweeps with sweeps over the nonzero coefficients; only a
/// full sweep can declare convergence.
SolveResult solve_pls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const PenaltySpec& spec,
                      const Eigen::VectorXd& init, const SolverOptions& options = {});

/// Same iteration driven by covariance updates of the gradient.
SolveResult solve_pls(const GramProblem& problem, const PenaltySpec& spec, const Eigen::VectorXd& init,
                      const SolverOptions& options = {});

/// Warm-started path over a strictly decreasing grid of levels, starting
/// from zero at grid[0].
PathResult solve_path(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, PenaltyFamily family,
                      std::span<const double> grid, const SolverOptions& options = {});

PathResult solve_path(const GramProblem& problem, PenaltyFamily family, std::span<const double> grid,
                      const SolverOptions& options = {});

/// ||A^T y / n||_inf, the smallest Lasso level with an all-zero solution.
double max_level(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

/// `size` log-spaced levels from `top` down to ratio * top, where the ratio
/// is 0.01, or 0.05 when the design is wider than it is tall. A zero top
/// gives the single-level grid {0}.
std::vector<double> default_grid(double top, Index rows, Index cols, int size = 100);

/// Throws Error(Input) unless the grid is nonempty, finite, nonnegative and
/// strictly decreasing.
void check_grid(std::span<const double> grid);

}  // namespace siv
