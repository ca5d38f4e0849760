#pragma once

#include "sparse_iv/cd_solver.hpp"

#include <cstdint>
#include <vector>

namespace siv {

/// K-fold cross-validation settings. An empty grid asks for default_grid()
/// built from the full-data max_level with `grid_size` levels.
struct CvPolicy {
    int folds = 10;
    std::uint64_t seed = 1;
    int grid_size = 100;
    std::vector<double> grid;
};

struct CvResult {
    std::vector<double> grid;
    /// Mean over folds of the held-out sum of squared errors, per level.
    std::vector<double> cv_error;
    double chosen = 0.0;
    std::size_t chosen_index = 0;
    std::vector<int> fold_assignment;
    std::uint64_t seed = 0;
};

/// Seeded uniform permutation of 0..n-1 cut into K contiguous blocks whose
/// sizes differ by at most one (the first n mod K blocks are larger).
std::vector<int> make_folds(Index n, int folds, std::uint64_t seed);

/// Columns of a row subset of a design, rescaled to norm sqrt(rows) without
/// re-centering. Columns whose subset norm vanishes are left out.
struct StandardizedDesign {
    Eigen::MatrixXd a;          // rows x live.size()
    Eigen::MatrixXd gram;       // a^T a / rows
    std::vector<Index> live;    // original column index of each column of a
    Eigen::VectorXd scales;     // a.col(k) = design.col(live[k]) * scales(k)
    Index source_cols = 0;

    static StandardizedDesign build(const Eigen::MatrixXd& design, const std::vector<Index>& rows);
    static StandardizedDesign build(const Eigen::MatrixXd& design);

    /// Sufficient statistics for regressing `response` (already restricted
    /// to the same rows) on this design.
    GramProblem problem(const Eigen::VectorXd& response) const;

    /// Maps coefficients on the standardized live columns back to the
    /// original design's scale, padded with zeros.
    Eigen::VectorXd to_original(const Eigen::VectorXd& coeffs) const;
};

/// A design split by a fold assignment, with the training part of every fold
/// standardized once and reused for any number of responses.
class FoldedDesign {
public:
    FoldedDesign(const Eigen::MatrixXd& design, std::vector<int> fold_assignment, int folds);

    int folds() const { return static_cast<int>(folds_.size()); }
    const std::vector<int>& assignment() const { return assignment_; }

    /// Mean held-out SSE over `grid`: for each fold, a warm-started
    /// path from zero on the training rows, scored by held-out SSE.
    CvResult evaluate(const Eigen::VectorXd& response, std::span<const double> grid, PenaltyFamily family,
                      const SolverOptions& solver = {}) const;

private:
    struct Fold {
        std::vector<Index> train;
        std::vector<Index> test;
        StandardizedDesign design;
        Eigen::MatrixXd test_design;  // held-out rows of the live columns, training scales applied
    };
    std::vector<int> assignment_;
    std::vector<Fold> folds_;
};

/// Index of the smallest CV error; ties go to the earlier (larger) level.
std::size_t argmin_cv(const std::vector<double>& cv_error);

/// CV for one stage-1 column: x_j regressed on the prepared instruments.
CvResult cv_stage_one_column(const Eigen::MatrixXd& z, const Eigen::VectorXd& x_j, std::span<const double> grid,
                             int folds, std::uint64_t seed, PenaltyFamily family, const SolverOptions& solver = {});

/// CV for the stage-2 level with the first-stage prediction held fixed; only
/// rows are held out.
CvResult cv_stage_two(const Eigen::MatrixXd& x_hat, const Eigen::VectorXd& y, std::span<const double> grid,
                      int folds, std::uint64_t seed, PenaltyFamily family, const SolverOptions& solver = {});

}  // namespace siv
