#pragma once

#include "sparse_iv/two_stage.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace siv {

enum class StabilityMode { TwoStage, Pls };

struct StabilityOptions {
    int subsamples = 100;
    std::uint64_t seed = 1;
    int grid_size = 100;
    std::vector<double> grid;  // empty: default grid from the full-data fit
    StabilityMode mode = StabilityMode::TwoStage;
    /// Re-run stage 1 (with stage_one_cv) on every subsample instead of
    /// subsampling rows of the full-data x_hat. Much slower.
    bool refit_stage_one = false;
    CvPolicy stage_one_cv;
    int threads = 1;
    SolverOptions solver;
};

struct StabilityPath {
    std::vector<double> mu_grid;
    Eigen::MatrixXd probs;  // p x grid size
    int n_subsamples = 0;
    Index subsample_size = 0;
    std::uint64_t seed = 0;
    std::vector<int> failures;  // failed subsample fits per level, excluded from that level's denominator
};

/// Selection frequencies over `subsamples` draws of floor(n/2) rows without
/// replacement. Subsample b uses substream (seed, b); each subsample fits a
/// warm-started path over `grid` on its rows, re-standardized.
StabilityPath stability_paths(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::span<const double> grid,
                              PenaltyFamily family, const StabilityOptions& options);

/// Stability selection on a prepared dataset. Two-stage mode fixes stage 1
/// (tuned by options.stage_one_cv) on the full data unless refit_stage_one.
StabilityPath stability_selection(const Dataset& d, PenaltyFamily family, const StabilityOptions& options);

/// Covariates whose maximum probability over the grid is at least
/// `threshold`, by decreasing probability and then increasing index.
std::vector<std::pair<Index, double>> max_selection_probability(const StabilityPath& path, double threshold);

}  // namespace siv
