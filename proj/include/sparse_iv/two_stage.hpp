#pragma once

#include "sparse_iv/tuning.hpp"

#include <optional>
#include <variant>

namespace siv {

struct ExecOptions {
    int threads = 1;
    SolverOptions solver;
};

/// Stage-1 levels: one explicit level per covariate, or cross-validation.
using StageOneTuning = std::variant<std::vector<double>, CvPolicy>;
/// Single-level tuning for stage 2 and the one-stage comparator.
using LevelTuning = std::variant<double, CvPolicy>;

/// Columns of x_hat whose norm is below this fraction of sqrt(n) are dead:
/// excluded from stage 2 and forced to zero.
inline constexpr double kDeadColumnTolerance = 1e-10;

struct StageOneFit {
    Eigen::MatrixXd gamma_hat;  // q x p on the standardized-z scale
    std::vector<double> lambdas;
    Eigen::MatrixXd x_hat;      // z * gamma_hat
    std::vector<Index> dead_columns;
    Eigen::VectorXd xhat_scales;  // sqrt(n) / ||x_hat_j||, zero on dead columns
    std::vector<CvResult> cv;     // per column, when tuned by CV
};

/// A penalized regression on a design that is standardized internally and
/// reported back on the design's own scale.
struct PenalizedFit {
    Eigen::VectorXd beta;               // original design scale
    Eigen::VectorXd beta_standardized;  // coefficients of the sqrt(n)-normed columns
    double level = 0.0;
    std::vector<Index> excluded;        // zero-norm columns, forced to zero
    std::vector<Index> support;
    std::optional<CvResult> cv;
};

struct TwoStageFit {
    StageOneFit stage_one;
    Eigen::VectorXd beta_hat;           // unstandardized x_hat scale
    Eigen::VectorXd beta_standardized;
    double mu = 0.0;
    std::vector<Index> support;
    std::optional<CvResult> mu_cv;
};

struct FitOptions {
    PenaltyFamily family;
    CvPolicy cv;
    std::vector<double> lambdas;  // explicit stage-1 levels; empty means CV
    std::optional<double> mu;     // explicit stage-2 level; empty means CV
    ExecOptions exec;
};

/// Solves the p column-wise penalized regressions of x_j on the live
/// instruments (in parallel, assembled deterministically). Each column is
/// fit along a warm-started path down to its chosen level.
StageOneFit stage_one(const Dataset& d, const StageOneTuning& tuning, PenaltyFamily family,
                      const ExecOptions& exec = {});

TwoStageFit stage_two(const StageOneFit& s1, const Eigen::VectorXd& y, const LevelTuning& tuning,
                      PenaltyFamily family, const ExecOptions& exec = {});

/// stage_one followed by stage_two; all lambdas are fixed before mu is tuned.
TwoStageFit fit_2sr(const Dataset& d, const FitOptions& options);

/// One-stage penalized least squares of y on x, ignoring the instruments.
PenalizedFit fit_pls(const Dataset& d, const LevelTuning& tuning, PenaltyFamily family,
                     const ExecOptions& exec = {});

/// Standardize-solve-backtransform on an arbitrary design.
PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const LevelTuning& tuning,
                           PenaltyFamily family, const SolverOptions& solver = {});

/// Levels of the default grid strictly above `level`, followed by `level`.
std::vector<double> grid_down_to(double top, double level, Index rows, Index cols, int size);

struct OracleFit {
    Eigen::VectorXd pls_beta;
    Eigen::VectorXd two_stage_beta;
    Eigen::MatrixXd gamma;  // q x p, standardized-z scale
    Eigen::MatrixXd x_hat;
    bool rank_deficient = false;
};

/// Unpenalized fits restricted to the true supports: y on x_S for the
/// one-stage oracle; x_j on z restricted to supp(gamma_0j) then y on
/// x_hat_S for the two-stage oracle. Singular systems use a pseudoinverse.
OracleFit fit_oracles(const Dataset& d, const std::vector<Index>& support,
                      const std::vector<std::vector<Index>>& column_supports);

}  // namespace siv
