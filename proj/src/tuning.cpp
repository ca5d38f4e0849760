#include "sparse_iv/tuning.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace siv {

std::vector<int> make_folds(Index n, int folds, std::uint64_t seed) {
    if (folds < 2 || folds > n)
        fail_input("number of folds must be between 2 and n = " + std::to_string(n) + ", got " +
                   std::to_string(folds));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng = make_stream(seed, 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<int> assignment(static_cast<std::size_t>(n));
    const Index base = n / folds;
    const Index extra = n % folds;
    Index pos = 0;
    for (int k = 0; k < folds; ++k) {
        const Index size = base + (k < extra ? 1 : 0);
        for (Index i = 0; i < size; ++i) assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = k;
    }
    return assignment;
}

StandardizedDesign StandardizedDesign::build(const Eigen::MatrixXd& design, const std::vector<Index>& rows) {
    StandardizedDesign sd;
    sd.source_cols = design.cols();
    const Index n = static_cast<Index>(rows.size());
    if (n < 1) fail_input("empty row subset");
    const double root_n = std::sqrt(static_cast<double>(n));

    Eigen::MatrixXd sub(n, design.cols());
    for (Index i = 0; i < n; ++i) sub.row(i) = design.row(rows[static_cast<std::size_t>(i)]);

    std::vector<double> scales;
    for (Index j = 0; j < design.cols(); ++j) {
        const double norm = sub.col(j).norm();
        if (norm > 1e-10 * root_n) {
            sd.live.push_back(j);
            scales.push_back(root_n / norm);
        }
    }
    sd.scales = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Index>(scales.size()));
    sd.a.resize(n, static_cast<Index>(sd.live.size()));
    for (std::size_t k = 0; k < sd.live.size(); ++k)
        sd.a.col(static_cast<Index>(k)) = sub.col(sd.live[k]) * scales[k];
    sd.gram.resize(sd.a.cols(), sd.a.cols());
    sd.gram.setZero();
    sd.gram.selfadjointView<Eigen::Lower>().rankUpdate(sd.a.transpose(), 1.0 / static_cast<double>(n));
    sd.gram.triangularView<Eigen::StrictlyUpper>() = sd.gram.transpose();
    // Pin the unit diagonal against rounding in the rank update.
    sd.gram.diagonal().setOnes();
    return sd;
}

StandardizedDesign StandardizedDesign::build(const Eigen::MatrixXd& design) {
    std::vector<Index> rows(static_cast<std::size_t>(design.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    return build(design, rows);
}

GramProblem StandardizedDesign::problem(const Eigen::VectorXd& response) const {
    if (response.size() != a.rows()) fail_input("response length does not match design rows");
    GramProblem gp;
    gp.gram = &gram;
    const double inv_n = 1.0 / static_cast<double>(a.rows());
    gp.corr = (a.transpose() * response) * inv_n;
    gp.response_ss = response.squaredNorm() * inv_n;
    return gp;
}

Eigen::VectorXd StandardizedDesign::to_original(const Eigen::VectorXd& coeffs) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(source_cols);
    for (std::size_t k = 0; k < live.size(); ++k)
        out(live[k]) = coeffs(static_cast<Index>(k)) * scales(static_cast<Index>(k));
    return out;
}

FoldedDesign::FoldedDesign(const Eigen::MatrixXd& design, std::vector<int> fold_assignment, int folds)
    : assignment_(std::move(fold_assignment)) {
    if (static_cast<Index>(assignment_.size()) != design.rows()) fail_input("fold assignment length mismatch");
    folds_.resize(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        const int k = assignment_[i];
        if (k < 0 || k >= folds) fail_input("fold index out of range");
        for (int f = 0; f < folds; ++f) {
            auto& fold = folds_[static_cast<std::size_t>(f)];
            (f == k ? fold.test : fold.train).push_back(static_cast<Index>(i));
        }
    }
    for (auto& fold : folds_) {
        if (fold.test.empty() || fold.train.empty()) fail_input("every fold needs training and held-out rows");
        fold.design = StandardizedDesign::build(design, fold.train);
        fold.test_design.resize(static_cast<Index>(fold.test.size()), static_cast<Index>(fold.design.live.size()));
        for (std::size_t k = 0; k < fold.design.live.size(); ++k)
            for (std::size_t i = 0; i < fold.test.size(); ++i)
                fold.test_design(static_cast<Index>(i), static_cast<Index>(k)) =
                    design(fold.test[i], fold.design.live[k]) * fold.design.scales(static_cast<Index>(k));
    }
}

std::size_t argmin_cv(const std::vector<double>& cv_error) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < cv_error.size(); ++k)
        if (cv_error[k] < cv_error[best]) best = k;
    return best;
}

CvResult FoldedDesign::evaluate(const Eigen::VectorXd& response, std::span<const double> grid,
                                PenaltyFamily family, const SolverOptions& solver) const {
    check_grid(grid);
    if (static_cast<std::size_t>(response.size()) != assignment_.size()) fail_input("response length mismatch");
    CvResult out;
    out.grid.assign(grid.begin(), grid.end());
    out.cv_error.assign(grid.size(), 0.0);
    out.fold_assignment = assignment_;

    std::vector<double> fold_sse(grid.size());
    for (const Fold& fold : folds_) {
        Eigen::VectorXd train_resp(static_cast<Index>(fold.train.size()));
        for (std::size_t i = 0; i < fold.train.size(); ++i) train_resp(static_cast<Index>(i)) = response(fold.train[i]);
        Eigen::VectorXd test_resp(static_cast<Index>(fold.test.size()));
        for (std::size_t i = 0; i < fold.test.size(); ++i) test_resp(static_cast<Index>(i)) = response(fold.test[i]);

        if (fold.design.live.empty()) {
            for (std::size_t k = 0; k < grid.size(); ++k) out.cv_error[k] += test_resp.squaredNorm();
            continue;
        }
        const GramProblem gp = fold.design.problem(train_resp);
        const PathResult path = solve_path(gp, family, grid, solver);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd resid = test_resp;
            const Eigen::VectorXd& b = path.results[k].coeffs;
            for (Index j : path.results[k].active_set) resid.noalias() -= b(j) * fold.test_design.col(j);
            out.cv_error[k] += resid.squaredNorm();
        }
    }
    for (double& e : out.cv_error) e /= static_cast<double>(folds_.size());
    out.chosen_index = argmin_cv(out.cv_error);
    out.chosen = out.grid[out.chosen_index];
    return out;
}

CvResult cv_stage_one_column(const Eigen::MatrixXd& z, const Eigen::VectorXd& x_j, std::span<const double> grid,
                             int folds, std::uint64_t seed, PenaltyFamily family, const SolverOptions& solver) {
    FoldedDesign fd(z, make_folds(z.rows(), folds, seed), folds);
    CvResult r = fd.evaluate(x_j, grid, family, solver);
    r.seed = seed;
    return r;
}

CvResult cv_stage_two(const Eigen::MatrixXd& x_hat, const Eigen::VectorXd& y, std::span<const double> grid,
                      int folds, std::uint64_t seed, PenaltyFamily family, const SolverOptions& solver) {
    FoldedDesign fd(x_hat, make_folds(x_hat.rows(), folds, seed), folds);
    CvResult r = fd.evaluate(y, grid, family, solver);
    r.seed = seed;
    return r;
}

}  // namespace siv
