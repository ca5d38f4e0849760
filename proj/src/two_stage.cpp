#include "sparse_iv/two_stage.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/linalg.hpp"
#include "sparse_iv/parallel.hpp"

#include <cmath>

namespace siv {

std::vector<double> grid_down_to(double top, double level, Index rows, Index cols, int size) {
    std::vector<double> grid;
    for (double g : default_grid(top, rows, cols, size))
        if (g > level) grid.push_back(g);
    grid.push_back(level);
    return grid;
}

namespace {

std::vector<double> cv_grid(const CvPolicy& policy, double top, Index rows, Index cols) {
    if (!policy.grid.empty()) {
        check_grid(policy.grid);
        return policy.grid;
    }
    return default_grid(top, rows, cols, policy.grid_size);
}

std::vector<Index> support_of(const Eigen::VectorXd& b) {
    std::vector<Index> s;
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) s.push_back(j);
    return s;
}

}  // namespace

PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const LevelTuning& tuning,
                           PenaltyFamily family, const SolverOptions& solver) {
    if (y.size() != design.rows()) fail_input("response length does not match design rows");
    const StandardizedDesign sd = StandardizedDesign::build(design);
    if (sd.live.empty()) fail_numeric("every design column is identically zero; nothing to fit");

    const GramProblem gp = sd.problem(y);
    const double top = gp.corr.cwiseAbs().maxCoeff();
    const Index n = design.rows();
    const Index m = static_cast<Index>(sd.live.size());

    PenalizedFit fit;
    std::vector<double> grid;
    std::size_t last = 0;
    if (const auto* policy = std::get_if<CvPolicy>(&tuning)) {
        grid = cv_grid(*policy, top, n, m);
        FoldedDesign fd(design, make_folds(n, policy->folds, policy->seed), policy->folds);
        CvResult cvr = fd.evaluate(y, grid, family, solver);
        cvr.seed = policy->seed;
        last = cvr.chosen_index;
        fit.cv = std::move(cvr);
    } else {
        const double level = std::get<double>(tuning);
        if (!(level >= 0.0)) fail_input("penalty level must be nonnegative");
        grid = grid_down_to(top, level, n, m, 100);
        last = grid.size() - 1;
    }

    const PathResult path = solve_path(gp, family, std::span<const double>(grid.data(), last + 1), solver);
    const Eigen::VectorXd& b_std = path.results.back().coeffs;
    fit.level = grid[last];
    fit.beta = sd.to_original(b_std);
    fit.beta_standardized = Eigen::VectorXd::Zero(design.cols());
    for (std::size_t k = 0; k < sd.live.size(); ++k) fit.beta_standardized(sd.live[k]) = b_std(static_cast<Index>(k));
    std::size_t next = 0;
    for (Index j = 0; j < design.cols(); ++j) {
        if (next < sd.live.size() && sd.live[next] == j)
            ++next;
        else
            fit.excluded.push_back(j);
    }
    fit.support = support_of(fit.beta);
    return fit;
}

StageOneFit stage_one(const Dataset& d, const StageOneTuning& tuning, PenaltyFamily family, const ExecOptions& exec) {
    if (!d.centered) fail_input("stage_one requires a prepared dataset");
    const std::vector<Index> live = d.live_instruments();
    if (live.empty()) fail_input("no usable instruments (all instrument columns are constant)");
    const Index n = d.n();
    const Index p = d.p();

    const auto* explicit_levels = std::get_if<std::vector<double>>(&tuning);
    const auto* policy = std::get_if<CvPolicy>(&tuning);
    if (explicit_levels) {
        if (static_cast<Index>(explicit_levels->size()) != p)
            fail_input("expected " + std::to_string(p) + " stage-1 levels, got " +
                       std::to_string(explicit_levels->size()));
        for (double l : *explicit_levels)
            if (!(l > 0.0) || !std::isfinite(l)) fail_input("stage-1 levels must be positive and finite");
    }

    Eigen::MatrixXd z_live(n, static_cast<Index>(live.size()));
    for (std::size_t k = 0; k < live.size(); ++k) z_live.col(static_cast<Index>(k)) = d.z.col(live[k]);
    const StandardizedDesign full = StandardizedDesign::build(z_live);
    const Index m = static_cast<Index>(full.live.size());

    std::optional<FoldedDesign> folded;
    if (policy) folded.emplace(z_live, make_folds(n, policy->folds, policy->seed), policy->folds);

    StageOneFit fit;
    fit.gamma_hat = Eigen::MatrixXd::Zero(d.q(), p);
    fit.lambdas.assign(static_cast<std::size_t>(p), 0.0);
    if (policy) fit.cv.resize(static_cast<std::size_t>(p));

    parallel_for(static_cast<std::size_t>(p), exec.threads, [&](std::size_t jj) {
        const Index j = static_cast<Index>(jj);
        try {
            const Eigen::VectorXd x_j = d.x.col(j);
            const GramProblem gp = full.problem(x_j);
            const double top = gp.corr.cwiseAbs().maxCoeff();
            std::vector<double> grid;
            std::size_t last = 0;
            if (policy) {
                grid = cv_grid(*policy, top, n, m);
                CvResult cvr = folded->evaluate(x_j, grid, family, exec.solver);
                cvr.seed = policy->seed;
                last = cvr.chosen_index;
                fit.cv[jj] = std::move(cvr);
            } else {
                grid = grid_down_to(top, (*explicit_levels)[jj], n, m, 100);
                last = grid.size() - 1;
            }
            const PathResult path =
                solve_path(gp, family, std::span<const double>(grid.data(), last + 1), exec.solver);
            const Eigen::VectorXd gamma_live = full.to_original(path.results.back().coeffs);
            for (std::size_t k = 0; k < live.size(); ++k) fit.gamma_hat(live[k], j) = gamma_live(static_cast<Index>(k));
            fit.lambdas[jj] = grid[last];
        } catch (const Error& e) {
            throw Error(e.kind(), "stage 1, covariate " + std::to_string(j + 1) + ": " + e.what());
        }
    });

    fit.x_hat = d.z * fit.gamma_hat;
    fit.xhat_scales = Eigen::VectorXd::Zero(p);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Index j = 0; j < p; ++j) {
        const double norm = fit.x_hat.col(j).norm();
        if (fit.gamma_hat.col(j).isZero(0.0) || !(norm > kDeadColumnTolerance * root_n))
            fit.dead_columns.push_back(j);
        else
            fit.xhat_scales(j) = root_n / norm;
    }
    return fit;
}

TwoStageFit stage_two(const StageOneFit& s1, const Eigen::VectorXd& y, const LevelTuning& tuning,
                      PenaltyFamily family, const ExecOptions& exec) {
    if (y.size() != s1.x_hat.rows()) fail_input("response length does not match the stage-1 prediction");
    if (static_cast<Index>(s1.dead_columns.size()) == s1.x_hat.cols())
        fail_numeric("every first-stage prediction is zero; no covariate has usable instrument signal");

    // Dead columns are zeroed so the standardizer drops them.
    Eigen::MatrixXd design = s1.x_hat;
    for (Index j : s1.dead_columns) design.col(j).setZero();

    PenalizedFit pf = penalized_fit(design, y, tuning, family, exec.solver);
    TwoStageFit fit;
    fit.stage_one = s1;
    fit.beta_hat = std::move(pf.beta);
    fit.beta_standardized = std::move(pf.beta_standardized);
    fit.mu = pf.level;
    fit.support = std::move(pf.support);
    fit.mu_cv = std::move(pf.cv);
    return fit;
}

TwoStageFit fit_2sr(const Dataset& d, const FitOptions& options) {
    StageOneTuning s1_tuning = options.lambdas.empty() ? StageOneTuning(options.cv) : StageOneTuning(options.lambdas);
    StageOneFit s1 = stage_one(d, s1_tuning, options.family, options.exec);
    LevelTuning s2_tuning = options.mu ? LevelTuning(*options.mu) : LevelTuning(options.cv);
    return stage_two(s1, d.y, s2_tuning, options.family, options.exec);
}

PenalizedFit fit_pls(const Dataset& d, const LevelTuning& tuning, PenaltyFamily family, const ExecOptions& exec) {
    if (!d.centered) fail_input("fit_pls requires a prepared dataset");
    return penalized_fit(d.x, d.y, tuning, family, exec.solver);
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Index>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
    return out;
}

}  // namespace

OracleFit fit_oracles(const Dataset& d, const std::vector<Index>& support,
                      const std::vector<std::vector<Index>>& column_supports) {
    if (static_cast<Index>(column_supports.size()) != d.p()) fail_input("need one instrument support per covariate");
    for (Index j : support)
        if (j < 0 || j >= d.p()) fail_input("covariate support index out of range");

    OracleFit out;
    out.pls_beta = Eigen::VectorXd::Zero(d.p());
    out.two_stage_beta = Eigen::VectorXd::Zero(d.p());
    out.gamma = Eigen::MatrixXd::Zero(d.q(), d.p());

    const LeastSquares pls = least_squares(select_columns(d.x, support), d.y);
    out.rank_deficient = pls.rank_deficient;
    for (std::size_t k = 0; k < support.size(); ++k) out.pls_beta(support[k]) = pls.coeffs(static_cast<Index>(k));

    for (Index j = 0; j < d.p(); ++j) {
        const auto& cols = column_supports[static_cast<std::size_t>(j)];
        for (Index i : cols)
            if (i < 0 || i >= d.q()) fail_input("instrument support index out of range");
        const LeastSquares first = least_squares(select_columns(d.z, cols), d.x.col(j));
        out.rank_deficient = out.rank_deficient || first.rank_deficient;
        for (std::size_t k = 0; k < cols.size(); ++k) out.gamma(cols[k], j) = first.coeffs(static_cast<Index>(k));
    }
    out.x_hat = d.z * out.gamma;

    const LeastSquares second = least_squares(select_columns(out.x_hat, support), d.y);
    out.rank_deficient = out.rank_deficient || second.rank_deficient;
    for (std::size_t k = 0; k < support.size(); ++k)
        out.two_stage_beta(support[k]) = second.coeffs(static_cast<Index>(k));
    return out;
}

}  // namespace siv
