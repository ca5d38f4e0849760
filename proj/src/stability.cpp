#include "sparse_iv/stability.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/parallel.hpp"
#include "sparse_iv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace siv {

namespace {

std::vector<Index> draw_rows(Index n, Index size, std::uint64_t seed, std::uint64_t b) {
    Rng rng = make_stream(seed, b);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    for (Index i = 0; i < size; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
    }
    rows.resize(static_cast<std::size_t>(size));
    std::sort(rows.begin(), rows.end());
    return rows;
}

struct SubsampleOutcome {
    std::vector<std::vector<Index>> selected;  // per level
    std::vector<char> failed;                  // per level
};

SubsampleOutcome path_on_rows(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const std::vector<Index>& rows,
                              std::span<const double> grid, PenaltyFamily family, const SolverOptions& solver) {
    SubsampleOutcome out;
    out.selected.resize(grid.size());
    out.failed.assign(grid.size(), 0);
    const StandardizedDesign sd = StandardizedDesign::build(design, rows);
    if (sd.live.empty()) return out;
    const GramProblem gp = sd.problem(y(rows));
    Eigen::VectorXd init = Eigen::VectorXd::Zero(static_cast<Index>(sd.live.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        try {
            const SolveResult r = solve_pls(gp, PenaltySpec(family, grid[k]), init, solver);
            init = r.coeffs;
            for (Index j : r.active_set) out.selected[k].push_back(sd.live[static_cast<std::size_t>(j)]);
        } catch (const Error&) {
            out.failed[k] = 1;
        }
    }
    return out;
}

void check_options(const StabilityOptions& options) {
    if (options.subsamples < 1) fail_input("stability selection needs at least one subsample");
}

StabilityPath assemble(std::span<const double> grid, Index p, Index size, const StabilityOptions& options,
                       const std::vector<SubsampleOutcome>& outcomes) {
    StabilityPath path;
    path.mu_grid.assign(grid.begin(), grid.end());
    path.n_subsamples = options.subsamples;
    path.subsample_size = size;
    path.seed = options.seed;
    path.failures.assign(grid.size(), 0);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(p, static_cast<Index>(grid.size()));
    for (const auto& o : outcomes)
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (o.failed[k]) {
                ++path.failures[k];
                continue;
            }
            for (Index j : o.selected[k]) counts(j, static_cast<Index>(k)) += 1.0;
        }
    path.probs.resize(p, static_cast<Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const int ok = options.subsamples - path.failures[k];
        path.probs.col(static_cast<Index>(k)) =
            ok > 0 ? Eigen::VectorXd(counts.col(static_cast<Index>(k)) / double(ok))
                   : Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    }
    return path;
}

}  // namespace

StabilityPath stability_paths(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::span<const double> grid,
                              PenaltyFamily family, const StabilityOptions& options) {
    check_options(options);
    check_grid(grid);
    const Index n = design.rows();
    if (y.size() != n) fail_input("response length does not match design rows");
    const Index size = n / 2;
    if (size < 1) fail_input("stability selection needs at least two rows");
    std::vector<SubsampleOutcome> outcomes(static_cast<std::size_t>(options.subsamples));
    parallel_for(outcomes.size(), options.threads, [&](std::size_t b) {
        outcomes[b] = path_on_rows(design, y, draw_rows(n, size, options.seed, b), grid, family, options.solver);
    });
    return assemble(grid, design.cols(), size, options, outcomes);
}

StabilityPath stability_selection(const Dataset& d, PenaltyFamily family, const StabilityOptions& options) {
    check_options(options);
    ExecOptions exec{options.threads, options.solver};
    Eigen::MatrixXd design;
    if (options.mode == StabilityMode::Pls) {
        design = d.x;
    } else {
        design = stage_one(d, options.stage_one_cv, PenaltyFamily(family.kind, family.shape_a), exec).x_hat;
    }

    std::vector<double> grid = options.grid;
    if (grid.empty()) {
        const StandardizedDesign sd = StandardizedDesign::build(design);
        if (sd.live.empty()) fail_numeric("no usable columns for stability selection");
        const double top = sd.problem(d.y).corr.cwiseAbs().maxCoeff();
        grid = default_grid(top, d.n(), static_cast<Index>(sd.live.size()), options.grid_size);
    }
    if (options.mode == StabilityMode::Pls || !options.refit_stage_one)
        return stability_paths(design, d.y, grid, family, options);

    check_grid(grid);
    const Index n = d.n(), size = n / 2;
    std::vector<SubsampleOutcome> outcomes(static_cast<std::size_t>(options.subsamples));
    parallel_for(outcomes.size(), options.threads, [&](std::size_t b) {
        const std::vector<Index> rows = draw_rows(n, size, options.seed, b);
        try {
            Dataset sub;
            sub.y = d.y(rows);
            sub.x = d.x(rows, Eigen::all);
            sub.z = d.z(rows, Eigen::all);
            sub = prepare(std::move(sub));
            const StageOneFit s1 = stage_one(sub, options.stage_one_cv, family, ExecOptions{1, options.solver});
            std::vector<Index> all(static_cast<std::size_t>(size));
            std::iota(all.begin(), all.end(), Index{0});
            outcomes[b] = path_on_rows(s1.x_hat, sub.y, all, grid, family, options.solver);
        } catch (const Error&) {
            outcomes[b].selected.resize(grid.size());
            outcomes[b].failed.assign(grid.size(), 1);
        }
    });
    return assemble(grid, d.p(), size, options, outcomes);
}

std::vector<std::pair<Index, double>> max_selection_probability(const StabilityPath& path, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) fail_input("threshold must lie in [0, 1]");
    std::vector<std::pair<Index, double>> out;
    for (Index j = 0; j < path.probs.rows(); ++j) {
        double best = 0.0;
        for (Index k = 0; k < path.probs.cols(); ++k)
            if (!std::isnan(path.probs(j, k))) best = std::max(best, path.probs(j, k));
        if (best >= threshold) out.emplace_back(j, best);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

}  // namespace siv
