#include "fixtures.hpp"
#include "sparse_iv/error.hpp"
#include "sparse_iv/simulation.hpp"
#include "sparse_iv/stability.hpp"

#include <doctest.h>

#include <cmath>

using namespace siv;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Problem sparse_problem(std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    Problem pr;
    pr.x = testing::standardize(testing::gaussian(80, 12, rng));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(12);
    beta(0) = 1.5;
    beta(5) = -1.0;
    pr.y = pr.x * beta + 0.5 * testing::gaussian_vector(80, rng);
    pr.y.array() -= pr.y.mean();
    return pr;
}

double top_level(const Problem& pr) {
    return (pr.x.transpose() * pr.y).cwiseAbs().maxCoeff() / static_cast<double>(pr.x.rows());
}

}  // namespace

TEST_CASE("a single subsample gives 0/1 frequencies") {
    const Problem pr = sparse_problem(1);
    StabilityOptions opts;
    opts.subsamples = 1;
    const std::vector<double> grid{0.5, 0.2, 0.05};
    const StabilityPath path = stability_paths(pr.x, pr.y, grid, PenaltyFamily(), opts);
    CHECK(path.probs.rows() == 12);
    CHECK(path.probs.cols() == 3);
    CHECK(path.subsample_size == 40);
    for (Index j = 0; j < 12; ++j)
        for (Index k = 0; k < 3; ++k) CHECK((path.probs(j, k) == 0.0 || path.probs(j, k) == 1.0));
}

TEST_CASE("frequencies are multiples of one over the subsample count") {
    const Problem pr = sparse_problem(2);
    StabilityOptions opts;
    opts.subsamples = 7;
    const std::vector<double> grid{0.6, 0.3, 0.1, 0.02};
    const StabilityPath path = stability_paths(pr.x, pr.y, grid, PenaltyFamily(PenaltyKind::Mcp), opts);
    for (Index j = 0; j < path.probs.rows(); ++j)
        for (Index k = 0; k < path.probs.cols(); ++k) {
            const double scaled = path.probs(j, k) * 7.0;
            CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
        }
}

TEST_CASE("a level above every subsample maximum selects nothing") {
    const Problem pr = sparse_problem(3);
    StabilityOptions opts;
    opts.subsamples = 20;
    // Any subsample correlation is at most 2 * |x|_inf * |y|_inf.
    const double bound = 2.0 * pr.x.cwiseAbs().maxCoeff() * pr.y.cwiseAbs().maxCoeff() * 10.0;
    const std::vector<double> grid{bound, 0.05};
    const StabilityPath path = stability_paths(pr.x, pr.y, grid, PenaltyFamily(), opts);
    CHECK(path.probs.col(0).isZero(0.0));
    CHECK(path.probs(0, 1) == 1.0);
    CHECK(path.probs(5, 1) == 1.0);
}

TEST_CASE("signal covariates dominate noise covariates") {
    const Problem pr = sparse_problem(4);
    StabilityOptions opts;
    opts.subsamples = 50;
    const double top = top_level(pr);
    std::vector<double> grid;
    for (int k = 0; k < 10; ++k) grid.push_back(top * std::pow(0.7, k));
    const StabilityPath path = stability_paths(pr.x, pr.y, grid, PenaltyFamily(PenaltyKind::Scad), opts);
    const auto sel = max_selection_probability(path, 0.9);
    REQUIRE(sel.size() >= 2);
    CHECK(((sel[0].first == 0 && sel[1].first == 5) || (sel[0].first == 5 && sel[1].first == 0)));
}

TEST_CASE("max selection probability filters and orders") {
    StabilityPath path;
    path.probs.resize(4, 2);
    path.probs << 0.2, 0.7,
                  0.9, 0.8,
                  0.7, std::nan(""),
                  0.1, 0.0;
    const auto sel = max_selection_probability(path, 0.7);
    REQUIRE(sel.size() == 3);
    CHECK(sel[0] == std::pair<Index, double>{1, 0.9});
    CHECK(sel[1] == std::pair<Index, double>{0, 0.7});
    CHECK(sel[2] == std::pair<Index, double>{2, 0.7});
    CHECK(max_selection_probability(path, 0.0).size() == 4);
    CHECK_THROWS_AS(max_selection_probability(path, 1.5), Error);
}

TEST_CASE("stability paths are deterministic across thread counts") {
    const Problem pr = sparse_problem(5);
    StabilityOptions opts;
    opts.subsamples = 16;
    opts.seed = 9;
    const std::vector<double> grid{0.4, 0.2, 0.1, 0.05};
    opts.threads = 1;
    const StabilityPath a = stability_paths(pr.x, pr.y, grid, PenaltyFamily(), opts);
    opts.threads = 4;
    const StabilityPath b = stability_paths(pr.x, pr.y, grid, PenaltyFamily(), opts);
    CHECK(a.probs == b.probs);
    opts.seed = 10;
    const StabilityPath c = stability_paths(pr.x, pr.y, grid, PenaltyFamily(), opts);
    CHECK(a.probs != c.probs);
}

TEST_CASE("stability selection on a dataset") {
    SimConfig cfg;
    cfg.n = 120;
    cfg.p = 8;
    cfg.q = 15;
    cfg.r = 3;
    cfg.s = 2;
    cfg.n_confounded = 3;
    cfg.seed = 4;
    const Simulation sim = generate(cfg);
    StabilityOptions opts;
    opts.subsamples = 10;
    opts.grid_size = 6;
    opts.stage_one_cv.folds = 3;
    opts.stage_one_cv.grid_size = 10;
    const StabilityPath two = stability_selection(sim.data, PenaltyFamily(), opts);
    CHECK(two.probs.rows() == 8);
    CHECK(two.mu_grid.size() == 6);
    CHECK(two.probs.col(0).maxCoeff() <= two.probs.col(5).maxCoeff());
    opts.mode = StabilityMode::Pls;
    const StabilityPath pls = stability_selection(sim.data, PenaltyFamily(), opts);
    CHECK(pls.probs.rows() == 8);
    opts.mode = StabilityMode::TwoStage;
    opts.refit_stage_one = true;
    opts.subsamples = 3;
    const StabilityPath refit = stability_selection(sim.data, PenaltyFamily(), opts);
    CHECK(refit.probs.rows() == 8);
    opts.subsamples = 0;
    CHECK_THROWS_AS(stability_selection(sim.data, PenaltyFamily(), opts), Error);
}

TEST_CASE("stability argument errors") {
    const Problem pr = sparse_problem(6);
    StabilityOptions opts;
    opts.subsamples = 2;
    const std::vector<double> rising{0.1, 0.2};
    CHECK_THROWS_AS(stability_paths(pr.x, pr.y, rising, PenaltyFamily(), opts), Error);
    const std::vector<double> grid{0.1};
    CHECK_THROWS_AS(stability_paths(pr.x, pr.y.head(10), grid, PenaltyFamily(), opts), Error);
}
