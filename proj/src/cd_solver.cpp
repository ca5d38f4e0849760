#include "sparse_iv/cd_solver.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace siv {

namespace {

// Both states expose the unpenalized univariate solution for coordinate j
// (n^-1 a_j^T r + b_j), absorb a coordinate change, and report the loss.
// restrict_to/release bracket the active-set sweeps, which touch only the
// given coordinates.
struct ResidualState {
    const Eigen::MatrixXd& a;
    Eigen::VectorXd r;
    double inv_n;

    double partial(Index j, double bj) const { return a.col(j).dot(r) * inv_n + bj; }
    void shift(Index j, double delta) { r.noalias() -= delta * a.col(j); }
    double loss(const Eigen::VectorXd&) const { return 0.5 * r.squaredNorm() * inv_n; }
    Index size() const { return a.cols(); }
    Eigen::MatrixXd block(const std::vector<Index>& idx) const {
        const Eigen::MatrixXd sub = a(Eigen::all, idx);
        return (sub.transpose() * sub) * inv_n;
    }
    void restrict_to(const std::vector<Index>&) {}
    void release(const Eigen::VectorXd&) {}
};

struct GramState {
    const GramProblem& problem;
    Eigen::VectorXd grad;  // corr - gram * b; stale while restricted
    // While restricted, the gradient lives in grad_a over the active set,
    // updated through a contiguous copy of the active Gram block.
    bool restricted = false;
    std::vector<Index> slot{};  // position in the active set, or -1
    Eigen::MatrixXd gram_a{};
    Eigen::VectorXd grad_a{};

    double partial(Index j, double bj) const {
        return (restricted ? grad_a(slot[static_cast<std::size_t>(j)]) : grad(j)) + bj;
    }
    void shift(Index j, double delta) {
        if (restricted)
            grad_a.noalias() -= delta * gram_a.col(slot[static_cast<std::size_t>(j)]);
        else
            grad.noalias() -= delta * problem.gram->col(j);
    }
    double loss(const Eigen::VectorXd& b) const {
        double gb = 0.0;
        if (restricted) {
            for (Index j = 0; j < b.size(); ++j)
                if (b(j) != 0.0) gb += grad_a(slot[static_cast<std::size_t>(j)]) * b(j);
        } else {
            gb = grad.dot(b);
        }
        return 0.5 * (problem.response_ss - problem.corr.dot(b) - gb);
    }
    Index size() const { return problem.corr.size(); }
    Eigen::MatrixXd block(const std::vector<Index>& idx) const { return (*problem.gram)(idx, idx); }
    void restrict_to(const std::vector<Index>& active) {
        slot.assign(static_cast<std::size_t>(size()), -1);
        for (std::size_t k = 0; k < active.size(); ++k) slot[static_cast<std::size_t>(active[k])] = Index(k);
        gram_a = (*problem.gram)(active, active);
        grad_a = grad(active);
        restricted = true;
    }
    void release(const Eigen::VectorXd& b) {
        restricted = false;
        grad = problem.corr;
        for (Index j = 0; j < b.size(); ++j)
            if (b(j) != 0.0) grad.noalias() -= b(j) * problem.gram->col(j);
    }
};

double penalty_total(const PenaltySpec& spec, const Eigen::VectorXd& b) {
    double total = 0.0;
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) total += penalty_value(spec, std::abs(b(j)));
    return total;
}

template <class State>
double sweep_all(State& st, const PenaltySpec& spec, Eigen::VectorXd& b) {
    double max_change = 0.0;
    for (Index j = 0; j < b.size(); ++j) {
        const double old = b(j);
        const double updated = threshold(spec, st.partial(j, old));
        if (updated != old) {
            const double delta = updated - old;
            st.shift(j, delta);
            b(j) = updated;
            max_change = std::max(max_change, std::abs(delta));
        }
    }
    return max_change;
}

template <class State>
double sweep_active(State& st, const PenaltySpec& spec, Eigen::VectorXd& b, const std::vector<Index>& active) {
    double max_change = 0.0;
    for (Index j : active) {
        const double old = b(j);
        const double updated = threshold(spec, st.partial(j, old));
        if (updated != old) {
            const double delta = updated - old;
            st.shift(j, delta);
            b(j) = updated;
            max_change = std::max(max_change, std::abs(delta));
        }
    }
    return max_change;
}

// On an interval where the penalty is quadratic, rho'(t) = slope + curvature * t.
struct Piece {
    double lo, hi, slope, curvature;
};

Piece piece_at(const PenaltySpec& spec, double t) {
    const double lam = spec.level;
    const double a = spec.shape_a;
    const double inf = std::numeric_limits<double>::infinity();
    switch (spec.kind) {
        case PenaltyKind::Lasso:
            return {0.0, inf, lam, 0.0};
        case PenaltyKind::Scad:
            if (t <= lam) return {0.0, lam, lam, 0.0};
            if (t <= a * lam) return {lam, a * lam, a * lam / (a - 1.0), -1.0 / (a - 1.0)};
            return {a * lam, inf, 0.0, 0.0};
        case PenaltyKind::Mcp:
            if (t <= a * lam) return {0.0, a * lam, lam, -1.0 / a};
            return {a * lam, inf, 0.0, 0.0};
    }
    return {0.0, inf, lam, 0.0};
}

// Solves the stationarity equations on the active set with every coordinate
// held to its current sign and penalty piece, then moves toward that point
// until some coordinate reaches the edge of its piece. Coordinates landing on
// zero leave the active set. The move is kept only if it lowers the objective.
template <class State>
bool piecewise_jump(State& st, const PenaltySpec& spec, Eigen::VectorXd& b, const std::vector<Index>& candidates) {
    std::vector<Index> active;
    for (Index j : candidates)
        if (b(j) != 0.0) active.push_back(j);
    const Index k = static_cast<Index>(active.size());
    if (k == 0) return false;
    const Eigen::MatrixXd gram = st.block(active);
    Eigen::MatrixXd h = gram;
    Eigen::VectorXd rhs(k);
    Eigen::VectorXd g(k);
    std::vector<Piece> pieces;
    pieces.reserve(active.size());
    for (Index i = 0; i < k; ++i) {
        const Index j = active[static_cast<std::size_t>(i)];
        const double bj = b(j);
        const double sign = bj > 0.0 ? 1.0 : -1.0;
        const Piece pc = piece_at(spec, std::abs(bj));
        pieces.push_back(pc);
        g(i) = st.partial(j, bj) - bj;
        h(i, i) += pc.curvature;
        rhs(i) = g(i) - sign * pc.slope - pc.curvature * bj;
    }
    Eigen::VectorXd delta = h.partialPivLu().solve(rhs);
    if (!delta.allFinite()) return false;

    double step = 1.0;
    Index blocking = -1;
    bool to_zero = false;
    for (Index i = 0; i < k; ++i) {
        const double bj = b(active[static_cast<std::size_t>(i)]);
        const double rate = (bj > 0.0 ? 1.0 : -1.0) * delta(i);
        const Piece& pc = pieces[static_cast<std::size_t>(i)];
        const double t = std::abs(bj);
        double room = std::numeric_limits<double>::infinity();
        if (rate < 0.0) room = (t - pc.lo) / -rate;
        if (rate > 0.0) room = (pc.hi - t) / rate;
        if (room < step) {
            step = room;
            blocking = i;
            to_zero = rate < 0.0 && pc.lo == 0.0;
        }
    }
    if (!(step > 0.0)) return false;
    delta *= step;

    Eigen::VectorXd next(k);
    double change = -g.dot(delta) + 0.5 * delta.dot(gram * delta);
    for (Index i = 0; i < k; ++i) {
        const double bj = b(active[static_cast<std::size_t>(i)]);
        next(i) = bj + delta(i);
        if (i == blocking && to_zero) next(i) = 0.0;
        if (next(i) * bj < 0.0) return false;
        change += penalty_value(spec, std::abs(next(i))) - penalty_value(spec, std::abs(bj));
    }
    if (!(change <= 0.0)) return false;
    for (Index i = 0; i < k; ++i) {
        const Index j = active[static_cast<std::size_t>(i)];
        const double d = next(i) - b(j);
        if (d != 0.0) st.shift(j, d);
        b(j) = next(i);
    }
    return true;
}

std::vector<Index> nonzeros(const Eigen::VectorXd& b) {
    std::vector<Index> idx;
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) idx.push_back(j);
    return idx;
}

constexpr int kJumpAfter = 5;

template <class State>
SolveResult run(State& st, const PenaltySpec& spec, Eigen::VectorXd b, const SolverOptions& opt) {
    if (!(opt.tol > 0.0)) fail_input("solver tolerance must be positive");
    if (opt.max_iter < 1) fail_input("solver max_iter must be positive");

    SolveResult res;
    auto record = [&] {
        if (!std::isfinite(b.sum()))
            fail_numeric("non-finite coefficient during coordinate descent (ill-conditioned design?)");
        if (opt.record_objective) res.objective_trace.push_back(st.loss(b) + penalty_total(spec, b));
    };

    int it = 0;
    while (it < opt.max_iter) {
        const double change = sweep_all(st, spec, b);
        ++it;
        record();
        if (change <= opt.tol) {
            res.converged = true;
            break;
        }
        const std::vector<Index> active = nonzeros(b);
        int inner = 0;
        const int jump_after = std::max<int>(kJumpAfter, static_cast<int>(active.size() * active.size() / b.size()));
        st.restrict_to(active);
        while (it < opt.max_iter) {
            const double c = sweep_active(st, spec, b, active);
            ++it;
            ++inner;
            record();
            if (c <= opt.tol) break;
            if (inner % jump_after == 0 && piecewise_jump(st, spec, b, active)) break;
        }
        st.release(b);
    }

    res.iterations = it;
    res.objective = st.loss(b) + penalty_total(spec, b);
    if (!std::isfinite(res.objective)) fail_numeric("non-finite objective during coordinate descent");
    res.active_set = nonzeros(b);
    res.coeffs = std::move(b);
    return res;
}

void check_init(const Eigen::VectorXd& init, Index m) {
    if (init.size() != m)
        fail_input("initial coefficient vector has length " + std::to_string(init.size()) + ", expected " +
                   std::to_string(m));
}

void check_gram(const GramProblem& problem) {
    if (problem.gram == nullptr) fail_input("Gram problem without a Gram matrix");
    const Eigen::MatrixXd& g = *problem.gram;
    if (g.rows() != g.cols() || g.rows() != problem.corr.size()) fail_input("Gram problem dimension mismatch");
    for (Index j = 0; j < g.rows(); ++j)
        if (std::abs(g(j, j) - 1.0) > 2e-8)
            fail_input("design column " + std::to_string(j + 1) + " is not standardized to norm sqrt(n)");
}

}  // namespace

void check_standardized(const Eigen::MatrixXd& a) {
    const double root_n = std::sqrt(static_cast<double>(a.rows()));
    for (Index j = 0; j < a.cols(); ++j)
        if (std::abs(a.col(j).norm() - root_n) > 1e-8 * root_n)
            fail_input("design column " + std::to_string(j + 1) + " has norm " + std::to_string(a.col(j).norm()) +
                       ", expected sqrt(n) = " + std::to_string(root_n));
}

void check_grid(std::span<const double> grid) {
    if (grid.empty()) fail_input("empty regularization grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!std::isfinite(grid[k]) || grid[k] < 0.0) fail_input("grid levels must be finite and nonnegative");
        if (k > 0 && !(grid[k] < grid[k - 1])) fail_input("grid must be strictly decreasing");
    }
}

SolveResult solve_pls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const PenaltySpec& spec,
                      const Eigen::VectorXd& init, const SolverOptions& options) {
    if (y.size() != a.rows()) fail_input("response length does not match design rows");
    check_init(init, a.cols());
    check_standardized(a);
    ResidualState st{a, y - a * init, 1.0 / static_cast<double>(a.rows())};
    SolveResult res = run(st, spec, init, options);
    res.residual = std::move(st.r);
    return res;
}

SolveResult solve_pls(const GramProblem& problem, const PenaltySpec& spec, const Eigen::VectorXd& init,
                      const SolverOptions& options) {
    check_gram(problem);
    check_init(init, problem.corr.size());
    GramState st{problem, problem.corr - (*problem.gram) * init};
    return run(st, spec, init, options);
}

namespace {

template <class State>
PathResult run_path(State& st, PenaltyFamily family, std::span<const double> grid, const SolverOptions& opt) {
    check_grid(grid);
    PathResult path;
    path.grid.assign(grid.begin(), grid.end());
    path.results.reserve(grid.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(st.size());
    for (double level : grid) {
        SolveResult r = run(st, PenaltySpec(family, level), b, opt);
        b = r.coeffs;
        path.results.push_back(std::move(r));
    }
    return path;
}

}  // namespace

PathResult solve_path(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, PenaltyFamily family,
                      std::span<const double> grid, const SolverOptions& options) {
    if (y.size() != a.rows()) fail_input("response length does not match design rows");
    check_standardized(a);
    ResidualState st{a, y, 1.0 / static_cast<double>(a.rows())};
    PathResult path = run_path(st, family, grid, options);
    // Each result's residual is only meaningful at the end of the path.
    path.results.back().residual = st.r;
    return path;
}

PathResult solve_path(const GramProblem& problem, PenaltyFamily family, std::span<const double> grid,
                      const SolverOptions& options) {
    check_gram(problem);
    GramState st{problem, problem.corr};
    return run_path(st, family, grid, options);
}

double max_level(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    if (y.size() != a.rows()) fail_input("response length does not match design rows");
    if (a.cols() == 0) return 0.0;
    return (a.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(a.rows());
}

std::vector<double> default_grid(double top, Index rows, Index cols, int size) {
    if (size < 1) fail_input("grid size must be positive");
    if (!(top > 0.0)) return {0.0};
    if (size == 1) return {top};
    const double ratio = cols > rows ? 0.05 : 0.01;
    std::vector<double> grid(static_cast<std::size_t>(size));
    const double log_top = std::log(top);
    const double step = std::log(ratio) / static_cast<double>(size - 1);
    for (int k = 0; k < size; ++k) grid[static_cast<std::size_t>(k)] = std::exp(log_top + step * k);
    grid.front() = top;
    return grid;
}

}  // namespace siv
