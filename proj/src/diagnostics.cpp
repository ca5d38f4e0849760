#include "sparse_iv/diagnostics.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/linalg.hpp"
#include "sparse_iv/parallel.hpp"
#include "sparse_iv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace siv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Euclidean projection onto {v : ||v||_1 <= radius}.
void project_l1(Eigen::Ref<Eigen::VectorXd> v, double radius) {
    if (v.lpNorm<1>() <= radius) return;
    std::vector<double> mags(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(v(i));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cum = 0.0, shift = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cum += mags[k];
        const double t = (cum - radius) / static_cast<double>(k + 1);
        if (k + 1 == mags.size() || mags[k + 1] <= t) {
            shift = t;
            break;
        }
    }
    for (Index i = 0; i < v.size(); ++i) {
        const double m = std::max(std::abs(v(i)) - shift, 0.0);
        v(i) = v(i) < 0 ? -m : m;
    }
}

// One support J of size k for exact mode. Coordinates are permuted so that
// J comes first: d = [u; v].
class SupportProblem {
public:
    SupportProblem(const Eigen::MatrixXd& gram, const std::vector<Index>& support) : k_(Index(support.size())) {
        const Index m = gram.rows();
        order_ = support;
        for (Index j = 0; j < m; ++j)
            if (!std::binary_search(support.begin(), support.end(), j)) order_.push_back(j);
        g_.resize(m, m);
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) g_(a, b) = gram(order_[a], order_[b]);
    }

    double solve(int starts, Rng& rng) const {
        const Index m = g_.rows();
        if (k_ == m) return std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g_).eigenvalues()(0));

        // Minimizer over v without the cone; optimal for J when it is feasible.
        const Eigen::MatrixXd gvv_pinv = pseudo_inverse(g_.bottomRightCorner(m - k_, m - k_));
        const Eigen::MatrixXd coupling = gvv_pinv * g_.bottomLeftCorner(m - k_, k_);
        const Eigen::MatrixXd schur = g_.topLeftCorner(k_, k_) - g_.topRightCorner(k_, m - k_) * coupling;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (schur + schur.transpose()));
        const Eigen::VectorXd u0 = es.eigenvectors().col(0);
        Eigen::VectorXd d(m);
        d.head(k_) = u0;
        d.tail(m - k_) = -coupling * u0;
        if (d.tail(m - k_).lpNorm<1>() <= 3.0 * u0.lpNorm<1>() * (1.0 + 1e-12))
            return std::max(0.0, std::min(es.eigenvalues()(0), ratio(d)));

        double best = kInf;
        project(d);
        best = std::min(best, descend(d));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int st = 0; st < starts; ++st) {
            if (st == 0) {
                d.head(k_).setConstant(1.0);
                d.tail(m - k_).setZero();
            } else {
                for (Index i = 0; i < m; ++i) d(i) = normal(rng);
                const double frac = unit(rng);
                const double l1 = d.tail(m - k_).lpNorm<1>();
                if (l1 > 0.0) d.tail(m - k_) *= frac * 3.0 * d.head(k_).lpNorm<1>() / l1;
            }
            project(d);
            best = std::min(best, descend(d));
        }
        return best;
    }

private:
    double ratio(const Eigen::VectorXd& d) const { return d.dot(g_ * d) / d.head(k_).squaredNorm(); }

    void project(Eigen::VectorXd& d) const {
        const double un = d.head(k_).norm();
        if (un == 0.0) d.head(k_).setConstant(1.0);
        d /= d.head(k_).norm();
        project_l1(d.tail(d.size() - k_), 3.0 * d.head(k_).lpNorm<1>());
    }

    double descend(Eigen::VectorXd& d) const {
        double r = ratio(d);
        double step = 1.0 / std::max(1.0, g_.cwiseAbs().rowwise().sum().maxCoeff());
        for (int it = 0; it < 5000; ++it) {
            Eigen::VectorXd grad = 2.0 * (g_ * d);
            grad.head(k_) -= 2.0 * r * d.head(k_);
            bool moved = false;
            while (step > 1e-14) {
                Eigen::VectorXd trial = d - step * grad;
                if (trial.head(k_).norm() > 0.0) {
                    project(trial);
                    const double rt = ratio(trial);
                    if (rt < r) {
                        const double gain = r - rt;
                        d = std::move(trial);
                        r = rt;
                        step *= 2.0;
                        moved = gain > 1e-15 * std::max(r, 1e-300) && gain > 1e-18;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        return std::max(r, 0.0);
    }

    Index k_;
    std::vector<Index> order_;
    Eigen::MatrixXd g_;
};

std::vector<std::vector<Index>> combinations(Index m, Index k) {
    std::vector<std::vector<Index>> out;
    std::vector<Index> cur(static_cast<std::size_t>(k));
    std::iota(cur.begin(), cur.end(), Index{0});
    while (true) {
        out.push_back(cur);
        Index i = k - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == m - k + i) --i;
        if (i < 0) break;
        ++cur[static_cast<std::size_t>(i)];
        for (Index j = i + 1; j < k; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

double exact_re(const Eigen::MatrixXd& gram, Index s, const ReOptions& options) {
    const auto supports = combinations(gram.rows(), s);
    std::vector<double> values(supports.size(), kInf);
    parallel_for(supports.size(), options.threads, [&](std::size_t i) {
        Rng rng = make_stream(options.seed, i);
        values[i] = SupportProblem(gram, supports[i]).solve(options.starts, rng);
    });
    return std::sqrt(*std::min_element(values.begin(), values.end()));
}

constexpr long kChunk = 4096;

double sampled_re(const Eigen::MatrixXd& gram, Index s, const ReOptions& options) {
    const Index m = gram.rows();
    double best = kInf;
    for (Index j = 0; j < m; ++j) best = std::min(best, gram(j, j));
    const long draws = std::max(0L, options.draws);
    const std::size_t chunks = static_cast<std::size_t>((draws + kChunk - 1) / kChunk);
    std::vector<double> chunk_best(chunks, kInf);
    parallel_for(chunks, options.threads, [&](std::size_t c) {
        Rng rng = make_stream(options.seed, c);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<Index> col(0, m - 1);
        std::uniform_int_distribution<Index> off_count(0, std::min(s, m - s));
        const long count = std::min(kChunk, draws - static_cast<long>(c) * kChunk);
        std::vector<Index> idx;
        std::vector<double> val;
        double local = kInf;
        for (long t = 0; t < count; ++t) {
            idx.clear();
            val.clear();
            const Index k_off = off_count(rng);
            while (Index(idx.size()) < s + k_off) {
                const Index j = col(rng);
                if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
            }
            double u_sq = 0.0, u_l1 = 0.0, v_l1 = 0.0;
            for (Index a = 0; a < s; ++a) {
                const double x = normal(rng);
                val.push_back(x);
                u_sq += x * x;
                u_l1 += std::abs(x);
            }
            for (Index a = 0; a < k_off; ++a) {
                const double x = normal(rng);
                val.push_back(x);
                v_l1 += std::abs(x);
            }
            if (u_sq == 0.0) continue;
            if (k_off > 0 && v_l1 > 0.0) {
                const double scale = unit(rng) * 3.0 * u_l1 / v_l1;
                for (Index a = s; a < s + k_off; ++a) val[static_cast<std::size_t>(a)] *= scale;
            }
            double quad = 0.0;
            for (std::size_t a = 0; a < idx.size(); ++a) {
                double row = 0.0;
                for (std::size_t b = 0; b < idx.size(); ++b) row += gram(idx[a], idx[b]) * val[b];
                quad += val[a] * row;
            }
            local = std::min(local, quad / u_sq);
        }
        chunk_best[c] = local;
    });
    for (double v : chunk_best) best = std::min(best, v);
    return std::sqrt(std::max(best, 0.0));
}

}  // namespace

ReResult restricted_eigenvalue(const Eigen::MatrixXd& a, Index s, const ReOptions& options) {
    const Index m = a.cols();
    if (a.rows() < 1 || m < 1) fail_input("restricted eigenvalue: empty matrix");
    if (s < 1 || s > m)
        fail_input("restricted eigenvalue: s = " + std::to_string(s) + " must lie in [1, " + std::to_string(m) + "]");
    if (!a.allFinite()) fail_input("restricted eigenvalue: matrix has non-finite entries");
    const bool exact = options.mode == ReMode::Exact || (options.mode == ReMode::Auto && m <= options.exact_limit);
    if (exact && m > options.exact_limit)
        fail_scope("exact restricted eigenvalue is limited to m <= " + std::to_string(options.exact_limit) +
                   " columns (got " + std::to_string(m) + "); use the approximate mode");
    const Eigen::MatrixXd gram = a.transpose() * a / static_cast<double>(a.rows());
    if (exact) return {exact_re(gram, s, options), true};
    return {sampled_re(gram, s, options), false};
}

Irrepresentability irrepresentability(const Eigen::MatrixXd& c, const std::vector<Index>& support) {
    const Index p = c.rows();
    if (c.cols() != p) fail_input("irrepresentability: matrix must be square");
    if (support.empty()) fail_input("irrepresentability: empty support");
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    for (Index j : support) {
        if (j < 0 || j >= p) fail_input("irrepresentability: support index out of range");
        if (in[static_cast<std::size_t>(j)]) fail_input("irrepresentability: repeated support index");
        in[static_cast<std::size_t>(j)] = 1;
    }
    std::vector<Index> rest;
    for (Index j = 0; j < p; ++j)
        if (!in[static_cast<std::size_t>(j)]) rest.push_back(j);

    const Eigen::MatrixXd css = c(support, support);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (css + css.transpose()));
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lo > 0.0) || hi / lo >= 1e12) fail_numeric("irrepresentability: C_SS is singular or ill-conditioned");
    const Eigen::MatrixXd inv = css.inverse();

    Irrepresentability out;
    out.min_eig_css = lo;
    out.phi = inv.cwiseAbs().rowwise().sum().maxCoeff();
    if (!rest.empty()) out.irrep_norm = (c(rest, support) * inv).cwiseAbs().rowwise().sum().maxCoeff();
    return out;
}

LeastFalse least_false_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta0, const Eigen::VectorXd& eta0) {
    if (x.cols() != beta0.size() || x.rows() != eta0.size()) fail_input("least_false_beta: dimension mismatch");
    const LeastSquares ls = least_squares(x, x * beta0 + eta0);
    LeastFalse out;
    out.beta_star = ls.coeffs;
    out.gap_l1 = (ls.coeffs - beta0).lpNorm<1>();
    out.pseudo_inverse = ls.rank_deficient || x.cols() > x.rows();
    return out;
}

Eigen::VectorXd conditional_mean_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& errors) {
    const Index p = errors.cols();
    if (sigma.rows() != p + 1 || sigma.cols() != p + 1) fail_input("conditional_mean_error: sigma must be (p+1) x (p+1)");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma.topLeftCorner(p, p));
    if (llt.info() != Eigen::Success) fail_numeric("conditional_mean_error: error covariance not positive definite");
    const Eigen::VectorXd w = llt.solve(sigma.col(p).head(p));
    return errors * w;
}

TheoryRates theory_rates(const RateInputs& in) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) fail_input(std::string("theory rates: ") + name + " must be positive");
    };
    if (in.sigma_j.empty()) fail_input("theory rates: sigma_j is empty");
    for (double s : in.sigma_j) positive(s, "sigma_j");
    positive(in.sigma_eta, "sigma_eta");
    for (auto [v, name] : {std::pair{double(in.r), "r"}, {double(in.s), "s"}, {double(in.n), "n"},
                           {double(in.p), "p"}, {double(in.q), "q"}})
        positive(v, name);
    positive(in.kappa1, "kappa1");
    positive(in.kappa2, "kappa2");
    positive(in.big_l, "L");
    positive(in.big_m, "M");
    positive(in.c, "C");
    positive(in.c0, "C0");

    const double lg = std::log(double(in.p)) + std::log(double(in.q));
    const double n = double(in.n), r = double(in.r), s = double(in.s);
    const double root = std::sqrt(lg / n);
    TheoryRates t;
    t.sigma_max = *std::max_element(in.sigma_j.begin(), in.sigma_j.end());
    for (double sj : in.sigma_j) t.lambda.push_back(in.c * sj * root);
    t.lambda_max = in.c * t.sigma_max * root;
    const double k1 = in.kappa1, k2 = in.kappa2;
    t.mu = in.c0 / k1 * std::sqrt(r * lg / n);
    t.gamma_l1_bound = 16.0 * in.c / (k1 * k1) * t.sigma_max * r * root;
    t.gamma_pred_sq_bound = 16.0 * in.c * in.c / (k1 * k1) * t.sigma_max * t.sigma_max * double(in.p) * r * lg;
    t.beta_l1_bound = 64.0 * in.c0 / (k1 * k2 * k2) * s * std::sqrt(r * lg / n);
    t.beta_pred_sq_bound = 64.0 * in.c0 * in.c0 / (k1 * k1 * k2 * k2) * r * s * lg;
    t.rate1_lhs = t.lambda_max * (2.0 * in.big_l + t.lambda_max);
    t.rate1_rhs = k1 * k1 * k2 * k2 / (32.0 * 32.0 * r * s);
    t.failure_probability = std::pow(double(in.p) * double(in.q), 1.0 - in.c * in.c / 8.0);
    return t;
}

DiagnosticsReport diagnose(const Simulation& sim, const DiagnoseOptions& options) {
    const Dataset& d = sim.data;
    const SimTruth& truth = sim.truth;
    const Index n = d.n(), p = d.p();
    if (truth.beta0.size() != p || truth.gamma0.rows() != d.q() || truth.gamma0.cols() != p)
        fail_input("diagnose: truth does not match the dataset dimensions");
    if (truth.support.empty()) fail_input("diagnose: beta_0 has an empty support");

    DiagnosticsReport rep;
    ReOptions re = options.re;
    re.threads = options.threads;
    Index r = 1;
    for (const auto& sup : truth.column_supports) r = std::max(r, Index(sup.size()));
    const Index s = Index(truth.support.size());

    const Eigen::MatrixXd z_live = d.z(Eigen::all, d.live_instruments());
    const Eigen::MatrixXd gamma_std = gamma_to_standardized_scale(d, truth.gamma0);
    const Eigen::MatrixXd zg = d.z * gamma_std;
    if (options.restricted_eigen || options.rates) {
        rep.kappa_z_r = restricted_eigenvalue(z_live, std::min(r, z_live.cols()), re);
        rep.kappa_zg_s = restricted_eigenvalue(zg, s, re);
    }

    const Eigen::MatrixXd c = zg.transpose() * zg / double(n);
    const Irrepresentability ir = irrepresentability(c, truth.support);
    if (options.irrepresentable) {
        rep.phi = ir.phi;
        rep.irrep_norm = ir.irrep_norm;
        rep.alpha_margin = 1.0 - ir.irrep_norm;
    }
    rep.min_eig_css = ir.min_eig_css;
    rep.b0 = kInf;
    for (Index j : truth.support) rep.b0 = std::min(rep.b0, std::abs(truth.beta0(j)));

    const double big_l = gamma_std.cwiseAbs().colwise().sum().maxCoeff();
    if (options.rates && !(rep.kappa_z_r->value > 0.0 && rep.kappa_zg_s->value > 0.0))
        rep.rates_note = "a restricted eigenvalue is zero, so the rate bounds are unbounded";
    if (options.rates && rep.rates_note.empty()) {
        RateInputs in;
        for (Index j = 0; j < p; ++j) in.sigma_j.push_back(std::sqrt(truth.sigma(j, j)));
        in.sigma_eta = std::sqrt(truth.sigma(p, p));
        in.r = r;
        in.s = s;
        in.n = n;
        in.p = p;
        in.q = d.q();
        in.kappa1 = rep.kappa_z_r->value;
        in.kappa2 = rep.kappa_zg_s->value;
        in.big_l = big_l;
        in.big_m = truth.beta0.lpNorm<1>();
        in.c = options.c;
        in.c0 = options.c0;
        rep.rates = theory_rates(in);
        rep.rate2_lhs = 16.0 * ir.phi / (in.kappa1 * in.kappa1) * double(r * s) * rep.rates->rate1_lhs;
        rep.rate2_rhs = (1.0 - ir.irrep_norm) / (3.0 + ir.irrep_norm);

        if (options.restricted_eigen) {
            ExecOptions exec;
            exec.threads = options.threads;
            const StageOneFit s1 = stage_one(d, rep.rates->lambda, PenaltyFamily(PenaltyKind::Lasso), exec);
            rep.kappa_xhat_s = restricted_eigenvalue(s1.x_hat, s, re);
        }
    }
    rep.c0_placeholder = true;

    rep.mu = options.penalty.level > 0.0 ? options.penalty.level : (rep.rates ? rep.rates->mu : 0.0);
    if (rep.mu > 0.0) {
        const PenaltySpec spec(options.penalty.family(), rep.mu);
        rep.rho_prime_zero = rho_prime_zero_plus(spec);
        rep.rho_prime_half_b0 = rho_prime(spec, rep.b0 / 2.0);
        std::vector<double> center;
        for (Index j : truth.support) center.push_back(truth.beta0(j));
        rep.tau0 = max_concavity_over_box(spec, center, rep.b0 / 2.0);
        rep.mu0 = ir.min_eig_css - rep.mu * rep.tau0;
        const double alpha = 1.0 - ir.irrep_norm;
        rep.b0_threshold = 2.0 / (2.0 - alpha) * ir.phi * rep.mu;
        if (options.weak_oracle) {
            const WeakOracleInputs& w = *options.weak_oracle;
            const double ratio = rep.rho_prime_half_b0 > 0.0
                                     ? (1.0 - w.alpha) * rep.rho_prime_zero / rep.rho_prime_half_b0
                                     : kInf;
            rep.irrep_bound_generic = std::min(ratio, w.c * std::pow(double(n), w.nu));
            rep.weak_oracle_lhs = double(s) * (2.0 * big_l * w.e1 + w.e2);
            rep.weak_oracle_rhs =
                std::min(w.alpha / ((4.0 - w.alpha) * ir.phi), (rep.mu0 / 2.0) * (rep.mu0 / 2.0) / double(s));
        }
    }

    if (options.least_false)
        rep.least_false = least_false_beta(d.x, truth.beta0, conditional_mean_error(truth.sigma, truth.errors));

    rep.exact = true;
    for (const auto& k : {rep.kappa_z_r, rep.kappa_zg_s, rep.kappa_xhat_s})
        if (k && !k->exact) rep.exact = false;
    return rep;
}

}  // namespace siv
