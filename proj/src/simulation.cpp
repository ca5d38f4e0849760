#include "sparse_iv/simulation.hpp"

#include "sparse_iv/error.hpp"
#include "sparse_iv/parallel.hpp"
#include "sparse_iv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace siv {

void SimConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) fail_input("invalid simulation config: " + msg);
    };
    need(n >= 2, "n must be at least 2");
    need(p >= 1 && q >= 1, "p and q must be positive");
    need(r >= 1 && r <= q, "r must lie in [1, q]");
    need(s >= 0 && s <= p, "s must lie in [0, p]");
    need(0.0 < gamma_lo && gamma_lo < gamma_hi, "gamma range needs 0 < a < b");
    need(0.0 < beta_lo && beta_lo < beta_hi, "beta range needs 0 < a < b");
    need(!mixed_strength || (strong_count >= 0 && strong_count <= r && 0.0 < weak_lo && weak_lo < weak_hi),
         "mixed strength needs strong_count <= r and 0 < weak_lo < weak_hi");
    need(n_confounded >= s && n_confounded <= p, "n_confounded must lie in [s, p]");
    need(std::abs(rho) < 1.0, "|rho| must be below 1");
    need(random_bernoulli ? (bernoulli_max > 0.0 && bernoulli_max <= 1.0) : (bernoulli_p > 0.0 && bernoulli_p < 1.0),
         "Bernoulli probability out of range");
}

SimConfig SimConfig::preset(int model) {
    SimConfig c;
    c.name = "model" + std::to_string(model);
    switch (model) {
        case 1: c.n = 200; c.p = 100; c.q = 100; break;
        case 2: c.n = 400; c.p = 200; c.q = 200; break;
        case 3: c.n = 400; c.p = 200; c.q = 200; c.gamma_lo = 0.5; c.gamma_hi = 0.75; break;
        case 4: c.n = 400; c.p = 200; c.q = 200; break;
        case 5: c.n = 300; c.p = 600; c.q = 600; break;
        case 6: c.n = 500; c.p = 1000; c.q = 1000; break;
        case 7: c.n = 500; c.p = 1000; c.q = 1000; c.gamma_lo = 0.5; c.gamma_hi = 0.75; break;
        case 8: c.n = 500; c.p = 1000; c.q = 1000; break;
        default: fail_input("unknown model preset " + std::to_string(model) + " (expected 1-8)");
    }
    if (model == 4 || model == 8) {
        c.r = 50;
        c.mixed_strength = true;
        c.strong_count = 5;
        c.gamma_lo = 0.5;
        c.gamma_hi = 1.0;
        c.random_bernoulli = true;
    }
    return c;
}

std::optional<Eigen::MatrixXd> error_covariance(Index p, double rho, double confound_value,
                                                const std::vector<Index>& confounded) {
    Eigen::MatrixXd sigma(p + 1, p + 1);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    sigma.row(p).setZero();
    sigma.col(p).setZero();
    sigma(p, p) = 1.0;
    for (Index j : confounded) {
        sigma(j, p) = confound_value;
        sigma(p, j) = confound_value;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return sigma;
}

namespace {

// First k entries of a uniformly shuffled copy of pool (partial Fisher-Yates).
std::vector<Index> choose(std::vector<Index> pool, Index k, Rng& rng) {
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, static_cast<Index>(pool.size()) - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

double signed_uniform(double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> mag(lo, hi);
    std::bernoulli_distribution sign(0.5);
    const double v = mag(rng);
    return sign(rng) ? v : -v;
}

std::vector<Index> iota_vec(Index count) {
    std::vector<Index> v(static_cast<std::size_t>(count));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

}  // namespace

Simulation generate(const SimConfig& cfg) {
    cfg.validate();
    const Index n = cfg.n, p = cfg.p, q = cfg.q;
    Simulation sim;
    SimTruth& truth = sim.truth;

    Rng z_rng = make_stream(cfg.seed, 1);
    truth.bernoulli_probs.resize(q);
    if (cfg.random_bernoulli) {
        std::uniform_real_distribution<double> u(0.0, cfg.bernoulli_max);
        for (Index j = 0; j < q; ++j) truth.bernoulli_probs(j) = u(z_rng);
    } else {
        truth.bernoulli_probs.setConstant(cfg.bernoulli_p);
    }
    Dataset& raw = sim.raw;
    raw.z.resize(n, q);
    for (Index j = 0; j < q; ++j) {
        std::bernoulli_distribution draw(truth.bernoulli_probs(j));
        for (Index i = 0; i < n; ++i) raw.z(i, j) = draw(z_rng) ? 1.0 : 0.0;
    }
    Dataset inst;
    inst.z = raw.z;
    inst.y = Eigen::VectorXd::Zero(n);
    inst.x = Eigen::MatrixXd::Zero(n, 1);
    inst = prepare(std::move(inst));
    const std::vector<Index> live = inst.live_instruments();
    if (static_cast<Index>(live.size()) < cfg.r)
        fail_numeric("only " + std::to_string(live.size()) + " non-constant instruments drawn; need r = " +
                     std::to_string(cfg.r));

    // Supports are drawn from non-constant instruments only.
    Rng g_rng = make_stream(cfg.seed, 2);
    truth.gamma0 = Eigen::MatrixXd::Zero(q, p);
    truth.column_supports.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        const std::vector<Index> pos = choose(live, cfg.r, g_rng);
        for (Index k = 0; k < cfg.r; ++k) {
            const bool weak = cfg.mixed_strength && k >= cfg.strong_count;
            truth.gamma0(pos[static_cast<std::size_t>(k)], j) =
                weak ? signed_uniform(cfg.weak_lo, cfg.weak_hi, g_rng) : signed_uniform(cfg.gamma_lo, cfg.gamma_hi, g_rng);
        }
        auto& sup = truth.column_supports[static_cast<std::size_t>(j)];
        sup = pos;
        std::sort(sup.begin(), sup.end());
    }

    Rng b_rng = make_stream(cfg.seed, 3);
    truth.beta0 = Eigen::VectorXd::Zero(p);
    truth.support = choose(iota_vec(p), cfg.s, b_rng);
    std::sort(truth.support.begin(), truth.support.end());
    for (Index j : truth.support) truth.beta0(j) = signed_uniform(cfg.beta_lo, cfg.beta_hi, b_rng);

    Rng s_rng = make_stream(cfg.seed, 4);
    std::vector<Index> complement;
    for (Index j = 0; j < p; ++j)
        if (!std::binary_search(truth.support.begin(), truth.support.end(), j)) complement.push_back(j);
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        std::vector<Index> conf = truth.support;
        for (Index j : choose(complement, cfg.n_confounded - cfg.s, s_rng)) conf.push_back(j);
        std::sort(conf.begin(), conf.end());
        if (auto sigma = error_covariance(p, cfg.rho, cfg.confound_value, conf)) {
            truth.sigma = std::move(*sigma);
            truth.confounded = std::move(conf);
            ok = true;
        }
    }
    if (!ok) fail_numeric("error covariance not positive definite after 100 placements of the confounded entries");

    Rng e_rng = make_stream(cfg.seed, 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd u(n, p + 1);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j <= p; ++j) u(i, j) = normal(e_rng);
    const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(truth.sigma).matrixL();
    const Eigen::MatrixXd draws = u * lower.transpose();
    truth.errors = draws.leftCols(p);
    truth.eta = draws.col(p);

    raw.x = raw.z * truth.gamma0 + truth.errors;
    raw.y = raw.x * truth.beta0 + truth.eta;
    sim.data = prepare(raw);
    return sim;
}

double matthews_correlation(int tp, int tn, int fp, int fn) {
    const double a = tp + fp, b = tp + fn, c = tn + fp, e = tn + fn;
    if (a == 0.0 || b == 0.0 || c == 0.0 || e == 0.0) return 0.0;
    return (static_cast<double>(tp) * tn - static_cast<double>(fp) * fn) / std::sqrt(a * b * c * e);
}

MetricsRow compute_metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta0, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
    if (beta_hat.size() != beta0.size() || x.cols() != beta0.size() || x.rows() != y.size() ||
        fitted.size() != y.size())
        fail_input("compute_metrics: dimension mismatch");
    MetricsRow m;
    const Eigen::VectorXd diff = beta_hat - beta0;
    const double n = static_cast<double>(y.size());
    m.l1_loss = diff.lpNorm<1>();
    m.pred_loss = (x * diff).norm() / std::sqrt(n);
    for (Index j = 0; j < beta0.size(); ++j) {
        const bool selected = beta_hat(j) != 0.0;
        const bool truth = beta0(j) != 0.0;
        if (selected && truth) ++m.tp;
        else if (selected) ++m.fp;
        else if (truth) ++m.fn;
        else ++m.tn;
    }
    m.model_size = m.tp + m.fp;
    m.mcc = matthews_correlation(m.tp, m.tn, m.fp, m.fn);
    const double rss = (y - fitted).squaredNorm();
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    const double dof = n - m.model_size - 1.0;
    m.adj_r2 = (dof > 0.0 && tss > 0.0) ? 1.0 - (rss / dof) / (tss / (n - 1.0))
                                        : std::numeric_limits<double>::quiet_NaN();
    return m;
}

std::string MethodSpec::method_name() const { return method == Method::Pls ? "PLS" : "2SR"; }

std::string MethodSpec::penalty_name() const { return oracle ? "oracle" : to_string(penalty); }

std::vector<MethodSpec> all_methods() {
    std::vector<MethodSpec> out;
    for (Method m : {Method::Pls, Method::TwoStage})
        for (PenaltyKind k : {PenaltyKind::Lasso, PenaltyKind::Scad, PenaltyKind::Mcp}) out.push_back({m, false, k});
    out.push_back({Method::Pls, true, PenaltyKind::Lasso});
    out.push_back({Method::TwoStage, true, PenaltyKind::Lasso});
    return out;
}

ReplicateResult run_replicate(const SimConfig& cfg, const BenchmarkOptions& options) {
    ReplicateResult out;
    out.seed = cfg.seed;
    out.metrics.resize(options.methods.size());
    out.errors.resize(options.methods.size());

    Simulation sim;
    try {
        sim = generate(cfg);
    } catch (const std::exception& e) {
        std::fill(out.errors.begin(), out.errors.end(), std::string("generation failed: ") + e.what());
        return out;
    }
    const Dataset& d = sim.data;
    CvPolicy cv;
    cv.folds = options.folds;
    cv.seed = cfg.seed;
    cv.grid_size = options.grid_size;
    ExecOptions exec{1, options.solver};

    std::optional<OracleFit> oracle;
    for (std::size_t k = 0; k < options.methods.size(); ++k) {
        const MethodSpec& m = options.methods[k];
        try {
            Eigen::VectorXd beta;
            if (m.oracle) {
                if (!oracle) oracle = fit_oracles(d, sim.truth.support, sim.truth.column_supports);
                beta = m.method == Method::Pls ? oracle->pls_beta : oracle->two_stage_beta;
            } else {
                const double a = m.penalty == PenaltyKind::Scad ? options.scad_a
                                 : m.penalty == PenaltyKind::Mcp ? options.mcp_a
                                                                 : 0.0;
                const PenaltyFamily family(m.penalty, a);
                if (m.method == Method::Pls) {
                    beta = fit_pls(d, cv, family, exec).beta;
                } else {
                    FitOptions fo;
                    fo.family = family;
                    fo.cv = cv;
                    fo.exec = exec;
                    beta = fit_2sr(d, fo).beta_hat;
                }
            }
            out.metrics[k] = compute_metrics(beta, sim.truth.beta0, d.x, d.y, d.x * beta);
        } catch (const std::exception& e) {
            out.errors[k] = e.what();
        }
    }
    return out;
}

namespace {

double metric_value(const MetricsRow& m, std::size_t which) {
    switch (which) {
        case 0: return m.l1_loss;
        case 1: return m.pred_loss;
        case 2: return m.tp;
        case 3: return m.model_size;
        default: return m.mcc;
    }
}

}  // namespace

std::vector<BenchmarkRecord> summarize(const std::string& model, const std::vector<MethodSpec>& methods,
                                       const std::vector<ReplicateResult>& replicates) {
    std::vector<BenchmarkRecord> out;
    for (std::size_t k = 0; k < methods.size(); ++k) {
        for (std::size_t metric = 0; metric < std::size(kMetricNames); ++metric) {
            std::vector<double> values;
            for (const auto& rep : replicates)
                if (k < rep.metrics.size() && rep.metrics[k]) values.push_back(metric_value(*rep.metrics[k], metric));
            BenchmarkRecord rec{model, methods[k].method_name(), methods[k].penalty_name(), kMetricNames[metric]};
            rec.replicates_ok = static_cast<int>(values.size());
            if (values.empty()) {
                rec.mean = rec.sd = std::numeric_limits<double>::quiet_NaN();
            } else {
                double sum = 0.0;
                for (double v : values) sum += v;
                rec.mean = sum / static_cast<double>(values.size());
                double ss = 0.0;
                for (double v : values) ss += (v - rec.mean) * (v - rec.mean);
                rec.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::vector<BenchmarkRecord> run_benchmark(const std::vector<SimConfig>& models, const BenchmarkOptions& options,
                                           std::vector<std::vector<ReplicateResult>>* raw) {
    if (options.replicates < 1) fail_input("replicates must be at least 1");
    std::vector<BenchmarkRecord> out;
    if (raw) raw->clear();
    for (const SimConfig& model : models) {
        model.validate();
        std::vector<ReplicateResult> reps(static_cast<std::size_t>(options.replicates));
        parallel_for(reps.size(), options.threads, [&](std::size_t i) {
            SimConfig cfg = model;
            cfg.seed = options.base_seed + i;
            reps[i] = run_replicate(cfg, options);
        });
        auto rows = summarize(model.name, options.methods, reps);
        out.insert(out.end(), rows.begin(), rows.end());
        if (raw) raw->push_back(std::move(reps));
    }
    return out;
}

std::vector<CurveRecord> performance_curve(const SimConfig& tmpl, const std::vector<Index>& n_values,
                                           const BenchmarkOptions& options) {
    if (n_values.empty()) fail_input("performance curve needs at least one sample size");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (!(n_values[i] > n_values[i - 1])) fail_input("sample sizes must be strictly ascending");
    std::vector<CurveRecord> out;
    for (Index n : n_values) {
        SimConfig cfg = tmpl;
        cfg.n = n;
        for (const BenchmarkRecord& r : run_benchmark({cfg}, options))
            out.push_back({n, r.method, r.penalty, r.metric, r.mean, r.sd, r.replicates_ok});
    }
    return out;
}

}  // namespace siv
