#include "sparse_iv/sparse_iv.h"

#include "sparse_iv/diagnostics.hpp"
#include "sparse_iv/error.hpp"
#include "sparse_iv/io.hpp"
#include "sparse_iv/parallel.hpp"
#include "sparse_iv/penalty.hpp"
#include "sparse_iv/simulation.hpp"
#include "sparse_iv/stability.hpp"

#include <json.hpp>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

struct siv_dataset {
    siv::Dataset data;
};

struct siv_fit {
    siv::Dataset data;
    int method = SIV_METHOD_2SR;
    siv::PenaltyFamily family;
    siv_fit_options options{};
    bool explicit_lambdas = false;
    std::optional<siv::TwoStageFit> two_stage;
    std::optional<siv::PenalizedFit> pls;
    Eigen::VectorXd beta;
    double adj_r2 = 0.0;
    double seconds_stage_one = 0.0;
    double seconds_total = 0.0;
};

namespace {

thread_local std::string g_last_error;

template <class F>
siv_status guard(F&& body) {
    try {
        body();
        g_last_error.clear();
        return SIV_OK;
    } catch (const siv::Error& e) {
        g_last_error = e.what();
        switch (e.kind()) {
            case siv::ErrorKind::Input: return SIV_ERR_INPUT;
            case siv::ErrorKind::Numeric: return SIV_ERR_NUMERIC;
            case siv::ErrorKind::Scope: return SIV_ERR_SCOPE;
        }
        return SIV_ERR_INTERNAL;
    } catch (const fs::filesystem_error& e) {
        g_last_error = e.what();
        return SIV_ERR_INPUT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SIV_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SIV_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) siv::fail_input(std::string(what) + " must not be NULL");
}

siv::PenaltyKind kind_of(int kind) {
    switch (kind) {
        case SIV_LASSO: return siv::PenaltyKind::Lasso;
        case SIV_SCAD: return siv::PenaltyKind::Scad;
        case SIV_MCP: return siv::PenaltyKind::Mcp;
        default: siv::fail_input("unknown penalty kind " + std::to_string(kind));
    }
}

siv::PenaltySpec spec_of(int kind, double a, double level) { return {siv::PenaltyFamily(kind_of(kind), a), level}; }

siv::SolverOptions solver_of(double tol, int max_iter) {
    siv::SolverOptions s;
    if (tol > 0.0) s.tol = tol;
    if (max_iter > 0) s.max_iter = max_iter;
    return s;
}

siv::SimConfig to_config(const siv_sim_config& c) {
    siv::SimConfig s;
    s.name = std::string(c.name, strnlen(c.name, sizeof c.name));
    if (s.name.empty()) s.name = "custom";
    s.n = siv::Index(c.n);
    s.p = siv::Index(c.p);
    s.q = siv::Index(c.q);
    s.r = siv::Index(c.r);
    s.s = siv::Index(c.s);
    s.gamma_lo = c.gamma_lo;
    s.gamma_hi = c.gamma_hi;
    s.mixed_strength = c.mixed_strength != 0;
    s.strong_count = siv::Index(c.strong_count);
    s.weak_lo = c.weak_lo;
    s.weak_hi = c.weak_hi;
    s.beta_lo = c.beta_lo;
    s.beta_hi = c.beta_hi;
    s.rho = c.rho;
    s.confound_value = c.confound_value;
    s.n_confounded = siv::Index(c.n_confounded);
    s.bernoulli_p = c.bernoulli_p;
    s.random_bernoulli = c.random_bernoulli != 0;
    s.bernoulli_max = c.bernoulli_max;
    s.seed = c.seed;
    s.validate();
    return s;
}

void from_config(const siv::SimConfig& s, siv_sim_config& c) {
    std::memset(&c, 0, sizeof c);
    std::strncpy(c.name, s.name.c_str(), sizeof c.name - 1);
    c.n = size_t(s.n);
    c.p = size_t(s.p);
    c.q = size_t(s.q);
    c.r = size_t(s.r);
    c.s = size_t(s.s);
    c.gamma_lo = s.gamma_lo;
    c.gamma_hi = s.gamma_hi;
    c.mixed_strength = s.mixed_strength;
    c.strong_count = size_t(s.strong_count);
    c.weak_lo = s.weak_lo;
    c.weak_hi = s.weak_hi;
    c.beta_lo = s.beta_lo;
    c.beta_hi = s.beta_hi;
    c.rho = s.rho;
    c.confound_value = s.confound_value;
    c.n_confounded = size_t(s.n_confounded);
    c.bernoulli_p = s.bernoulli_p;
    c.random_bernoulli = s.random_bernoulli;
    c.bernoulli_max = s.bernoulli_max;
    c.seed = s.seed;
}

siv::BenchmarkOptions bench_of(const siv_bench_options& o) {
    siv::BenchmarkOptions b;
    b.replicates = o.replicates;
    b.base_seed = o.base_seed;
    b.folds = o.folds;
    b.grid_size = o.grid_size;
    b.scad_a = o.scad_a > 0.0 ? o.scad_a : siv::kDefaultScadShape;
    b.mcp_a = o.mcp_a > 0.0 ? o.mcp_a : siv::kDefaultMcpShape;
    b.threads = siv::resolve_threads(o.threads);
    if (b.folds < 2) siv::fail_input("folds must be at least 2");
    if (b.grid_size < 1) siv::fail_input("grid size must be positive");
    return b;
}

json one_based(const std::vector<siv::Index>& v) {
    json a = json::array();
    for (auto j : v) a.push_back(j + 1);
    return a;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cv_json(const siv::CvResult& cv) {
    return json{{"grid", cv.grid}, {"cv_error", cv.cv_error}, {"chosen", cv.chosen},
                {"chosen_index", cv.chosen_index + 1}, {"seed", cv.seed}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

siv::ReMode re_mode_of(int mode) {
    switch (mode) {
        case SIV_RE_AUTO: return siv::ReMode::Auto;
        case SIV_RE_EXACT: return siv::ReMode::Exact;
        case SIV_RE_APPROXIMATE: return siv::ReMode::Approximate;
        default: siv::fail_input("unknown restricted-eigenvalue mode " + std::to_string(mode));
    }
}

json re_json(const std::optional<siv::ReResult>& r) {
    if (!r) return nullptr;
    return json{{"value", r->value}, {"exact", r->exact}};
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? number(*v) : json(nullptr);
}

}  // namespace

extern "C" {

const char* siv_version(void) { return "0.1.0"; }

const char* siv_last_error(void) { return g_last_error.c_str(); }

siv_status siv_penalty_value(int kind, double a, double level, double t, double* out) {
    return guard([&] {
        need(out, "out");
        *out = siv::penalty_value(spec_of(kind, a, level), t);
    });
}

siv_status siv_threshold(int kind, double a, double level, double z, double* out) {
    return guard([&] {
        need(out, "out");
        *out = siv::threshold(spec_of(kind, a, level), z);
    });
}

siv_status siv_rho_prime(int kind, double a, double level, double t, double* out) {
    return guard([&] {
        need(out, "out");
        *out = siv::rho_prime(spec_of(kind, a, level), t);
    });
}

siv_status siv_local_concavity(int kind, double a, double level, const double* theta, size_t len, double* out) {
    return guard([&] {
        need(out, "out");
        if (len > 0) need(theta, "theta");
        *out = siv::local_concavity(spec_of(kind, a, level), std::span<const double>(theta, len));
    });
}

siv_status siv_dataset_create(size_t n, size_t p, size_t q, const double* y, const double* x, const double* z,
                              siv_dataset** out) {
    return guard([&] {
        need(out, "out");
        need(y, "y");
        need(x, "x");
        need(z, "z");
        siv::Dataset d;
        d.y = Eigen::Map<const Eigen::VectorXd>(y, siv::Index(n));
        d.x = Eigen::Map<const Eigen::MatrixXd>(x, siv::Index(n), siv::Index(p));
        d.z = Eigen::Map<const Eigen::MatrixXd>(z, siv::Index(n), siv::Index(q));
        *out = new siv_dataset{siv::prepare(std::move(d))};
    });
}

siv_status siv_dataset_load_csv(const char* y_path, const char* x_path, const char* z_path, siv_dataset** out) {
    return guard([&] {
        need(out, "out");
        need(y_path, "y path");
        need(x_path, "x path");
        need(z_path, "z path");
        *out = new siv_dataset{siv::prepare(siv::read_dataset(y_path, x_path, z_path))};
    });
}

siv_status siv_dataset_load_dir(const char* dir, siv_dataset** out) {
    return guard([&] {
        need(out, "out");
        need(dir, "dir");
        *out = new siv_dataset{siv::prepare(siv::read_dataset_dir(dir))};
    });
}

void siv_dataset_free(siv_dataset* d) { delete d; }

siv_status siv_dataset_dims(const siv_dataset* d, size_t* n, size_t* p, size_t* q) {
    return guard([&] {
        need(d, "dataset");
        if (n) *n = size_t(d->data.n());
        if (p) *p = size_t(d->data.p());
        if (q) *q = size_t(d->data.q());
    });
}

size_t siv_dataset_num_dropped(const siv_dataset* d) { return d ? d->data.dropped_instruments.size() : 0; }

void siv_fit_options_default(siv_fit_options* o) {
    if (!o) return;
    *o = siv_fit_options{};
    o->method = SIV_METHOD_2SR;
    o->penalty = SIV_LASSO;
    o->shape_a = 0.0;
    o->cv_folds = 10;
    o->seed = 1;
    o->grid_size = 100;
    o->mu = -1.0;
    o->lambdas = nullptr;
    o->n_lambdas = 0;
    o->tol = 1e-7;
    o->max_iter = 10000;
    o->threads = 0;
}

siv_status siv_fit_run(const siv_dataset* d, const siv_fit_options* options, siv_fit** out) {
    return guard([&] {
        need(d, "dataset");
        need(options, "options");
        need(out, "out");
        const auto t0 = std::chrono::steady_clock::now();
        auto fit = std::make_unique<siv_fit>();
        fit->data = d->data;
        fit->method = options->method;
        fit->options = *options;
        fit->options.lambdas = nullptr;
        fit->family = siv::PenaltyFamily(kind_of(options->penalty), options->shape_a);
        if (options->cv_folds < 2) siv::fail_input("cv folds must be at least 2");
        if (options->grid_size < 1) siv::fail_input("grid size must be positive");

        siv::CvPolicy cv;
        cv.folds = options->cv_folds;
        cv.seed = options->seed;
        cv.grid_size = options->grid_size;
        siv::ExecOptions exec{siv::resolve_threads(options->threads), solver_of(options->tol, options->max_iter)};
        const siv::Dataset& data = fit->data;

        if (options->method == SIV_METHOD_PLS) {
            siv::LevelTuning tuning = cv;
            if (options->mu >= 0.0) tuning = options->mu;
            fit->pls = siv::fit_pls(data, tuning, fit->family, exec);
            fit->beta = fit->pls->beta;
        } else if (options->method == SIV_METHOD_2SR) {
            siv::StageOneTuning s1_tuning = cv;
            if (options->lambdas) {
                if (options->n_lambdas != size_t(data.p()))
                    siv::fail_input("expected " + std::to_string(data.p()) + " stage-1 levels, got " +
                                    std::to_string(options->n_lambdas));
                s1_tuning = std::vector<double>(options->lambdas, options->lambdas + options->n_lambdas);
                fit->explicit_lambdas = true;
            }
            siv::StageOneFit s1 = siv::stage_one(data, s1_tuning, fit->family, exec);
            fit->seconds_stage_one = seconds_since(t0);
            siv::LevelTuning tuning = cv;
            if (options->mu >= 0.0) tuning = options->mu;
            fit->two_stage = siv::stage_two(s1, data.y, tuning, fit->family, exec);
            fit->beta = fit->two_stage->beta_hat;
        } else {
            siv::fail_input("unknown method " + std::to_string(options->method));
        }
        const siv::MetricsRow m =
            siv::compute_metrics(fit->beta, Eigen::VectorXd::Zero(data.p()), data.x, data.y, data.x * fit->beta);
        fit->adj_r2 = m.adj_r2;
        fit->seconds_total = seconds_since(t0);
        *out = fit.release();
    });
}

void siv_fit_free(siv_fit* fit) { delete fit; }

size_t siv_fit_num_coefficients(const siv_fit* fit) { return fit ? size_t(fit->beta.size()) : 0; }

siv_status siv_fit_coefficients(const siv_fit* fit, double* out, size_t len) {
    return guard([&] {
        need(fit, "fit");
        need(out, "out");
        if (len < size_t(fit->beta.size())) siv::fail_input("output buffer too small");
        std::copy(fit->beta.data(), fit->beta.data() + fit->beta.size(), out);
    });
}

double siv_fit_level(const siv_fit* fit) {
    if (!fit) return 0.0;
    return fit->two_stage ? fit->two_stage->mu : fit->pls->level;
}

size_t siv_fit_model_size(const siv_fit* fit) {
    if (!fit) return 0;
    return size_t((fit->beta.array() != 0.0).count());
}

double siv_fit_adj_r2(const siv_fit* fit) { return fit ? fit->adj_r2 : 0.0; }

siv_status siv_fit_write(const siv_fit* fit, const char* dir, int full_beta, int timings) {
    return guard([&] {
        need(fit, "fit");
        need(dir, "dir");
        const fs::path out(dir);
        fs::create_directories(out);
        const siv::Dataset& d = fit->data;

        siv::CsvWriter beta(out / "beta.csv", {"index", "coefficient"});
        for (siv::Index j = 0; j < fit->beta.size(); ++j)
            if (full_beta || fit->beta(j) != 0.0) beta.cell(j + 1).cell(fit->beta(j)).end_row();
        beta.close();

        std::vector<siv::Index> support;
        for (siv::Index j = 0; j < fit->beta.size(); ++j)
            if (fit->beta(j) != 0.0) support.push_back(j);

        json s;
        s["method"] = fit->two_stage ? "2SR" : "PLS";
        s["penalty"] = siv::to_string(fit->family.kind);
        s["shape_a"] = fit->family.kind == siv::PenaltyKind::Lasso ? json(nullptr) : json(fit->family.shape_a);
        s["n"] = d.n();
        s["p"] = d.p();
        s["q"] = d.q();
        s["cv_folds"] = fit->options.cv_folds;
        s["seed"] = fit->options.seed;
        s["grid_size"] = fit->options.grid_size;
        s["model_size"] = support.size();
        s["support"] = one_based(support);
        s["adjusted_r2"] = number(fit->adj_r2);
        s["dropped_instruments"] = one_based(d.dropped_instruments);

        if (fit->two_stage) {
            const siv::TwoStageFit& f = *fit->two_stage;
            siv::CsvWriter gamma(out / "gamma.csv", {"instrument", "covariate", "value"});
            const Eigen::MatrixXd raw = siv::gamma_to_raw_scale(d, f.stage_one.gamma_hat);
            for (siv::Index j = 0; j < raw.cols(); ++j)
                for (siv::Index i = 0; i < raw.rows(); ++i)
                    if (raw(i, j) != 0.0) gamma.cell(i + 1).cell(j + 1).cell(raw(i, j)).end_row();
            gamma.close();
            s["mu"] = f.mu;
            s["mu_tuning"] = f.mu_cv ? "cv" : "explicit";
            s["lambdas"] = f.stage_one.lambdas;
            s["lambda_tuning"] = fit->explicit_lambdas ? "explicit" : "cv";
            s["dead_columns"] = one_based(f.stage_one.dead_columns);
            s["stage_one_nonzeros"] = (f.stage_one.gamma_hat.array() != 0.0).count();
            if (f.mu_cv) s["mu_cv"] = cv_json(*f.mu_cv);
        } else {
            const siv::PenalizedFit& f = *fit->pls;
            s["mu"] = f.level;
            s["mu_tuning"] = f.cv ? "cv" : "explicit";
            s["excluded_columns"] = one_based(f.excluded);
            if (f.cv) s["mu_cv"] = cv_json(*f.cv);
        }
        if (timings)
            s["timings"] = {{"stage_one_seconds", fit->seconds_stage_one}, {"total_seconds", fit->seconds_total}};
        siv::write_text(out / "summary.json", s.dump(2) + "\n");
    });
}

siv_status siv_sim_config_preset(int model, siv_sim_config* out) {
    return guard([&] {
        need(out, "out");
        from_config(siv::SimConfig::preset(model), *out);
    });
}

siv_status siv_simulate_write(const siv_sim_config* config, const char* dir) {
    return guard([&] {
        need(config, "config");
        need(dir, "dir");
        const siv::SimConfig cfg = to_config(*config);
        siv::write_simulation(dir, cfg, siv::generate(cfg));
    });
}

void siv_bench_options_default(siv_bench_options* o) {
    if (!o) return;
    o->replicates = 50;
    o->base_seed = 1;
    o->folds = 10;
    o->grid_size = 100;
    o->scad_a = siv::kDefaultScadShape;
    o->mcp_a = siv::kDefaultMcpShape;
    o->threads = 0;
}

siv_status siv_benchmark_write(const siv_sim_config* models, size_t n_models, const siv_bench_options* options,
                               const char* dir) {
    return guard([&] {
        need(models, "models");
        need(options, "options");
        need(dir, "dir");
        if (n_models == 0) siv::fail_input("at least one model is required");
        std::vector<siv::SimConfig> cfgs;
        for (size_t i = 0; i < n_models; ++i) cfgs.push_back(to_config(models[i]));
        const siv::BenchmarkOptions b = bench_of(*options);
        std::vector<std::vector<siv::ReplicateResult>> raw;
        const auto records = siv::run_benchmark(cfgs, b, &raw);

        const fs::path out(dir);
        fs::create_directories(out);
        siv::CsvWriter table(out / "table.csv", {"model", "method", "penalty", "metric", "mean", "sd", "replicates_ok"});
        for (const auto& r : records)
            table.cell(r.model).cell(r.method).cell(r.penalty).cell(r.metric).cell(r.mean).cell(r.sd)
                .cell(r.replicates_ok).end_row();
        table.close();

        siv::CsvWriter reps(out / "replicates.csv",
                            {"model", "replicate", "seed", "method", "penalty", "l1_loss", "pred_loss", "tp", "fp",
                             "tn", "fn", "model_size", "mcc", "adj_r2", "error"});
        for (size_t m = 0; m < cfgs.size(); ++m)
            for (size_t i = 0; i < raw[m].size(); ++i) {
                const auto& rep = raw[m][i];
                for (size_t k = 0; k < b.methods.size(); ++k) {
                    reps.cell(cfgs[m].name).cell(siv::Index(i + 1)).cell(std::to_string(rep.seed))
                        .cell(b.methods[k].method_name()).cell(b.methods[k].penalty_name());
                    if (const auto& row = rep.metrics[k]) {
                        reps.cell(row->l1_loss).cell(row->pred_loss).cell(row->tp).cell(row->fp).cell(row->tn)
                            .cell(row->fn).cell(row->model_size).cell(row->mcc).cell(row->adj_r2).cell("");
                    } else {
                        for (int c = 0; c < 9; ++c) reps.cell("");
                        std::string msg = rep.errors[k];
                        for (char& ch : msg)
                            if (ch == ',' || ch == '\n') ch = ';';
                        reps.cell(msg);
                    }
                    reps.end_row();
                }
            }
        reps.close();
    });
}

siv_status siv_curve_write(const siv_sim_config* tmpl, const size_t* n_values, size_t count,
                           const siv_bench_options* options, const char* dir) {
    return guard([&] {
        need(tmpl, "template");
        need(n_values, "n_values");
        need(options, "options");
        need(dir, "dir");
        std::vector<siv::Index> ns;
        for (size_t i = 0; i < count; ++i) ns.push_back(siv::Index(n_values[i]));
        const auto records = siv::performance_curve(to_config(*tmpl), ns, bench_of(*options));
        const fs::path out(dir);
        fs::create_directories(out);
        siv::CsvWriter curve(out / "curve.csv", {"n", "method", "penalty", "metric", "mean", "sd"});
        for (const auto& r : records)
            curve.cell(r.n).cell(r.method).cell(r.penalty).cell(r.metric).cell(r.mean).cell(r.sd).end_row();
        curve.close();
    });
}

void siv_stability_options_default(siv_stability_options* o) {
    if (!o) return;
    o->penalty = SIV_LASSO;
    o->shape_a = 0.0;
    o->subsamples = 100;
    o->seed = 1;
    o->grid_size = 100;
    o->threshold = 0.4;
    o->pls_mode = 0;
    o->refit_stage_one = 0;
    o->cv_folds = 10;
    o->threads = 0;
}

siv_status siv_stability_write(const siv_dataset* d, const siv_stability_options* options, const char* dir) {
    return guard([&] {
        need(d, "dataset");
        need(options, "options");
        need(dir, "dir");
        if (!(options->threshold >= 0.0 && options->threshold <= 1.0)) siv::fail_input("threshold must lie in [0, 1]");
        if (options->grid_size < 1) siv::fail_input("grid size must be positive");
        siv::StabilityOptions so;
        so.subsamples = options->subsamples;
        so.seed = options->seed;
        so.grid_size = options->grid_size;
        so.mode = options->pls_mode ? siv::StabilityMode::Pls : siv::StabilityMode::TwoStage;
        so.refit_stage_one = options->refit_stage_one != 0;
        so.stage_one_cv.folds = options->cv_folds;
        so.stage_one_cv.seed = options->seed;
        so.threads = siv::resolve_threads(options->threads);
        const siv::PenaltyFamily family(kind_of(options->penalty), options->shape_a);
        const siv::StabilityPath path = siv::stability_selection(d->data, family, so);

        const fs::path out(dir);
        fs::create_directories(out);
        siv::CsvWriter st(out / "stability.csv", {"covariate", "level", "probability"});
        for (siv::Index j = 0; j < path.probs.rows(); ++j)
            for (siv::Index k = 0; k < path.probs.cols(); ++k)
                st.cell(j + 1).cell(path.mu_grid[size_t(k)]).cell(path.probs(j, k)).end_row();
        st.close();
        siv::CsvWriter sel(out / "selected.csv", {"index", "max_probability"});
        for (const auto& [j, prob] : siv::max_selection_probability(path, options->threshold))
            sel.cell(j + 1).cell(prob).end_row();
        sel.close();
    });
}

void siv_diagnose_options_default(siv_diagnose_options* o) {
    if (!o) return;
    *o = siv_diagnose_options{};
    o->restricted_eigen = 1;
    o->irrepresentable = 1;
    o->least_false = 1;
    o->rates = 1;
    o->re_mode = SIV_RE_AUTO;
    o->re_draws = 100000;
    o->seed = 1;
    o->c = 2.0 * std::sqrt(2.0);
    o->c0 = 1.0;
    o->penalty = SIV_LASSO;
    o->shape_a = 0.0;
    o->mu = 0.0;
    o->weak_oracle = 0;
    o->alpha = 0.5;
    o->c_bound = 1.0;
    o->threads = 0;
}


siv_status siv_diagnose_write(const char* dataset_dir, const siv_diagnose_options* options, const char* out_dir) {
    return guard([&] {
        need(dataset_dir, "dataset dir");
        need(options, "options");
        need(out_dir, "out dir");
        siv::DiagnoseOptions o;
        o.restricted_eigen = options->restricted_eigen != 0;
        o.irrepresentable = options->irrepresentable != 0;
        o.least_false = options->least_false != 0;
        o.rates = options->rates != 0;
        o.re.mode = re_mode_of(options->re_mode);
        o.re.seed = options->seed;
        o.re.draws = options->re_draws;
        o.c = options->c;
        o.c0 = options->c0;
        o.penalty = spec_of(options->penalty, options->shape_a, std::max(0.0, options->mu));
        o.threads = siv::resolve_threads(options->threads);
        if (options->weak_oracle)
            o.weak_oracle = siv::WeakOracleInputs{options->alpha, options->e1, options->e2, options->nu,
                                                  options->c_bound};
        const siv::Simulation sim = siv::read_simulation(dataset_dir);
        const siv::DiagnosticsReport r = siv::diagnose(sim, o);

        json j;
        j["kappa_z_r"] = re_json(r.kappa_z_r);
        j["kappa_zg_s"] = re_json(r.kappa_zg_s);
        j["kappa_xhat_s"] = re_json(r.kappa_xhat_s);
        j["exact"] = r.exact;
        if (o.irrepresentable) {
            j["phi"] = r.phi;
            j["irrep_norm"] = r.irrep_norm;
            j["alpha_margin"] = r.alpha_margin;
        }
        j["min_eig_css"] = r.min_eig_css;
        j["b0"] = r.b0;
        if (r.rates) {
            const auto& t = *r.rates;
            j["rates"] = {{"C", o.c},
                          {"C0", o.c0},
                          {"C0_is_placeholder", r.c0_placeholder},
                          {"lambda", t.lambda},
                          {"lambda_max", t.lambda_max},
                          {"sigma_max", t.sigma_max},
                          {"mu", t.mu},
                          {"gamma_l1_bound", t.gamma_l1_bound},
                          {"gamma_pred_sq_bound", t.gamma_pred_sq_bound},
                          {"beta_l1_bound", t.beta_l1_bound},
                          {"beta_pred_sq_bound", t.beta_pred_sq_bound},
                          {"rate1_lhs", t.rate1_lhs},
                          {"rate1_rhs", t.rate1_rhs},
                          {"rate1_holds", t.rate1_lhs <= t.rate1_rhs},
                          {"rate2_lhs", opt(r.rate2_lhs)},
                          {"rate2_rhs", opt(r.rate2_rhs)},
                          {"failure_probability", number(t.failure_probability)}};
        }
        if (!r.rates_note.empty()) j["rates_note"] = r.rates_note;
        j["penalty"] = siv::to_string(o.penalty.kind);
        j["mu"] = r.mu;
        if (r.mu > 0.0) {
            j["rho_prime_zero_plus"] = r.rho_prime_zero;
            j["rho_prime_half_b0"] = r.rho_prime_half_b0;
            j["tau0"] = r.tau0;
            j["mu0"] = r.mu0;
            j["b0_threshold"] = r.b0_threshold;
        }
        if (options->weak_oracle) {
            j["weak_oracle"] = {{"alpha", options->alpha},
                                {"e1", options->e1},
                                {"e2", options->e2},
                                {"nu", options->nu},
                                {"c", options->c_bound},
                                {"irrep_bound", opt(r.irrep_bound_generic)},
                                {"lhs", opt(r.weak_oracle_lhs)},
                                {"rhs", opt(r.weak_oracle_rhs)}};
        }
        if (r.least_false) {
            j["least_false"] = {{"gap_l1", r.least_false->gap_l1},
                                {"pseudo_inverse", r.least_false->pseudo_inverse},
                                {"beta_star", std::vector<double>(r.least_false->beta_star.data(),
                                                                  r.least_false->beta_star.data() +
                                                                      r.least_false->beta_star.size())}};
        }
        const fs::path out(out_dir);
        fs::create_directories(out);
        siv::write_text(out / "diagnostics.json", j.dump(2) + "\n");
    });
}

siv_status siv_restricted_eigenvalue(const double* a, size_t n, size_t m, size_t s, int mode, uint64_t seed,
                                     long draws, double* value, int* exact) {
    return guard([&] {
        need(a, "a");
        need(value, "value");
        siv::ReOptions o;
        o.mode = re_mode_of(mode);
        o.seed = seed;
        if (draws > 0) o.draws = draws;
        const Eigen::Map<const Eigen::MatrixXd> mat(a, siv::Index(n), siv::Index(m));
        const siv::ReResult r = siv::restricted_eigenvalue(mat, siv::Index(s), o);
        *value = r.value;
        if (exact) *exact = r.exact ? 1 : 0;
    });
}

siv_status siv_irrepresentability(const double* c, size_t p, const size_t* support, size_t s, double* irrep_norm,
                                  double* phi) {
    return guard([&] {
        need(c, "c");
        if (s > 0) need(support, "support");
        std::vector<siv::Index> sup;
        for (size_t i = 0; i < s; ++i) sup.push_back(siv::Index(support[i]));
        const Eigen::Map<const Eigen::MatrixXd> mat(c, siv::Index(p), siv::Index(p));
        const siv::Irrepresentability r = siv::irrepresentability(mat, sup);
        if (irrep_norm) *irrep_norm = r.irrep_norm;
        if (phi) *phi = r.phi;
    });
}

}  // extern "C"
