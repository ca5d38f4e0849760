// sparse-iv: command-line front end over the C API.

#include "sparse_iv/sparse_iv.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

int report(siv_status st) {
    if (st == SIV_OK) return 0;
    std::fprintf(stderr, "sparse-iv: %s\n", siv_last_error());
    return st == SIV_ERR_INTERNAL ? 3 : static_cast<int>(st);
}

const std::map<std::string, int> kPenalties{{"lasso", SIV_LASSO}, {"scad", SIV_SCAD}, {"mcp", SIV_MCP}};

struct DataFlags {
    std::string y, x, z, dataset;

    void add(CLI::App* cmd) {
        auto* gy = cmd->add_option("--y", y, "response CSV (one column, header row)");
        auto* gx = cmd->add_option("--x", x, "covariate CSV");
        auto* gz = cmd->add_option("--z", z, "instrument CSV");
        auto* gd = cmd->add_option("--dataset", dataset, "directory holding y.csv, x.csv and z.csv");
        gy->needs(gx, gz);
        gd->excludes(gy, gx, gz);
    }

    // Exit code; 0 on success, otherwise the error has been reported.
    int load(siv_dataset** out) const {
        if (!dataset.empty()) return report(siv_dataset_load_dir(dataset.c_str(), out));
        if (y.empty() || x.empty() || z.empty()) {
            std::fprintf(stderr, "sparse-iv: give --y, --x and --z, or --dataset\n");
            return 2;
        }
        return report(siv_dataset_load_csv(y.c_str(), x.c_str(), z.c_str(), out));
    }
};

// Explicit simulation fields layered over a preset.
struct SimFlags {
    std::optional<size_t> n, p, q, r, s, n_confounded, strong_count;
    std::vector<double> gamma_range, beta_range, weak_range;
    std::optional<double> rho, confound_value, bernoulli_p, bernoulli_max;
    bool random_bernoulli = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--n", n, "sample size");
        cmd->add_option("--p", p, "number of covariates");
        cmd->add_option("--q", q, "number of instruments");
        cmd->add_option("--r", r, "nonzeros per column of gamma_0");
        cmd->add_option("--s", s, "nonzeros of beta_0");
        cmd->add_option("--gamma-range", gamma_range, "strong instrument range a b")->expected(2);
        cmd->add_option("--weak-range", weak_range, "weak instrument range (enables mixed strength)")->expected(2);
        cmd->add_option("--strong-count", strong_count, "strong entries per column in mixed mode");
        cmd->add_option("--beta-range", beta_range, "signal range a b")->expected(2);
        cmd->add_option("--rho", rho, "AR base of the covariate error covariance");
        cmd->add_option("--confound-value", confound_value, "covariance of confounded errors with eta");
        cmd->add_option("--n-confounded", n_confounded, "number of confounded covariates");
        cmd->add_option("--bernoulli-p", bernoulli_p, "instrument success probability");
        cmd->add_flag("--random-bernoulli", random_bernoulli, "per-column probability ~ U(0, bernoulli-max)");
        cmd->add_option("--bernoulli-max", bernoulli_max, "upper end for --random-bernoulli");
    }

    void apply(siv_sim_config& c) const {
        if (n) c.n = *n;
        if (p) c.p = *p;
        if (q) c.q = *q;
        if (r) c.r = *r;
        if (s) c.s = *s;
        if (gamma_range.size() == 2) c.gamma_lo = gamma_range[0], c.gamma_hi = gamma_range[1];
        if (weak_range.size() == 2) c.weak_lo = weak_range[0], c.weak_hi = weak_range[1], c.mixed_strength = 1;
        if (strong_count) c.strong_count = *strong_count;
        if (beta_range.size() == 2) c.beta_lo = beta_range[0], c.beta_hi = beta_range[1];
        if (rho) c.rho = *rho;
        if (confound_value) c.confound_value = *confound_value;
        if (n_confounded) c.n_confounded = *n_confounded;
        if (bernoulli_p) c.bernoulli_p = *bernoulli_p;
        if (random_bernoulli) c.random_bernoulli = 1;
        if (bernoulli_max) c.bernoulli_max = *bernoulli_max;
        if (n || p || q || r || s) {
            const std::string name = std::string(c.name) + "-custom";
            std::snprintf(c.name, sizeof c.name, "%s", name.c_str());
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage regularized estimation for sparse instrumental-variables regression"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: SPARSE_IV_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);

    // fit
    auto* fit = app.add_subcommand("fit", "fit 2SR (or PLS) to CSV data");
    DataFlags fit_data;
    fit_data.add(fit);
    std::string method = "2sr", penalty = "lasso", out;
    double shape_a = 0.0, mu = -1.0, lambda = -1.0, tol = 1e-7;
    int folds = 10, grid_size = 100, max_iter = 10000;
    uint64_t seed = 1;
    bool full_beta = false, timings = false;
    fit->add_option("--method", method, "2sr or pls")->check(CLI::IsMember({"2sr", "pls"}));
    fit->add_option("--penalty", penalty, "lasso, scad or mcp")->check(CLI::IsMember({"lasso", "scad", "mcp"}));
    fit->add_option("--a", shape_a, "penalty shape (default 3.7 SCAD, 3.0 MCP)");
    fit->add_option("--cv-folds", folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    fit->add_option("--seed", seed, "fold seed");
    fit->add_option("--grid-size", grid_size, "levels in the tuning grid")->check(CLI::PositiveNumber);
    fit->add_option("--mu", mu, "fixed stage-2 level instead of cross-validation");
    fit->add_option("--lambda", lambda, "fixed stage-1 level for every covariate");
    fit->add_option("--tol", tol, "coordinate descent tolerance");
    fit->add_option("--max-iter", max_iter, "maximum sweeps");
    fit->add_flag("--full-beta", full_beta, "write every coefficient, not only nonzeros");
    fit->add_flag("--timings", timings, "add wall-clock timings to summary.json");
    fit->add_option("--out", out, "output directory")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "draw one dataset with its truth");
    int model = 1;
    SimFlags sim_flags;
    simulate->add_option("--model", model, "preset 1-8")->check(CLI::Range(1, 8));
    simulate->add_option("--seed", seed, "seed");
    sim_flags.add(simulate);
    simulate->add_option("--out", out, "output directory")->required();

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Monte-Carlo comparison of PLS and 2SR");
    std::vector<int> models{1};
    int replicates = 50;
    SimFlags bench_flags;
    bench->add_option("--model", models, "presets 1-8 (repeatable)")->check(CLI::Range(1, 8));
    bench->add_option("--replicates", replicates, "replicates per model")->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed, "base seed; replicate i uses seed + i");
    bench->add_option("--folds", folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    bench->add_option("--grid-size", grid_size, "levels in the tuning grid")->check(CLI::PositiveNumber);
    bench_flags.add(bench);
    bench->add_option("--out", out, "output directory")->required();

    // curve
    auto* curve = app.add_subcommand("curve", "benchmark across sample sizes");
    std::vector<size_t> n_values{200, 600, 1500};
    SimFlags curve_flags;
    curve->add_option("--model", model, "template preset 1-8")->check(CLI::Range(1, 8));
    curve->add_option("--n-values", n_values, "ascending sample sizes")->delimiter(',');
    curve->add_option("--replicates", replicates, "replicates per sample size")->check(CLI::PositiveNumber);
    curve->add_option("--seed", seed, "base seed");
    curve->add_option("--folds", folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    curve->add_option("--grid-size", grid_size, "levels in the tuning grid")->check(CLI::PositiveNumber);
    curve_flags.add(curve);
    curve->add_option("--out", out, "output directory")->required();

    // stability
    auto* stab = app.add_subcommand("stability", "stability selection paths over half-size subsamples");
    DataFlags stab_data;
    stab_data.add(stab);
    int subsamples = 100;
    double threshold = 0.4;
    bool pls_mode = false, refit = false;
    stab->add_option("--B", subsamples, "number of subsamples")->check(CLI::PositiveNumber);
    stab->add_option("--grid-size", grid_size, "levels in the grid")->check(CLI::PositiveNumber);
    stab->add_option("--threshold", threshold, "report covariates with max probability >= threshold")
        ->check(CLI::Range(0.0, 1.0));
    stab->add_option("--seed", seed, "seed");
    stab->add_option("--penalty", penalty, "lasso, scad or mcp")->check(CLI::IsMember({"lasso", "scad", "mcp"}));
    stab->add_option("--a", shape_a, "penalty shape");
    stab->add_option("--cv-folds", folds, "stage-1 cross-validation folds")->check(CLI::Range(2, 1000000));
    stab->add_flag("--pls", pls_mode, "subsample the one-stage regression of y on x");
    stab->add_flag("--refit-stage-one", refit, "refit stage 1 on every subsample");
    stab->add_option("--out", out, "output directory")->required();

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "theory quantities of a simulated dataset");
    std::string dataset, re_mode = "auto";
    std::vector<std::string> only;
    long draws = 100000;
    double c = 2.0 * std::sqrt(2.0), c0 = 1.0;
    std::optional<double> alpha, e1, e2, nu, c_bound;
    diag->add_option("--dataset", dataset, "directory written by simulate")->required();
    diag->add_option("--only", only, "subset of re, irrep, least-false, rates")
        ->check(CLI::IsMember({"re", "irrep", "least-false", "rates"}))
        ->delimiter(',');
    diag->add_option("--re-mode", re_mode, "auto, exact or approx")->check(CLI::IsMember({"auto", "exact", "approx"}));
    diag->add_option("--draws", draws, "samples for the approximate restricted eigenvalue")
        ->check(CLI::PositiveNumber);
    diag->add_option("--seed", seed, "sampling seed");
    diag->add_option("--C", c, "first-stage rate constant");
    diag->add_option("--C0", c0, "second-stage rate constant (placeholder default 1)");
    diag->add_option("--penalty", penalty, "penalty for the concavity quantities")
        ->check(CLI::IsMember({"lasso", "scad", "mcp"}));
    diag->add_option("--a", shape_a, "penalty shape");
    diag->add_option("--mu", mu, "level for the concavity quantities (default: rate value)");
    diag->add_option("--alpha", alpha, "alpha for the generic-penalty conditions");
    diag->add_option("--e1", e1, "first-stage L1 error bound");
    diag->add_option("--e2", e2, "first-stage prediction error bound");
    diag->add_option("--nu", nu, "exponent nu in the irrepresentability cap");
    diag->add_option("--c", c_bound, "constant c in the irrepresentability cap");
    diag->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*fit) {
        siv_dataset* d = nullptr;
        if (int rc = fit_data.load(&d); rc != 0) return rc;
        siv_fit_options o;
        siv_fit_options_default(&o);
        o.method = method == "pls" ? SIV_METHOD_PLS : SIV_METHOD_2SR;
        o.penalty = kPenalties.at(penalty);
        o.shape_a = shape_a;
        o.cv_folds = folds;
        o.seed = seed;
        o.grid_size = grid_size;
        o.mu = mu;
        o.tol = tol;
        o.max_iter = max_iter;
        o.threads = threads;
        std::vector<double> lambdas;
        if (lambda >= 0.0) {
            size_t p = 0;
            siv_dataset_dims(d, nullptr, &p, nullptr);
            lambdas.assign(p, lambda);
            o.lambdas = lambdas.data();
            o.n_lambdas = lambdas.size();
        }
        if (siv_dataset_num_dropped(d) > 0)
            std::fprintf(stderr, "sparse-iv: warning: %zu constant instrument column(s) dropped\n",
                         siv_dataset_num_dropped(d));
        siv_fit* f = nullptr;
        siv_status st = siv_fit_run(d, &o, &f);
        siv_dataset_free(d);
        if (st != SIV_OK) return report(st);
        st = siv_fit_write(f, out.c_str(), full_beta, timings);
        siv_fit_free(f);
        return report(st);
    }

    if (*simulate) {
        siv_sim_config cfg;
        if (siv_status st = siv_sim_config_preset(model, &cfg); st != SIV_OK) return report(st);
        sim_flags.apply(cfg);
        cfg.seed = seed;
        return report(siv_simulate_write(&cfg, out.c_str()));
    }

    if (*bench || *curve) {
        siv_bench_options b;
        siv_bench_options_default(&b);
        b.replicates = replicates;
        b.base_seed = seed;
        b.folds = folds;
        b.grid_size = grid_size;
        b.threads = threads;
        if (*bench) {
            std::vector<siv_sim_config> cfgs;
            for (int m : models) {
                siv_sim_config cfg;
                if (siv_status st = siv_sim_config_preset(m, &cfg); st != SIV_OK) return report(st);
                bench_flags.apply(cfg);
                cfgs.push_back(cfg);
            }
            return report(siv_benchmark_write(cfgs.data(), cfgs.size(), &b, out.c_str()));
        }
        siv_sim_config cfg;
        if (siv_status st = siv_sim_config_preset(model, &cfg); st != SIV_OK) return report(st);
        curve_flags.apply(cfg);
        return report(siv_curve_write(&cfg, n_values.data(), n_values.size(), &b, out.c_str()));
    }

    if (*stab) {
        siv_dataset* d = nullptr;
        if (int rc = stab_data.load(&d); rc != 0) return rc;
        siv_stability_options o;
        siv_stability_options_default(&o);
        o.penalty = kPenalties.at(penalty);
        o.shape_a = shape_a;
        o.subsamples = subsamples;
        o.seed = seed;
        o.grid_size = grid_size;
        o.threshold = threshold;
        o.pls_mode = pls_mode;
        o.refit_stage_one = refit;
        o.cv_folds = folds;
        o.threads = threads;
        const siv_status st = siv_stability_write(d, &o, out.c_str());
        siv_dataset_free(d);
        return report(st);
    }

    if (*diag) {
        siv_diagnose_options o;
        siv_diagnose_options_default(&o);
        if (!only.empty()) {
            auto has = [&](const char* k) { return std::find(only.begin(), only.end(), k) != only.end(); };
            o.restricted_eigen = has("re");
            o.irrepresentable = has("irrep");
            o.least_false = has("least-false");
            o.rates = has("rates");
        }
        o.re_mode = re_mode == "exact" ? SIV_RE_EXACT : re_mode == "approx" ? SIV_RE_APPROXIMATE : SIV_RE_AUTO;
        o.re_draws = draws;
        o.seed = seed;
        o.c = c;
        o.c0 = c0;
        o.penalty = kPenalties.at(penalty);
        o.shape_a = shape_a;
        o.mu = mu;
        if (alpha || e1 || e2 || nu || c_bound) {
            o.weak_oracle = 1;
            o.alpha = alpha.value_or(0.5);
            o.e1 = e1.value_or(0.0);
            o.e2 = e2.value_or(0.0);
            o.nu = nu.value_or(0.0);
            o.c_bound = c_bound.value_or(1.0);
        }
        o.threads = threads;
        return report(siv_diagnose_write(dataset.c_str(), &o, out.c_str()));
    }
    return 0;
}
