// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Arguments select criteria by id (1, 2, 3, 4, 5, 6,
// 7, 8, 9, smoke); 3 and 4 share one benchmark run. No arguments runs all.

#include "sparse_iv/cd_solver.hpp"
#include "sparse_iv/diagnostics.hpp"
#include "sparse_iv/parallel.hpp"
#include "sparse_iv/penalty.hpp"
#include "sparse_iv/rng.hpp"
#include "sparse_iv/simulation.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace siv;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("%s criterion %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int threads() { return resolve_threads(0); }

// Minimizer of 0.5 (z - t)^2 + p(|t|) on a 1e-5 grid. The objective is
// convex for every admissible shape, so a 1e-3 scan followed by a 1e-5 scan
// around the best coarse point finds the fine-grid minimizer.
double grid_minimizer(double z, const PenaltySpec& spec) {
    auto f = [&](double t) { return 0.5 * (z - t) * (z - t) + penalty_value(spec, std::abs(t)); };
    const double lo = std::min(0.0, z), hi = std::max(0.0, z);
    double best = 0.0, best_f = f(0.0);
    for (double t = lo; t <= hi + 1e-12; t += 1e-3)
        if (f(t) < best_f) best_f = f(t), best = t;
    if (f(z) < best_f) best_f = f(z), best = z;
    const double center = best;
    for (double t = center - 2e-3; t <= center + 2e-3; t += 1e-5)
        if (f(t) < best_f) best_f = f(t), best = t;
    return best;
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_stream(2024, 1);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> level(0.1, 2.0), scad(2.2, 6.0), mcp(1.2, 6.0), zdist(-6.0, 6.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const int k = kind(rng);
        const double lam = level(rng);
        const PenaltyKind pk = k == 0 ? PenaltyKind::Lasso : k == 1 ? PenaltyKind::Scad : PenaltyKind::Mcp;
        const double a = k == 1 ? scad(rng) : k == 2 ? mcp(rng) : 0.0;
        const PenaltySpec spec(PenaltyFamily(pk, a), lam);
        const double z = zdist(rng);
        worst = std::max(worst, std::abs(threshold(spec, z) - grid_minimizer(z, spec)));
    }
    const double secs = seconds_since(t0);
    report("1", worst <= 1e-4 && secs < 10.0,
           "threshold vs 1e-5 grid minimizer on 10000 draws, max error " + fmt(worst) + " (<= 1e-4), " + fmt(secs, 3) +
               " s (< 10 s)");
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    double kkt_excess = 0.0, ols_err = 0.0, rise = 0.0;
    int unconverged = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_stream(seed, 2);
        std::normal_distribution<double> nd;
        Eigen::MatrixXd a(100, 20);
        for (Index j = 0; j < 20; ++j)
            for (Index i = 0; i < 100; ++i) a(i, j) = nd(rng);
        for (Index j = 0; j < 20; ++j) {
            a.col(j).array() -= a.col(j).mean();
            a.col(j) *= 10.0 / a.col(j).norm();
        }
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(20);
        for (Index j = 0; j < 5; ++j) beta(j) = (j % 2 ? -1.0 : 1.0) * (0.5 + 0.3 * j);
        Eigen::VectorXd y = a * beta;
        for (Index i = 0; i < 100; ++i) y(i) += nd(rng);

        SolverOptions opt;
        opt.record_objective = true;
        const double lam = (0.05 + 0.009 * double(seed)) * max_level(a, y);
        const SolveResult r = solve_pls(a, y, PenaltySpec::lasso(lam), Eigen::VectorXd::Zero(20), opt);
        unconverged += !r.converged;
        const Eigen::VectorXd grad = a.transpose() * (y - a * r.coeffs) / 100.0;
        for (Index j = 0; j < 20; ++j) {
            const double gap = r.coeffs(j) == 0.0 ? std::abs(grad(j)) - lam
                                                  : std::abs(grad(j) - lam * (r.coeffs(j) > 0 ? 1.0 : -1.0));
            kkt_excess = std::max(kkt_excess, gap);
        }
        double prev = 0.5 * y.squaredNorm() / 100.0;
        for (double v : r.objective_trace) {
            rise = std::max(rise, v - prev);
            prev = v;
        }

        SolverOptions fine;
        fine.tol = 1e-12;
        const SolveResult ols = solve_pls(a, y, PenaltySpec::lasso(0.0), Eigen::VectorXd::Zero(20), fine);
        const Eigen::VectorXd normal = (a.transpose() * a).ldlt().solve(a.transpose() * y);
        ols_err = std::max(ols_err, (ols.coeffs - normal).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    const double tol = SolverOptions{}.tol;
    const bool pass = unconverged == 0 && kkt_excess <= 10 * tol && ols_err <= 1e-6 && rise <= 1e-12 && secs < 30.0;
    report("2", pass,
           "100 problems 100x20: unconverged " + std::to_string(unconverged) + ", KKT excess " + fmt(kkt_excess) +
               " (<= 1e-6), OLS error " + fmt(ols_err) + " (<= 1e-6), max objective rise " + fmt(rise) + ", " +
               fmt(secs, 3) + " s (< 30 s)");
}

const BenchmarkRecord* find(const std::vector<BenchmarkRecord>& rows, const std::string& method,
                            const std::string& penalty, const std::string& metric) {
    for (const auto& r : rows)
        if (r.method == method && r.penalty == penalty && r.metric == metric) return &r;
    return nullptr;
}

double mean_of(const std::vector<BenchmarkRecord>& rows, const std::string& method, const std::string& penalty,
               const std::string& metric) {
    const BenchmarkRecord* r = find(rows, method, penalty, metric);
    return r && r->replicates_ok > 0 ? r->mean : std::nan("");
}

void criteria_3_4() {
    const auto t0 = std::chrono::steady_clock::now();
    BenchmarkOptions opts;
    opts.replicates = 20;
    opts.threads = threads();
    const auto rows = run_benchmark({SimConfig::preset(1)}, opts);
    const double secs = seconds_since(t0);
    int incomplete = 0;
    for (const auto& r : rows) incomplete += r.replicates_ok != 20;

    const double l1 = mean_of(rows, "2SR", "lasso", "l1_loss");
    const double mcc = mean_of(rows, "2SR", "lasso", "mcc");
    const double size_pls = mean_of(rows, "PLS", "lasso", "model_size");
    const double size_2sr = mean_of(rows, "2SR", "lasso", "model_size");
    bool order = true;
    std::string mccs;
    for (const char* pen : {"lasso", "scad", "mcp"}) {
        const double m2 = mean_of(rows, "2SR", pen, "mcc"), m1 = mean_of(rows, "PLS", pen, "mcc");
        order = order && m2 > m1;
        mccs += std::string(" ") + pen + " " + fmt(m2, 3) + " vs " + fmt(m1, 3) + ";";
    }
    const bool pass3 = incomplete == 0 && l1 >= 0.8 && l1 <= 2.2 && mcc >= 0.45 && size_pls > size_2sr && order;
    report("3", pass3,
           "Model 1, 20 replicates: 2SR-Lasso L1 " + fmt(l1) + " in [0.8, 2.2], MCC " + fmt(mcc) +
               " (>= 0.45), model size PLS " + fmt(size_pls) + " > 2SR " + fmt(size_2sr) + ", MCC 2SR vs PLS:" +
               mccs + " incomplete rows " + std::to_string(incomplete) + ", " + fmt(secs, 4) + " s");

    const double oracle = mean_of(rows, "2SR", "oracle", "l1_loss");
    bool dominant = true;
    std::string others;
    for (const char* pen : {"lasso", "scad", "mcp"}) {
        const double v = mean_of(rows, "2SR", pen, "l1_loss");
        dominant = dominant && oracle < v;
        others += std::string(" ") + pen + " " + fmt(v);
    }
    report("4", dominant, "2SR-oracle mean L1 " + fmt(oracle) + " below every regularized 2SR:" + others);
}

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    BenchmarkOptions opts;
    opts.replicates = 10;
    opts.threads = threads();
    opts.methods = {{Method::Pls, false, PenaltyKind::Lasso}, {Method::TwoStage, false, PenaltyKind::Lasso}};
    const auto curve = performance_curve(SimConfig::preset(1), {200, 600, 1500}, opts);
    std::map<std::string, std::map<Index, double>> l1;
    int incomplete = 0;
    for (const auto& c : curve) {
        if (c.metric == "l1_loss") l1[c.method][c.n] = c.mean;
        incomplete += c.replicates_ok != 10;
    }
    const auto& two = l1["2SR"];
    const auto& pls = l1["PLS"];
    const bool decreasing = two.at(200) > two.at(600) && two.at(600) > two.at(1500);
    const bool flat = pls.at(1500) >= 0.6 * pls.at(200);
    report("5", incomplete == 0 && decreasing && flat,
           "2SR-Lasso L1 at n=200/600/1500: " + fmt(two.at(200)) + " / " + fmt(two.at(600)) + " / " +
               fmt(two.at(1500)) + " (strictly decreasing); PLS-Lasso " + fmt(pls.at(200)) + " / " + fmt(pls.at(600)) +
               " / " + fmt(pls.at(1500)) + " (n=1500 >= 0.6 x n=200), " + fmt(seconds_since(t0), 4) + " s");
}

// Ten seeds per sample size: the gap must exceed 0.1 on every instance and
// the mean 2SR-oracle L1 loss must fall below 0.1 at n = 2000.
void criterion_6() {
    double min_gap = 1e300;
    std::map<Index, double> oracle;
    for (Index n : {200, 2000}) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SimConfig cfg = SimConfig::preset(1);
            cfg.n = n;
            cfg.seed = seed;
            const Simulation sim = generate(cfg);
            const LeastFalse lf = least_false_beta(sim.data.x, sim.truth.beta0,
                                                   conditional_mean_error(sim.truth.sigma, sim.truth.errors));
            min_gap = std::min(min_gap, lf.gap_l1);
            const OracleFit o = fit_oracles(sim.data, sim.truth.support, sim.truth.column_supports);
            sum += (o.two_stage_beta - sim.truth.beta0).lpNorm<1>();
        }
        oracle[n] = sum / 10.0;
    }
    report("6", min_gap > 0.1 && oracle[2000] < 0.1,
           "least-false gap min over n in {200, 2000} x 10 seeds " + fmt(min_gap) +
               " (> 0.1); mean 2SR-oracle L1 n=200 " + fmt(oracle[200]) + ", n=2000 " + fmt(oracle[2000]) +
               " (< 0.1)");
}

void criterion_7() {
    int held = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        SimConfig cfg = SimConfig::preset(1);
        cfg.seed = seed;
        const Simulation sim = generate(cfg);
        DiagnoseOptions opt;
        opt.irrepresentable = false;
        opt.least_false = false;
        opt.re.mode = ReMode::Approximate;
        opt.re.seed = seed;
        opt.threads = threads();
        const DiagnosticsReport rep = diagnose(sim, opt);
        if (!rep.rates) continue;
        ExecOptions exec;
        exec.threads = threads();
        const StageOneFit s1 = stage_one(sim.data, rep.rates->lambda, PenaltyFamily(), exec);
        const Eigen::MatrixXd gamma_std = gamma_to_standardized_scale(sim.data, sim.truth.gamma0);
        const double err = (s1.gamma_hat - gamma_std).cwiseAbs().colwise().sum().maxCoeff();
        held += err <= rep.rates->gamma_l1_bound;
        worst_ratio = std::max(worst_ratio, err / rep.rates->gamma_l1_bound);
    }
    report("7", held >= 45,
           "first-stage L1 error within the rate bound on " + std::to_string(held) +
               " of 50 Model 1 seeds (>= 45), largest error/bound " + fmt(worst_ratio));
}

void criterion_8() {
    Eigen::MatrixXd h(8, 8);
    h << 1, 1, 1, 1, 1, 1, 1, 1,
         1, -1, 1, -1, 1, -1, 1, -1,
         1, 1, -1, -1, 1, 1, -1, -1,
         1, -1, -1, 1, 1, -1, -1, 1,
         1, 1, 1, 1, -1, -1, -1, -1,
         1, -1, 1, -1, -1, 1, -1, 1,
         1, 1, -1, -1, -1, -1, 1, 1,
         1, -1, -1, 1, -1, 1, 1, -1;
    ReOptions exact;
    exact.mode = ReMode::Exact;
    double iso_err = 0.0;
    for (Index s = 1; s <= 8; ++s) iso_err = std::max(iso_err, std::abs(restricted_eigenvalue(h, s, exact).value - 1.0));

    Rng rng = make_stream(8, 0);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd dup(40, 3);
    for (Index i = 0; i < 40; ++i) dup(i, 0) = nd(rng), dup(i, 2) = nd(rng);
    dup.col(1) = dup.col(0);
    const double dup_value = restricted_eigenvalue(dup, 2, exact).value;

    double irrep_err = 0.0;
    for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.75}) {
        Eigen::Matrix2d c;
        c << 1.0, rho, rho, 1.0;
        irrep_err = std::max(irrep_err, std::abs(irrepresentability(c, {0}).irrep_norm - std::abs(rho)));
    }

    // Central differences of rho' on random points away from the kinks.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double conc_err = 0.0;
    int points = 0;
    while (points < 1000) {
        const bool is_scad = u(rng) < 0.5;
        const double lam = 0.2 + 1.8 * u(rng);
        const double a = is_scad ? 2.2 + 3.8 * u(rng) : 1.2 + 4.8 * u(rng);
        const PenaltySpec spec(PenaltyFamily(is_scad ? PenaltyKind::Scad : PenaltyKind::Mcp, a), lam);
        const double t = (a + 1.0) * lam * u(rng);
        const double h_step = 1e-6;
        bool near_kink = t < 2 * h_step;
        for (double k : {lam, a * lam}) near_kink = near_kink || std::abs(t - k) < 2 * h_step;
        if (near_kink) continue;
        const double fd = -(rho_prime(spec, t + h_step) - rho_prime(spec, t - h_step)) / (2 * h_step);
        const std::vector<double> theta{t};
        conc_err = std::max(conc_err, std::abs(local_concavity(spec, theta) - std::max(0.0, fd)));
        ++points;
    }
    const bool pass = iso_err == 0.0 && dup_value <= 1e-12 && irrep_err <= 1e-10 && conc_err <= 1e-5;
    report("8", pass,
           "RE(Hadamard 8) - 1 = " + fmt(iso_err) + " for s = 1..8, RE(duplicated column) " + fmt(dup_value) +
               ", 2x2 irrepresentability error " + fmt(irrep_err) + ", local concavity vs finite differences on 1000 "
               "points " + fmt(conc_err) + " (<= 1e-5)");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPARSE_IV_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Names of files that differ (or are missing) between two output trees.
std::vector<std::string> tree_diff(const fs::path& a, const fs::path& b) {
    std::vector<std::string> diff;
    std::set<std::string> names;
    for (const fs::path& root : {a, b})
        if (fs::exists(root))
            for (const auto& e : fs::recursive_directory_iterator(root))
                if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
    if (names.empty()) diff.push_back("(no output)");
    for (const auto& n : names)
        if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) diff.push_back(n);
    return diff;
}

void criterion_9() {
    const fs::path root = fs::temp_directory_path() / ("siv_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string small = "--n 120 --p 12 --q 20 --r 3 --s 3 --n-confounded 4";
    const fs::path data = root / "data";
    const bool data_ok = run_cli("simulate " + small + " --seed 7 --out " + data.string()) == 0;
    const std::string d = data.string();
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "simulate --model 1 --seed 3 --out "},
        {"fit 2sr lasso", "fit --dataset " + d + " --cv-folds 5 --grid-size 30 --out "},
        {"fit 2sr scad", "fit --dataset " + d + " --penalty scad --cv-folds 5 --grid-size 30 --out "},
        {"fit 2sr mcp", "fit --dataset " + d + " --penalty mcp --cv-folds 5 --grid-size 30 --full-beta --out "},
        {"fit pls", "fit --dataset " + d + " --method pls --cv-folds 5 --grid-size 30 --out "},
        {"benchmark", "benchmark --model 1 " + small + " --replicates 4 --folds 3 --grid-size 10 --out "},
        {"curve", "curve --model 1 " + small + " --n-values 80,120 --replicates 3 --folds 3 --grid-size 10 --out "},
        {"stability", "stability --dataset " + d + " --B 20 --grid-size 10 --cv-folds 3 --out "},
        {"stability refit", "stability --dataset " + d + " --B 6 --grid-size 5 --cv-folds 3 --refit-stage-one --out "},
        {"diagnose", "diagnose --dataset " + d + " --re-mode approx --draws 5000 --out "},
    };
    std::string problems;
    int k = 0;
    for (const auto& [name, cmd] : commands) {
        const std::string base = (root / ("c" + std::to_string(k++))).string();
        int rc = run_cli("--threads 1 " + cmd + base + "_a");
        rc |= run_cli("--threads 1 " + cmd + base + "_b");
        rc |= run_cli("--threads 4 " + cmd + base + "_c");
        if (rc != 0) {
            problems += " " + name + " failed to run;";
            continue;
        }
        for (const std::string& other : {base + "_b", base + "_c"})
            for (const auto& f : tree_diff(base + "_a", other)) problems += " " + name + " " + f + " differs;";
    }
    fs::remove_all(root);
    report("9", data_ok && problems.empty(),
           std::to_string(commands.size()) + " commands rerun at --threads 1, 1, 4:" +
               (problems.empty() ? std::string(" all outputs byte-identical") : problems));
}

// Ultrahigh-dimensional presets, 5 replicates each with reduced tuning
// (5 folds, 20 levels): mean MCC of 2SR-Lasso must exceed PLS-Lasso.
void smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    BenchmarkOptions opts;
    opts.replicates = 5;
    opts.folds = 5;
    opts.grid_size = 20;
    opts.threads = threads();
    opts.methods = {{Method::Pls, false, PenaltyKind::Lasso}, {Method::TwoStage, false, PenaltyKind::Lasso}};
    bool pass = true;
    std::string detail;
    for (int m = 5; m <= 8; ++m) {
        const auto rows = run_benchmark({SimConfig::preset(m)}, opts);
        const double two = mean_of(rows, "2SR", "lasso", "mcc"), pls = mean_of(rows, "PLS", "lasso", "mcc");
        pass = pass && two > pls;
        detail += " model" + std::to_string(m) + " " + fmt(two, 3) + " vs " + fmt(pls, 3) + ";";
    }
    report("smoke", pass, "Models 5-8, 5 replicates, MCC 2SR-Lasso vs PLS-Lasso:" + detail + " " +
                              fmt(seconds_since(t0), 4) + " s");
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<void()>>> all = {
        {"1", criterion_1}, {"2", criterion_2}, {"3", criteria_3_4}, {"5", criterion_5}, {"6", criterion_6},
        {"7", criterion_7}, {"8", criterion_8}, {"9", criterion_9}, {"smoke", smoke},
    };
    std::set<std::string> wanted(argv + 1, argv + argc);
    if (wanted.count("4")) wanted.insert("3");
    for (const auto& [id, run] : all) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        try {
            run();
        } catch (const std::exception& e) {
            report(id, false, std::string("threw: ") + e.what());
        }
    }
    return failures == 0 ? 0 : 1;
}
