#pragma once

#include "sparse_iv/two_stage.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace siv {

/// Generative settings for the sparse IV simulation models. Presets 1-8
/// are the standard benchmark designs; every field can be overridden.
struct SimConfig {
    std::string name = "custom";
    Index n = 200;
    Index p = 100;
    Index q = 100;
    Index r = 5;  // nonzeros per column of gamma_0
    Index s = 5;  // nonzeros of beta_0
    double gamma_lo = 0.75;
    double gamma_hi = 1.0;
    // Mixed strength: the first `strong_count` entries of each column come
    // from (gamma_lo, gamma_hi), the remaining r - strong_count from the weak range.
    bool mixed_strength = false;
    Index strong_count = 5;
    double weak_lo = 0.05;
    double weak_hi = 0.1;
    double beta_lo = 0.5;
    double beta_hi = 1.0;
    double rho = 0.2;             // sigma_ij = rho^|i-j| among the covariate errors
    double confound_value = 0.3;  // covariance of the confounded errors with eta
    Index n_confounded = 10;      // s on supp(beta_0) plus n_confounded - s elsewhere
    double bernoulli_p = 0.5;
    bool random_bernoulli = false;  // per-column p0 ~ U(0, bernoulli_max)
    double bernoulli_max = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
    static SimConfig preset(int model);
};

struct SimTruth {
    Eigen::VectorXd beta0;
    Eigen::MatrixXd gamma0;  // q x p, standardized-z scale
    Eigen::MatrixXd sigma;   // (p+1) x (p+1), last index is eta
    std::vector<Index> support;
    std::vector<std::vector<Index>> column_supports;
    std::vector<Index> confounded;  // covariates whose error covaries with eta
    Eigen::MatrixXd errors;  // n x p draws of E
    Eigen::VectorXd eta;
    Eigen::VectorXd bernoulli_probs;
};

struct Simulation {
    Dataset data;  // prepared
    Dataset raw;   // the draws before centering; z holds 0/1 entries
    SimTruth truth;
};

/// Draws one dataset. Substreams of cfg.seed: 1 instruments, 2 gamma_0,
/// 3 beta_0, 4 extra confounded positions, 5 errors (row by row, the p
/// covariate errors then eta). X = Z gamma_0 + E is formed from the raw 0/1
/// instruments, so gamma_0 is on the raw-z scale; see gamma_to_standardized_scale.
Simulation generate(const SimConfig& cfg);

/// Builds the error covariance for a given confounded set; returns nullopt
/// when it is not positive definite.
std::optional<Eigen::MatrixXd> error_covariance(Index p, double rho, double confound_value,
                                                const std::vector<Index>& confounded);

struct MetricsRow {
    double l1_loss = 0.0;
    double pred_loss = 0.0;
    int tp = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;
    int model_size = 0;
    double mcc = 0.0;
    double adj_r2 = 0.0;
};

/// Positives are nonzero estimates. MCC is 0 when any marginal count is 0.
/// adj_r2 = 1 - (RSS/(n-k-1)) / (TSS/(n-1)) with k the model size and RSS
/// from `fitted`; NaN when n - k - 1 <= 0.
MetricsRow compute_metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta0, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& fitted);

double matthews_correlation(int tp, int tn, int fp, int fn);

enum class Method { Pls, TwoStage };

struct MethodSpec {
    Method method = Method::TwoStage;
    bool oracle = false;
    PenaltyKind penalty = PenaltyKind::Lasso;

    std::string method_name() const;
    std::string penalty_name() const;
};

/// PLS and 2SR with Lasso, SCAD, MCP, then the two oracles.
std::vector<MethodSpec> all_methods();

inline const char* const kMetricNames[] = {"l1_loss", "pred_loss", "tp", "model_size", "mcc"};

struct BenchmarkOptions {
    int replicates = 50;
    std::uint64_t base_seed = 1;
    int folds = 10;
    int grid_size = 100;
    double scad_a = kDefaultScadShape;
    double mcp_a = kDefaultMcpShape;
    std::vector<MethodSpec> methods = all_methods();
    int threads = 1;
    SolverOptions solver;
};

struct ReplicateResult {
    std::uint64_t seed = 0;
    std::vector<std::optional<MetricsRow>> metrics;  // parallel to BenchmarkOptions::methods
    std::vector<std::string> errors;
};

/// One replicate of every requested method on generate(cfg). A method that
/// throws is recorded as missing with its message. Runs single-threaded.
ReplicateResult run_replicate(const SimConfig& cfg, const BenchmarkOptions& options);

struct BenchmarkRecord {
    std::string model;
    std::string method;
    std::string penalty;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0;
    int replicates_ok = 0;
};

/// Replicate i uses seed base_seed + i; replicates run in parallel and are
/// aggregated in index order. Optional raw results are returned per model.
std::vector<BenchmarkRecord> run_benchmark(const std::vector<SimConfig>& models, const BenchmarkOptions& options,
                                           std::vector<std::vector<ReplicateResult>>* raw = nullptr);

std::vector<BenchmarkRecord> summarize(const std::string& model, const std::vector<MethodSpec>& methods,
                                       const std::vector<ReplicateResult>& replicates);

struct CurveRecord {
    Index n = 0;
    std::string method;
    std::string penalty;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0;
    int replicates_ok = 0;
};

/// run_benchmark of the template at each sample size in ascending n_values.
std::vector<CurveRecord> performance_curve(const SimConfig& tmpl, const std::vector<Index>& n_values,
                                           const BenchmarkOptions& options);

}  // namespace siv
