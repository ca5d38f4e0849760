#pragma once

#include "sparse_iv/penalty.hpp"
#include "sparse_iv/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace siv {

enum class ReMode { Auto, Exact, Approximate };

struct ReOptions {
    ReMode mode = ReMode::Auto;
    std::uint64_t seed = 1;
    long draws = 100000;    // approximate mode
    int starts = 64;        // exact mode, local descents per support
    int threads = 1;
    Index exact_limit = 12;  // largest m handled by enumeration
};

struct ReResult {
    double value = 0.0;
    bool exact = false;  // false: sampled upper bound
};

/// kappa(A, s) = min over |J| <= s and the cone ||d_Jc||_1 <= 3 ||d_J||_1 of
/// ||A d||_2 / (sqrt(n) ||d_J||_2).
///
/// Exact mode enumerates supports of size min(s, m) only: moving the largest
/// off-support coordinate into J keeps a direction inside the cone and does
/// not increase its ratio. Each support is solved by a closed-form Schur
/// complement candidate when that candidate lies in the cone, otherwise by
/// seeded multi-start projected descent. Approximate mode samples random
/// supports and cone directions and returns the smallest ratio seen, which
/// is an upper bound. Auto picks exact when m <= exact_limit.
ReResult restricted_eigenvalue(const Eigen::MatrixXd& a, Index s, const ReOptions& options = {});

struct Irrepresentability {
    double irrep_norm = 0.0;  // ||C_ScS (C_SS)^-1||_inf
    double phi = 0.0;         // ||(C_SS)^-1||_inf
    double min_eig_css = 0.0;
};

/// Matrix infinity norms are max absolute row sums. Throws Error(Numeric)
/// when C_SS has condition number >= 1e12.
Irrepresentability irrepresentability(const Eigen::MatrixXd& c, const std::vector<Index>& support);

struct LeastFalse {
    Eigen::VectorXd beta_star;
    double gap_l1 = 0.0;
    bool pseudo_inverse = false;  // X^T X singular or p > n
};

/// beta* = (X^T X)^-1 X^T (X beta0 + eta0).
LeastFalse least_false_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta0, const Eigen::VectorXd& eta0);

/// E(eta | eps) row by row for joint-normal errors with covariance sigma,
/// (p+1) x (p+1) with eta last.
Eigen::VectorXd conditional_mean_error(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& errors);

struct RateInputs {
    std::vector<double> sigma_j;  // first-stage error sds
    double sigma_eta = 1.0;
    Index r = 1, s = 1, n = 1, p = 1, q = 1;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double big_l = 1.0;  // ||Gamma_0||_1
    double big_m = 1.0;  // ||beta_0||_1
    double c = 2.8284271247461903;
    double c0 = 1.0;
};

struct TheoryRates {
    std::vector<double> lambda;
    double lambda_max = 0.0;
    double sigma_max = 0.0;
    double mu = 0.0;
    double gamma_l1_bound = 0.0;        // ||Gamma_hat - Gamma_0||_1
    double gamma_pred_sq_bound = 0.0;   // ||Z(Gamma_hat - Gamma_0)||_F^2
    double beta_l1_bound = 0.0;
    double beta_pred_sq_bound = 0.0;    // ||X_hat (beta_hat - beta_0)||_2^2
    double rate1_lhs = 0.0;             // lambda_max (2L + lambda_max)
    double rate1_rhs = 0.0;             // kappa1^2 kappa2^2 / (32^2 r s)
    double failure_probability = 0.0;   // (pq)^(1 - C^2/8)
};

/// Plug-in values of the first- and second-stage rate formulas. All inputs
/// must be positive.
TheoryRates theory_rates(const RateInputs& in);

/// Optional user bounds for the generic-penalty conditions.
struct WeakOracleInputs {
    double alpha = 0.5;
    double e1 = 0.0;
    double e2 = 0.0;
    double nu = 0.0;
    double c = 1.0;
};

struct DiagnoseOptions {
    bool restricted_eigen = true;
    bool irrepresentable = true;
    bool least_false = true;
    bool rates = true;
    ReOptions re;
    PenaltySpec penalty = PenaltySpec::lasso(0.0);  // level 0: use the rate value of mu
    double c = 2.8284271247461903;
    double c0 = 1.0;
    std::optional<WeakOracleInputs> weak_oracle;
    int threads = 1;
};

struct DiagnosticsReport {
    std::optional<ReResult> kappa_z_r;
    std::optional<ReResult> kappa_zg_s;
    std::optional<ReResult> kappa_xhat_s;  // Lasso stage 1 at the rate lambdas
    double phi = 0.0;
    double irrep_norm = 0.0;
    double alpha_margin = 0.0;
    double min_eig_css = 0.0;
    double b0 = 0.0;
    std::optional<TheoryRates> rates;
    std::string rates_note;  // why rates were requested but not computed
    bool c0_placeholder = true;
    double mu = 0.0;  // level used for the concavity quantities
    double rho_prime_zero = 1.0;
    double rho_prime_half_b0 = 1.0;
    double tau0 = 0.0;
    double mu0 = 0.0;
    double b0_threshold = 0.0;  // 2 phi mu / (2 - alpha)
    std::optional<double> rate2_lhs;  // 16 phi r s lambda_max (2L + lambda_max) / kappa1^2
    std::optional<double> rate2_rhs;  // alpha / (4 - alpha)
    std::optional<double> irrep_bound_generic;  // min{(1-alpha) rho'(0+) / rho'(b0/2), c n^nu}
    std::optional<double> weak_oracle_lhs;      // s (2 L e1 + e2)
    std::optional<double> weak_oracle_rhs;
    std::optional<LeastFalse> least_false;
    bool exact = true;  // every reported kappa was computed exactly
};

/// Diagnostics of a simulated dataset against its truth.
DiagnosticsReport diagnose(const Simulation& sim, const DiagnoseOptions& options = {});

}  // namespace siv
