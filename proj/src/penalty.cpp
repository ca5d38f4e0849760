#include "sparse_iv/penalty.hpp"

#include "sparse_iv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace siv {

namespace {

double soft(double z, double lambda) {
    const double mag = std::abs(z) - lambda;
    return mag > 0.0 ? std::copysign(mag, z) : 0.0;
}

void require_positive_level(const PenaltySpec& spec) {
    if (!(spec.level > 0.0)) fail_input("penalty level must be positive here");
}

}  // namespace

double penalty_value(const PenaltySpec& spec, double t) {
    if (!(t >= 0.0)) fail_input("penalty_value requires t >= 0");
    const double lam = spec.level;
    const double a = spec.shape_a;
    switch (spec.kind) {
        case PenaltyKind::Lasso:
            return lam * t;
        case PenaltyKind::Scad:
            if (t <= lam) return lam * t;
            if (t <= a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
            return lam * lam * (a + 1.0) / 2.0;
        case PenaltyKind::Mcp:
            if (t <= a * lam) return lam * t - t * t / (2.0 * a);
            return a * lam * lam / 2.0;
    }
    return 0.0;
}

double threshold(const PenaltySpec& spec, double z) {
    const double lam = spec.level;
    const double a = spec.shape_a;
    const double mag = std::abs(z);
    switch (spec.kind) {
        case PenaltyKind::Lasso:
            return soft(z, lam);
        case PenaltyKind::Scad:
            if (mag <= 2.0 * lam) return soft(z, lam);
            if (mag <= a * lam) return std::copysign((mag - lam * a / (a - 1.0)) / (1.0 - 1.0 / (a - 1.0)), z);
            return z;
        case PenaltyKind::Mcp:
            if (mag <= a * lam) return soft(z, lam) / (1.0 - 1.0 / a);
            return z;
    }
    return z;
}

double rho_prime(const PenaltySpec& spec, double t) {
    require_positive_level(spec);
    if (!(t > 0.0)) fail_input("rho_prime requires t > 0");
    const double mu = spec.level;
    const double a = spec.shape_a;
    switch (spec.kind) {
        case PenaltyKind::Lasso:
            return 1.0;
        case PenaltyKind::Scad:
            if (t <= mu) return 1.0;
            return std::max(a * mu - t, 0.0) / ((a - 1.0) * mu);
        case PenaltyKind::Mcp:
            return std::max(a * mu - t, 0.0) / (a * mu);
    }
    return 1.0;
}

double rho_prime_zero_plus(const PenaltySpec&) { return 1.0; }

namespace {

// Concavity on the closed magnitude interval [lo, hi], lo > 0.
double concavity_on_interval(const PenaltySpec& spec, double lo, double hi) {
    const double mu = spec.level;
    const double a = spec.shape_a;
    switch (spec.kind) {
        case PenaltyKind::Lasso:
            return 0.0;
        case PenaltyKind::Scad:
            return (hi >= mu && lo <= a * mu) ? 1.0 / ((a - 1.0) * mu) : 0.0;
        case PenaltyKind::Mcp:
            return lo <= a * mu ? 1.0 / (a * mu) : 0.0;
    }
    return 0.0;
}

}  // namespace

double local_concavity(const PenaltySpec& spec, std::span<const double> theta) {
    require_positive_level(spec);
    double tau = 0.0;
    for (double v : theta) {
        if (v == 0.0) fail_input("local_concavity requires every component to be nonzero");
        const double m = std::abs(v);
        tau = std::max(tau, concavity_on_interval(spec, m, m));
    }
    return tau;
}

double max_concavity_over_box(const PenaltySpec& spec, std::span<const double> center, double radius) {
    require_positive_level(spec);
    if (!(radius >= 0.0)) fail_input("box radius must be nonnegative");
    double tau = 0.0;
    for (double c : center) {
        const double m = std::abs(c);
        if (m <= radius) fail_input("concavity box contains zero");
        tau = std::max(tau, concavity_on_interval(spec, m - radius, m + radius));
    }
    return tau;
}

ConcavityReport concavity_report(const PenaltySpec& spec, std::span<const double> beta_s,
                                 std::span<const double> eval_points, double min_eig_css) {
    ConcavityReport report;
    for (double t : eval_points) report.rho_prime_at[t] = rho_prime(spec, t);
    if (beta_s.empty()) return report;
    report.tau_local = local_concavity(spec, beta_s);
    double b0 = std::numeric_limits<double>::infinity();
    for (double v : beta_s) b0 = std::min(b0, std::abs(v));
    report.tau0 = max_concavity_over_box(spec, beta_s, b0 / 2.0);
    report.mu0 = min_eig_css - spec.level * report.tau0;
    return report;
}

}  // namespace siv
