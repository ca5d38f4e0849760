#pragma once

#include "sparse_iv/model_core.hpp"

#include <map>
#include <span>

namespace siv {

/// p_level(t) for t >= 0, from the closed-form antiderivatives.
double penalty_value(const PenaltySpec& spec, double t);

/// Minimizer of 0.5 (z - theta)^2 + p_level(|theta|): the coordinate update
/// for a unit-scaled column. At region boundaries the lower-region formula
/// applies (the formulas agree there).
double threshold(const PenaltySpec& spec, double z);

/// rho'(t) = p'_level(t) / level for t > 0. Requires level > 0.
double rho_prime(const PenaltySpec& spec, double t);

/// rho'(0+); equal to 1 for all supported penalties.
double rho_prime_zero_plus(const PenaltySpec& spec);

/// Local concavity tau(rho; theta). Every component of theta must be
/// nonzero. Kinks count as concave (the one-sided slope is taken as the sup),
/// so SCAD is concave on [level, a level] and MCP on (0, a level].
double local_concavity(const PenaltySpec& spec, std::span<const double> theta);

/// sup of the local concavity over the box |theta_j - center_j| <= radius.
/// The box must exclude zero in every coordinate.
double max_concavity_over_box(const PenaltySpec& spec, std::span<const double> center, double radius);

struct ConcavityReport {
    std::map<double, double> rho_prime_at;
    double tau_local = 0.0;
    double tau0 = 0.0;
    double mu0 = 0.0;
};

/// Bundles rho' at the requested points, tau at beta_s, tau0 over the
/// b0/2 box around beta_s, and mu0 = min_eig_css - level * tau0.
ConcavityReport concavity_report(const PenaltySpec& spec, std::span<const double> beta_s,
                                 std::span<const double> eval_points, double min_eig_css);

}  // namespace siv
