#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace siv {

using Index = Eigen::Index;

enum class PenaltyKind { Lasso, Scad, Mcp };

const char* to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(const std::string& name);

inline constexpr double kDefaultScadShape = 3.7;
inline constexpr double kDefaultMcpShape = 3.0;

/// Penalty kind plus its shape parameter, without a tuning level. Paths and
/// cross-validation carry a family and attach levels from a grid.
struct PenaltyFamily {
    PenaltyKind kind = PenaltyKind::Lasso;
    double shape_a = 0.0;

    PenaltyFamily() = default;
    /// shape_a <= 0 selects the kind's default (3.7 for SCAD, 3.0 for MCP).
    explicit PenaltyFamily(PenaltyKind kind, double shape_a = 0.0);
};

/// A penalty p_level(t). Shapes are checked on construction: a > 2 for SCAD,
/// a > 1 for MCP; the level must be finite and nonnegative.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::Lasso;
    double shape_a = 0.0;
    double level = 0.0;

    PenaltySpec() = default;
    PenaltySpec(PenaltyFamily family, double level);

    static PenaltySpec lasso(double level) { return {PenaltyFamily(PenaltyKind::Lasso), level}; }
    static PenaltySpec scad(double level, double a = kDefaultScadShape) {
        return {PenaltyFamily(PenaltyKind::Scad, a), level};
    }
    static PenaltySpec mcp(double level, double a = kDefaultMcpShape) {
        return {PenaltyFamily(PenaltyKind::Mcp, a), level};
    }

    PenaltyFamily family() const;
};

/// Response, covariates and instruments for the linear IV model. After
/// prepare() every variable is centered, instrument columns have L2 norm
/// sqrt(n), and constant instruments are zeroed and listed as dropped.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    Eigen::MatrixXd z;

    bool centered = false;
    double y_mean = 0.0;
    Eigen::VectorXd x_means;
    Eigen::VectorXd z_means;
    /// Column norms of z after centering and before rescaling.
    Eigen::VectorXd z_col_norms;
    std::vector<Index> dropped_instruments;

    Index n() const { return y.size(); }
    Index p() const { return x.cols(); }
    Index q() const { return z.cols(); }

    std::vector<Index> live_instruments() const;
};

/// Throws Error(Input) on inconsistent shapes, n < 2, empty x or z, or a
/// non-finite entry (the message names matrix, row and column).
void validate(const Dataset& d);

Dataset prepare(Dataset raw);

/// Converts a q x p coefficient matrix on the standardized-z scale to the
/// centered raw-z scale, so that center(z_raw) * result equals z * gamma.
/// Rows of dropped instruments are zero.
Eigen::MatrixXd gamma_to_raw_scale(const Dataset& prepared, const Eigen::MatrixXd& gamma_std);

/// Inverse of gamma_to_raw_scale: z * result equals center(z_raw) * gamma_raw.
Eigen::MatrixXd gamma_to_standardized_scale(const Dataset& prepared, const Eigen::MatrixXd& gamma_raw);

/// Predicts covariates from raw (uncentered) instruments using the stored
/// centering of `prepared`.
Eigen::MatrixXd predict_from_raw(const Dataset& prepared, const Eigen::MatrixXd& z_raw,
                                 const Eigen::MatrixXd& gamma_raw);

}  // namespace siv
