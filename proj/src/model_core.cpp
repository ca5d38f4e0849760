#include "sparse_iv/model_core.hpp"

#include "sparse_iv/error.hpp"

#include <cmath>
#include <sstream>

namespace siv {

const char* to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::Lasso: return "lasso";
        case PenaltyKind::Scad: return "scad";
        case PenaltyKind::Mcp: return "mcp";
    }
    return "unknown";
}

PenaltyKind parse_penalty_kind(const std::string& name) {
    if (name == "lasso") return PenaltyKind::Lasso;
    if (name == "scad") return PenaltyKind::Scad;
    if (name == "mcp") return PenaltyKind::Mcp;
    fail_input("unknown penalty '" + name + "' (expected lasso, scad or mcp)");
}

PenaltyFamily::PenaltyFamily(PenaltyKind k, double a) : kind(k), shape_a(a) {
    switch (kind) {
        case PenaltyKind::Lasso:
            shape_a = 0.0;
            break;
        case PenaltyKind::Scad:
            if (shape_a <= 0.0) shape_a = kDefaultScadShape;
            if (!(shape_a > 2.0) || !std::isfinite(shape_a))
                fail_input("SCAD shape a must exceed 2, got " + std::to_string(shape_a));
            break;
        case PenaltyKind::Mcp:
            if (shape_a <= 0.0) shape_a = kDefaultMcpShape;
            if (!(shape_a > 1.0) || !std::isfinite(shape_a))
                fail_input("MCP shape a must exceed 1, got " + std::to_string(shape_a));
            break;
    }
}

PenaltySpec::PenaltySpec(PenaltyFamily family, double lvl)
    : kind(family.kind), shape_a(family.shape_a), level(lvl) {
    if (!(level >= 0.0) || !std::isfinite(level))
        fail_input("penalty level must be finite and nonnegative, got " + std::to_string(level));
}

PenaltyFamily PenaltySpec::family() const {
    PenaltyFamily f;
    f.kind = kind;
    f.shape_a = shape_a;
    return f;
}

std::vector<Index> Dataset::live_instruments() const {
    std::vector<Index> live;
    live.reserve(static_cast<std::size_t>(q()));
    std::size_t k = 0;
    for (Index j = 0; j < q(); ++j) {
        if (k < dropped_instruments.size() && dropped_instruments[k] == j) {
            ++k;
            continue;
        }
        live.push_back(j);
    }
    return live;
}

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* name) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j))) {
                std::ostringstream os;
                os << "non-finite entry in " << name << " at row " << i + 1 << ", column " << j + 1;
                fail_input(os.str());
            }
}

}  // namespace

void validate(const Dataset& d) {
    const Index n = d.y.size();
    if (n < 2) fail_input("need at least 2 observations, got " + std::to_string(n));
    if (d.x.rows() != n || d.z.rows() != n) {
        std::ostringstream os;
        os << "row count mismatch: y has " << n << ", x has " << d.x.rows() << ", z has " << d.z.rows();
        fail_input(os.str());
    }
    if (d.x.cols() < 1) fail_input("x must have at least one column");
    if (d.z.cols() < 1) fail_input("z must have at least one column");
    for (Index i = 0; i < n; ++i)
        if (!std::isfinite(d.y(i))) fail_input("non-finite entry in y at row " + std::to_string(i + 1));
    check_finite(d.x, "x");
    check_finite(d.z, "z");
}

Dataset prepare(Dataset d) {
    validate(d);
    const Index n = d.n();
    const double root_n = std::sqrt(static_cast<double>(n));

    d.y_mean = d.y.mean();
    d.y.array() -= d.y_mean;

    d.x_means = d.x.colwise().mean().transpose();
    d.x.rowwise() -= d.x_means.transpose();

    d.z_means = d.z.colwise().mean().transpose();
    d.z_col_norms.resize(d.q());
    d.dropped_instruments.clear();
    for (Index j = 0; j < d.q(); ++j) {
        auto col = d.z.col(j);
        const double raw_norm = col.norm();
        col.array() -= d.z_means(j);
        const double norm = col.norm();
        d.z_col_norms(j) = norm;
        if (raw_norm == 0.0 || norm <= 1e-10 * raw_norm) {
            col.setZero();
            d.z_col_norms(j) = 0.0;
            d.dropped_instruments.push_back(j);
        } else {
            col *= root_n / norm;
        }
    }
    d.centered = true;
    return d;
}

Eigen::MatrixXd gamma_to_raw_scale(const Dataset& d, const Eigen::MatrixXd& gamma_std) {
    if (gamma_std.rows() != d.q()) fail_input("gamma has wrong number of rows");
    const double root_n = std::sqrt(static_cast<double>(d.n()));
    Eigen::MatrixXd raw = gamma_std;
    for (Index i = 0; i < d.q(); ++i) {
        if (d.z_col_norms(i) == 0.0)
            raw.row(i).setZero();
        else
            raw.row(i) *= root_n / d.z_col_norms(i);
    }
    return raw;
}

Eigen::MatrixXd gamma_to_standardized_scale(const Dataset& d, const Eigen::MatrixXd& gamma_raw) {
    if (gamma_raw.rows() != d.q()) fail_input("gamma has wrong number of rows");
    const double root_n = std::sqrt(static_cast<double>(d.n()));
    Eigen::MatrixXd out = gamma_raw;
    for (Index i = 0; i < d.q(); ++i) out.row(i) *= d.z_col_norms(i) / root_n;
    return out;
}

Eigen::MatrixXd predict_from_raw(const Dataset& d, const Eigen::MatrixXd& z_raw,
                                 const Eigen::MatrixXd& gamma_raw) {
    if (z_raw.cols() != d.q() || gamma_raw.rows() != d.q()) fail_input("instrument dimension mismatch");
    Eigen::MatrixXd centered = z_raw;
    centered.rowwise() -= d.z_means.transpose();
    return centered * gamma_raw;
}

}  // namespace siv
