#include "sparse_iv/io.hpp"

#include "sparse_iv/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace siv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '"')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '"')) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                             : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string location(const fs::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size())
            fail_input(location(path, line_no) + ": expected " + std::to_string(table.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (!parse_double(fields[c], row[c]))
                fail_input(location(path, line_no) + ": column " + std::to_string(c + 1) + " ('" + fields[c] +
                           "') is not a number");
            if (!std::isfinite(row[c]))
                fail_input(location(path, line_no) + ": column " + std::to_string(c + 1) + " is not finite");
        }
        rows.push_back(std::move(row));
    }
    if (table.header.empty()) fail_input(path.string() + ": empty file (a header row is required)");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return table;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
    for (const auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(const std::string& text) {
    if (row_started_) buffer_ += ',';
    buffer_ += text;
    row_started_ = true;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    buffer_ += '\n';
    row_started_ = false;
}

void CsvWriter::close() { write_text(path_, buffer_); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_input("cannot write " + path.string());
    out << text;
    if (!out) fail_input("failed writing " + path.string());
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& m) {
    CsvWriter w(path, header);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) w.cell(m(i, j));
        w.end_row();
    }
    w.close();
}

std::vector<std::string> numbered(const std::string& prefix, Index count) {
    std::vector<std::string> out;
    for (Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

Dataset read_dataset(const fs::path& y, const fs::path& x, const fs::path& z) {
    const CsvTable ty = read_csv(y), tx = read_csv(x), tz = read_csv(z);
    if (ty.values.cols() != 1)
        fail_input(y.string() + ": response file must have exactly one column, found " +
                   std::to_string(ty.values.cols()));
    auto same_rows = [&](const CsvTable& t, const fs::path& path) {
        if (t.values.rows() != ty.values.rows())
            fail_input("row count mismatch: " + path.string() + " has " + std::to_string(t.values.rows()) +
                       " data rows but " + y.string() + " has " + std::to_string(ty.values.rows()));
    };
    same_rows(tx, x);
    same_rows(tz, z);
    Dataset d;
    d.y = ty.values.col(0);
    d.x = tx.values;
    d.z = tz.values;
    validate(d);
    return d;
}

Dataset read_dataset_dir(const fs::path& dir) { return read_dataset(dir / "y.csv", dir / "x.csv", dir / "z.csv"); }

namespace {

json one_based(const std::vector<Index>& v) {
    json a = json::array();
    for (Index j : v) a.push_back(j + 1);
    return a;
}

std::vector<Index> zero_based(const json& a) {
    std::vector<Index> v;
    for (const auto& e : a) v.push_back(e.get<Index>() - 1);
    return v;
}

json config_json(const SimConfig& c) {
    return json{{"name", c.name},
                {"n", c.n},
                {"p", c.p},
                {"q", c.q},
                {"r", c.r},
                {"s", c.s},
                {"gamma_range", {c.gamma_lo, c.gamma_hi}},
                {"mixed_strength", c.mixed_strength},
                {"strong_count", c.strong_count},
                {"weak_range", {c.weak_lo, c.weak_hi}},
                {"beta_range", {c.beta_lo, c.beta_hi}},
                {"rho", c.rho},
                {"confound_value", c.confound_value},
                {"n_confounded", c.n_confounded},
                {"bernoulli_p", c.bernoulli_p},
                {"random_bernoulli", c.random_bernoulli},
                {"bernoulli_max", c.bernoulli_max},
                {"seed", c.seed}};
}

}  // namespace

void write_simulation(const fs::path& dir, const SimConfig& cfg, const Simulation& sim) {
    fs::create_directories(dir);
    const Dataset& d = sim.raw;
    const SimTruth& t = sim.truth;
    write_matrix_csv(dir / "y.csv", {"y"}, d.y);
    write_matrix_csv(dir / "x.csv", numbered("x", d.p()), d.x);
    write_matrix_csv(dir / "z.csv", numbered("z", d.q()), d.z);

    CsvWriter beta(dir / "beta0.csv", {"index", "value"});
    for (Index j = 0; j < t.beta0.size(); ++j) beta.cell(j + 1).cell(t.beta0(j)).end_row();
    beta.close();

    CsvWriter gamma(dir / "gamma0.csv", {"instrument", "covariate", "value"});
    for (Index j = 0; j < t.gamma0.cols(); ++j)
        for (Index i = 0; i < t.gamma0.rows(); ++i)
            if (t.gamma0(i, j) != 0.0) gamma.cell(i + 1).cell(j + 1).cell(t.gamma0(i, j)).end_row();
    gamma.close();

    std::vector<std::string> sigma_names = numbered("e", d.p());
    sigma_names.push_back("eta");
    write_matrix_csv(dir / "sigma.csv", sigma_names, t.sigma);
    Eigen::MatrixXd err(t.errors.rows(), t.errors.cols() + 1);
    err << t.errors, t.eta;
    write_matrix_csv(dir / "errors.csv", sigma_names, err);

    json cs = json::array();
    for (const auto& s : t.column_supports) cs.push_back(one_based(s));
    json truth{{"config", config_json(cfg)},
               {"dims", {{"n", d.n()}, {"p", d.p()}, {"q", d.q()}}},
               {"support", one_based(t.support)},
               {"column_supports", cs},
               {"confounded", one_based(t.confounded)},
               {"dropped_instruments", one_based(sim.data.dropped_instruments)},
               {"bernoulli_probs", std::vector<double>(t.bernoulli_probs.data(),
                                                       t.bernoulli_probs.data() + t.bernoulli_probs.size())}};
    write_text(dir / "truth.json", truth.dump(2) + "\n");
}

Simulation read_simulation(const fs::path& dir) {
    Simulation sim;
    sim.raw = read_dataset_dir(dir);
    sim.data = prepare(sim.raw);
    const Index n = sim.data.n(), p = sim.data.p(), q = sim.data.q();
    SimTruth& t = sim.truth;

    std::ifstream in(dir / "truth.json");
    if (!in) fail_input("cannot open " + (dir / "truth.json").string() + " (diagnostics need the truth files)");
    json truth;
    try {
        in >> truth;
        t.support = zero_based(truth.at("support"));
        for (const auto& s : truth.at("column_supports")) t.column_supports.push_back(zero_based(s));
        t.confounded = zero_based(truth.at("confounded"));
        const auto probs = truth.at("bernoulli_probs").get<std::vector<double>>();
        t.bernoulli_probs = Eigen::Map<const Eigen::VectorXd>(probs.data(), Index(probs.size()));
    } catch (const json::exception& e) {
        fail_input((dir / "truth.json").string() + ": " + e.what());
    }

    const CsvTable beta = read_csv(dir / "beta0.csv");
    if (beta.values.cols() != 2) fail_input((dir / "beta0.csv").string() + ": expected columns index,value");
    t.beta0 = Eigen::VectorXd::Zero(p);
    for (Index r = 0; r < beta.values.rows(); ++r) {
        const Index j = Index(beta.values(r, 0)) - 1;
        if (j < 0 || j >= p) fail_input(location(dir / "beta0.csv", std::size_t(r) + 2) + ": index out of range");
        t.beta0(j) = beta.values(r, 1);
    }

    const CsvTable gamma = read_csv(dir / "gamma0.csv");
    if (gamma.values.cols() != 3)
        fail_input((dir / "gamma0.csv").string() + ": expected columns instrument,covariate,value");
    t.gamma0 = Eigen::MatrixXd::Zero(q, p);
    for (Index r = 0; r < gamma.values.rows(); ++r) {
        const Index i = Index(gamma.values(r, 0)) - 1, j = Index(gamma.values(r, 1)) - 1;
        if (i < 0 || i >= q || j < 0 || j >= p)
            fail_input(location(dir / "gamma0.csv", std::size_t(r) + 2) + ": index out of range");
        t.gamma0(i, j) = gamma.values(r, 2);
    }

    t.sigma = read_csv(dir / "sigma.csv").values;
    if (t.sigma.rows() != p + 1 || t.sigma.cols() != p + 1)
        fail_input((dir / "sigma.csv").string() + ": expected a (p+1) x (p+1) matrix");
    const Eigen::MatrixXd err = read_csv(dir / "errors.csv").values;
    if (err.rows() != n || err.cols() != p + 1) fail_input((dir / "errors.csv").string() + ": expected n x (p+1)");
    t.errors = err.leftCols(p);
    t.eta = err.col(p);
    return sim;
}

}  // namespace siv
