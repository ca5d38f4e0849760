#pragma once

#include "sparse_iv/simulation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace siv {

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Comma-separated numeric table with a header row. Errors (Input) name
/// the file and the 1-based line.
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip text for a double ("%.17g"; nan and inf spelled out).
std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    CsvWriter& cell(const std::string& text);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(Index v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    void end_row();
    void close();

private:
    std::filesystem::path path_;
    std::string buffer_;
    bool row_started_ = false;
};

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m);

/// Column names prefix1..prefixN.
std::vector<std::string> numbered(const std::string& prefix, Index count);

/// Reads y (one column), x and z from separate files and checks that the
/// row counts agree. The result is raw (not prepared).
Dataset read_dataset(const std::filesystem::path& y, const std::filesystem::path& x, const std::filesystem::path& z);

/// Reads y.csv, x.csv and z.csv from a directory.
Dataset read_dataset_dir(const std::filesystem::path& dir);

/// Writes y.csv, x.csv, z.csv plus the truth files beta0.csv, gamma0.csv
/// (instrument, covariate, value triplets, 1-based), sigma.csv, errors.csv
/// and truth.json.
void write_simulation(const std::filesystem::path& dir, const SimConfig& cfg, const Simulation& sim);

/// Inverse of write_simulation; the dataset is prepared on load.
Simulation read_simulation(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace siv
