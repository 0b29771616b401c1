#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drfn {

double rmse(std::span<const double> errors);
double mae(std::span<const double> errors);

/// Sample Pearson correlation; nullopt when either series has zero variance.
/// Throws DataError for mismatched or too-short (< 2) series.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct PredictionRow {
    std::string date;
    std::string symbol;
    double predicted = 0.0;
    double actual = 0.0;

    bool operator==(const PredictionRow&) const = default;
};

struct EvalReport {
    std::string variant;
    std::string partition;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<PredictionRow> rows;
    double rmse = 0.0;
    double mae = 0.0;

    /// Recomputes RMSE and MAE from the rows.
    void finalize();
    bool operator==(const EvalReport&) const = default;
};

struct PairSeries {
    std::string symbol_a;
    std::string symbol_b;
    std::vector<std::string> dates;  // day of each difference
    std::vector<double> delta_s;
    std::vector<double> delta_c;
    std::optional<double> rho;

    bool operator==(const PairSeries&) const = default;
};

struct SensitivityReport {
    std::string partition;
    std::string strength_source;  // "fused" or "dynamic"
    std::string target;           // "price" or "planted"
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t length = 0;       // T', differences per series
    std::vector<PairSeries> pairs;
    /// Mean |ρ| over pairs whose target series varies; undefined ρ counts as 0.
    double mean_abs_rho = 0.0;
    std::size_t evaluated_pairs = 0;
    /// ρ between the pair-averaged ΔS and ΔC series.
    std::optional<double> aggregate_rho;

    bool operator==(const SensitivityReport&) const = default;
};

std::string to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);
std::string to_json(const SensitivityReport& report);
SensitivityReport sensitivity_report_from_json(const std::string& text);

/// Writes <stem>.json and <stem>.csv into `dir`. CSVs: `date,symbol,predicted,actual`
/// and `date,pair,delta_s,delta_c`.
void emit_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem);
void emit_report(const SensitivityReport& report, const std::filesystem::path& dir, const std::string& stem);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace drfn
