#include "drfn/reports.hpp"

#include "drfn/errors.hpp"
#include "drfn/text_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace drfn {

using nlohmann::ordered_json;

double rmse(std::span<const double> errors) {
    if (errors.empty()) throw DataError("rmse: no errors to aggregate");
    double s = 0.0;
    for (double e : errors) s += e * e;
    return std::sqrt(s / static_cast<double>(errors.size()));
}

double mae(std::span<const double> errors) {
    if (errors.empty()) throw DataError("mae: no errors to aggregate");
    double s = 0.0;
    for (double e : errors) s += std::abs(e);
    return s / static_cast<double>(errors.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: series lengths differ");
    if (x.size() < 2) throw DataError("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

void EvalReport::finalize() {
    std::vector<double> errors;
    errors.reserve(rows.size());
    for (const auto& r : rows) errors.push_back(r.predicted - r.actual);
    rmse = drfn::rmse(errors);
    mae = drfn::mae(errors);
}

std::string to_json(const EvalReport& r) {
    ordered_json j;
    j["variant"] = r.variant;
    j["partition"] = r.partition;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["rmse"] = r.rmse;
    j["mae"] = r.mae;
    j["count"] = r.rows.size();
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) rows.push_back({row.date, row.symbol, row.predicted, row.actual});
    j["predictions"] = std::move(rows);
    return j.dump(1);
}

EvalReport eval_report_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        EvalReport r;
        r.variant = j.at("variant").get<std::string>();
        r.partition = j.at("partition").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.rmse = j.at("rmse").get<double>();
        r.mae = j.at("mae").get<double>();
        for (const auto& row : j.at("predictions")) {
            r.rows.push_back({row.at(0).get<std::string>(), row.at(1).get<std::string>(), row.at(2).get<double>(),
                              row.at(3).get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("evaluation report: ") + e.what());
    }
}

namespace {

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> read_optional(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string to_json(const SensitivityReport& r) {
    ordered_json j;
    j["partition"] = r.partition;
    j["strength_source"] = r.strength_source;
    j["target"] = r.target;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["length"] = r.length;
    j["mean_abs_rho"] = r.mean_abs_rho;
    j["evaluated_pairs"] = r.evaluated_pairs;
    j["aggregate_rho"] = optional_number(r.aggregate_rho);
    ordered_json pairs = ordered_json::array();
    for (const auto& p : r.pairs) {
        ordered_json pj;
        pj["symbol_a"] = p.symbol_a;
        pj["symbol_b"] = p.symbol_b;
        pj["rho"] = optional_number(p.rho);
        pj["dates"] = p.dates;
        pj["delta_s"] = p.delta_s;
        pj["delta_c"] = p.delta_c;
        pairs.push_back(std::move(pj));
    }
    j["pairs"] = std::move(pairs);
    return j.dump(1);
}

SensitivityReport sensitivity_report_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        SensitivityReport r;
        r.partition = j.at("partition").get<std::string>();
        r.strength_source = j.at("strength_source").get<std::string>();
        r.target = j.at("target").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.length = j.at("length").get<std::size_t>();
        r.mean_abs_rho = j.at("mean_abs_rho").get<double>();
        r.evaluated_pairs = j.at("evaluated_pairs").get<std::size_t>();
        r.aggregate_rho = read_optional(j.at("aggregate_rho"));
        for (const auto& pj : j.at("pairs")) {
            PairSeries p;
            p.symbol_a = pj.at("symbol_a").get<std::string>();
            p.symbol_b = pj.at("symbol_b").get<std::string>();
            p.rho = read_optional(pj.at("rho"));
            p.dates = pj.at("dates").get<std::vector<std::string>>();
            p.delta_s = pj.at("delta_s").get<std::vector<double>>();
            p.delta_c = pj.at("delta_c").get<std::vector<double>>();
            r.pairs.push_back(std::move(p));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("sensitivity report: ") + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw DataError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("I/O error writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir, const std::string& stem) {
    write_text_file(dir / (stem + ".json"), to_json(report) + "\n");
    std::string csv = "date,symbol,predicted,actual\n";
    for (const auto& r : report.rows) {
        csv += r.date + "," + r.symbol + "," + format_double(r.predicted) + "," + format_double(r.actual) + "\n";
    }
    write_text_file(dir / (stem + ".csv"), csv);
}

void emit_report(const SensitivityReport& report, const std::filesystem::path& dir, const std::string& stem) {
    write_text_file(dir / (stem + ".json"), to_json(report) + "\n");
    std::string csv = "date,pair,delta_s,delta_c\n";
    for (const auto& p : report.pairs) {
        const std::string pair = p.symbol_a + "|" + p.symbol_b;
        for (std::size_t k = 0; k < p.dates.size(); ++k) {
            csv += p.dates[k] + "," + pair + "," + format_double(p.delta_s[k]) + "," + format_double(p.delta_c[k]) + "\n";
        }
    }
    write_text_file(dir / (stem + ".csv"), csv);
}

}  // namespace drfn
