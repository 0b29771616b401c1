#include "drfn/market_data.hpp"

#include "drfn/errors.hpp"
#include "drfn/text_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>

namespace drfn {

Date parse_date(std::string_view iso) {
    using namespace std::chrono;
    int y = 0;
    unsigned m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' || !parse_int(iso.substr(0, 4), y) ||
        !parse_unsigned(iso.substr(5, 2), m) || !parse_unsigned(iso.substr(8, 2), d)) {
        throw DataError("invalid ISO-8601 date '" + std::string(iso) + "'");
    }
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(iso) + "'");
    return static_cast<Date>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_date(Date date) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{date}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

void BarSeries::validate() const {
    if (dates.size() != bars.size()) throw DataError(symbol + ": dates and bars differ in length");
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] <= dates[i - 1]) {
            throw DataError(symbol + ": dates not strictly increasing at " + format_date(dates[i]));
        }
    }
}

std::vector<double> compute_returns(const BarSeries& series) {
    series.validate();
    if (series.bars.size() < 2) throw DataError(series.symbol + ": need at least 2 days to compute returns");
    std::vector<double> out;
    out.reserve(series.bars.size() - 1);
    for (std::size_t i = 0; i < series.bars.size(); ++i) {
        if (series.bars[i][kClose] <= 0.0) {
            throw DataError(series.symbol + ": nonpositive close on " + format_date(series.dates[i]));
        }
        if (i > 0) {
            const double prev = series.bars[i - 1][kClose];
            out.push_back((series.bars[i][kClose] - prev) / prev);
        }
    }
    return out;
}

std::optional<std::size_t> MarketPanel::index_of(std::string_view symbol) const {
    auto it = std::lower_bound(symbols.begin(), symbols.end(), symbol);
    if (it == symbols.end() || *it != symbol) return std::nullopt;
    return static_cast<std::size_t>(it - symbols.begin());
}

std::optional<double> MarketPanel::return_at(std::size_t stock, std::size_t day) const {
    if (day == 0 || day >= dates.size()) return std::nullopt;
    const auto& prev = bars[stock][day - 1];
    const auto& cur = bars[stock][day];
    if (!prev || !cur) return std::nullopt;
    const double c0 = (*prev)[kClose];
    if (c0 <= 0.0) throw DataError(symbols[stock] + ": nonpositive close on " + format_date(dates[day - 1]));
    return ((*cur)[kClose] - c0) / c0;
}

MarketPanel make_panel(std::vector<BarSeries> series) {
    std::sort(series.begin(), series.end(), [](const auto& a, const auto& b) { return a.symbol < b.symbol; });
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i].symbol == series[i - 1].symbol) throw DataError("duplicate series for " + series[i].symbol);
    }
    std::set<Date> all_dates;
    for (const auto& s : series) {
        s.validate();
        all_dates.insert(s.dates.begin(), s.dates.end());
    }
    MarketPanel panel;
    panel.dates.assign(all_dates.begin(), all_dates.end());
    for (auto& s : series) {
        panel.symbols.push_back(s.symbol);
        std::vector<std::optional<IndicatorVector>> row(panel.dates.size());
        for (std::size_t k = 0; k < s.dates.size(); ++k) {
            const auto pos = std::lower_bound(panel.dates.begin(), panel.dates.end(), s.dates[k]) - panel.dates.begin();
            row[static_cast<std::size_t>(pos)] = s.bars[k];
        }
        panel.bars.push_back(std::move(row));
    }
    return panel;
}

namespace {
constexpr std::string_view kBarsHeader = "date,symbol,open,high,low,close,adj_close,volume";
}

MarketPanel read_bars_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open bars file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty bars file");
    if (trim(line) != kBarsHeader) {
        throw DataError(path.string() + ": expected header '" + std::string(kBarsHeader) + "'");
    }

    std::map<std::string, BarSeries> by_symbol;
    std::size_t line_no = 1;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const auto fields = split(row, ',');
        if (fields.size() != 8) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
        }
        const Date date = parse_date(trim(fields[0]));
        const std::string symbol(trim(fields[1]));
        // CSV column order is open,high,low,close,adj_close,volume.
        double open, high, low, close, adj, volume;
        if (!parse_double(trim(fields[2]), open) || !parse_double(trim(fields[3]), high) ||
            !parse_double(trim(fields[4]), low) || !parse_double(trim(fields[5]), close) ||
            !parse_double(trim(fields[6]), adj) || !parse_double(trim(fields[7]), volume)) {
            ++dropped;
            continue;
        }
        auto& s = by_symbol[symbol];
        s.symbol = symbol;
        if (!s.dates.empty() && date <= s.dates.back()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + symbol +
                            " dates must be strictly increasing (" + format_date(date) + ")");
        }
        s.dates.push_back(date);
        s.bars.push_back(IndicatorVector{open, close, adj, high, low, volume});
    }
    if (dropped > 0) spdlog::warn("{}: dropped {} rows with missing indicators", path.string(), dropped);
    if (by_symbol.empty()) throw DataError(path.string() + ": no bars");

    std::vector<BarSeries> series;
    for (auto& [_, s] : by_symbol) series.push_back(std::move(s));
    return make_panel(std::move(series));
}

void write_bars_csv(const std::filesystem::path& path, const MarketPanel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write bars file " + path.string());
    out << kBarsHeader << '\n';
    for (std::size_t d = 0; d < panel.num_days(); ++d) {
        const std::string date = format_date(panel.dates[d]);
        for (std::size_t s = 0; s < panel.num_stocks(); ++s) {
            const auto& bar = panel.bars[s][d];
            if (!bar) continue;
            const auto& b = *bar;
            out << date << ',' << panel.symbols[s] << ',' << format_double(b[kOpen]) << ','
                << format_double(b[kHigh]) << ',' << format_double(b[kLow]) << ',' << format_double(b[kClose])
                << ',' << format_double(b[kAdjClose]) << ',' << format_double(b[kVolume]) << '\n';
        }
    }
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace drfn
