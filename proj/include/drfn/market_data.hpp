#pragma once

#include "drfn/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drfn {

/// Trading date as days since 1970-01-01.
using Date = std::int32_t;

Date parse_date(std::string_view iso);
std::string format_date(Date d);

/// Daily indicator vector, in the order open, close, adj_close, high, low, volume.
using IndicatorVector = std::array<double, 6>;
inline constexpr std::size_t kNumIndicators = 6;
enum IndicatorIndex : std::size_t { kOpen = 0, kClose = 1, kAdjClose = 2, kHigh = 3, kLow = 4, kVolume = 5 };

/// One stock's daily bars. Dates strictly increase.
struct BarSeries {
    std::string symbol;
    std::vector<Date> dates;
    std::vector<IndicatorVector> bars;

    void validate() const;
};

/// Close-to-close simple returns: out[k] = (c[k+1] − c[k]) / c[k], length days − 1.
std::vector<double> compute_returns(const BarSeries& series);

/// All stocks on a shared trading-day axis. A stock with no bar on an axis day has
/// an empty entry there. Symbols are sorted, which fixes the stock index used by
/// every downstream matrix and by the binary news format.
struct MarketPanel {
    std::vector<std::string> symbols;
    std::vector<Date> dates;
    std::vector<std::vector<std::optional<IndicatorVector>>> bars;  // [stock][day]

    std::size_t num_stocks() const { return symbols.size(); }
    std::size_t num_days() const { return dates.size(); }
    std::optional<std::size_t> index_of(std::string_view symbol) const;
    /// Return realised on axis day `day` relative to day − 1, if both bars exist.
    std::optional<double> return_at(std::size_t stock, std::size_t day) const;
};

MarketPanel make_panel(std::vector<BarSeries> series);

/// CSV with header `date,symbol,open,high,low,close,adj_close,volume`. Rows with an
/// empty or unparsable indicator are dropped with a warning.
MarketPanel read_bars_csv(const std::filesystem::path& path);
void write_bars_csv(const std::filesystem::path& path, const MarketPanel& panel);

}  // namespace drfn
