#pragma once

#include "drfn/market_data.hpp"
#include "drfn/news.hpp"
#include "drfn/relations.hpp"

#include <array>
#include <vector>

namespace drfn {

/// Half-open day-index range [begin, end) on the panel's date axis.
struct DayRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool contains(std::size_t d) const { return d >= begin && d < end; }
};

struct ChronoSplit {
    DayRange train, validation, test;
};

/// 8:1:1 by default: train = ⌊0.8n⌋, validation = ⌊0.1n⌋, test = the remainder.
/// Requires n_days ≥ window + 3.
ChronoSplit chronological_split(std::size_t n_days, std::size_t window, std::array<unsigned, 3> ratios = {8, 1, 1});

/// Per-stock, per-indicator mean and population std over the training partition.
struct NormStats {
    std::vector<IndicatorVector> mean;
    std::vector<IndicatorVector> std;
};

NormStats fit_normalization(const MarketPanel& panel, DayRange train);
/// (x − mean)/std, or 0 where std < 1e-12.
double zscore(double x, double mean, double std);
IndicatorVector zscore_normalize(const NormStats& stats, std::size_t stock, const IndicatorVector& raw);

/// One training example: the T days ending at `end` and the returns realised on end + 1.
struct WindowSample {
    std::size_t end = 0;
    std::size_t window = 0;
    std::vector<double> targets;  // one per stock

    std::size_t first_day() const { return end + 1 - window; }
    std::size_t target_day() const { return end + 1; }
};

/// Every window whose T input days and target day lie inside `range`. Windows in
/// which any stock lacks a bar are dropped and counted in a log line.
std::vector<WindowSample> build_windows(const MarketPanel& panel, DayRange range, std::size_t window);

}  // namespace drfn
