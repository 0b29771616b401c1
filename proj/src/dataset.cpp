#include "drfn/dataset.hpp"

#include "drfn/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace drfn {

ChronoSplit chronological_split(std::size_t n_days, std::size_t window, std::array<unsigned, 3> ratios) {
    if (n_days < window + 3) {
        throw DataError("chronological_split: " + std::to_string(n_days) + " days is too few for window " +
                        std::to_string(window) + " (need at least " + std::to_string(window + 3) + ")");
    }
    const unsigned total = ratios[0] + ratios[1] + ratios[2];
    if (total == 0) throw ContractError("chronological_split: ratios sum to zero");
    // Integer arithmetic keeps the floors exact (0.8 is not representable).
    const std::size_t train = n_days * ratios[0] / total;
    const std::size_t val = n_days * ratios[1] / total;
    ChronoSplit s;
    s.train = {0, train};
    s.validation = {train, train + val};
    s.test = {train + val, n_days};
    return s;
}

NormStats fit_normalization(const MarketPanel& panel, DayRange train) {
    if (train.size() == 0) throw DataError("fit_normalization: empty training partition");
    NormStats stats;
    stats.mean.assign(panel.num_stocks(), IndicatorVector{});
    stats.std.assign(panel.num_stocks(), IndicatorVector{});
    for (std::size_t s = 0; s < panel.num_stocks(); ++s) {
        IndicatorVector sum{}, sq{};
        std::size_t n = 0;
        for (std::size_t d = train.begin; d < train.end; ++d) {
            const auto& bar = panel.bars[s][d];
            if (!bar) continue;
            ++n;
            for (std::size_t k = 0; k < kNumIndicators; ++k) sum[k] += (*bar)[k];
        }
        if (n == 0) {
            spdlog::warn("fit_normalization: {} has no bars in the training partition", panel.symbols[s]);
            continue;
        }
        for (std::size_t k = 0; k < kNumIndicators; ++k) stats.mean[s][k] = sum[k] / static_cast<double>(n);
        for (std::size_t d = train.begin; d < train.end; ++d) {
            const auto& bar = panel.bars[s][d];
            if (!bar) continue;
            for (std::size_t k = 0; k < kNumIndicators; ++k) {
                const double dv = (*bar)[k] - stats.mean[s][k];
                sq[k] += dv * dv;
            }
        }
        for (std::size_t k = 0; k < kNumIndicators; ++k) stats.std[s][k] = std::sqrt(sq[k] / static_cast<double>(n));
    }
    return stats;
}

double zscore(double x, double mean, double std) { return std < 1e-12 ? 0.0 : (x - mean) / std; }

IndicatorVector zscore_normalize(const NormStats& stats, std::size_t stock, const IndicatorVector& raw) {
    IndicatorVector out{};
    for (std::size_t k = 0; k < kNumIndicators; ++k) out[k] = zscore(raw[k], stats.mean[stock][k], stats.std[stock][k]);
    return out;
}

std::vector<WindowSample> build_windows(const MarketPanel& panel, DayRange range, std::size_t window) {
    if (window == 0) throw ContractError("build_windows: window must be positive");
    std::vector<WindowSample> out;
    if (range.size() < window + 1) return out;
    std::size_t dropped = 0;
    for (std::size_t end = range.begin + window - 1; end + 1 < range.end; ++end) {
        WindowSample w{end, window, {}};
        bool complete = true;
        for (std::size_t s = 0; s < panel.num_stocks() && complete; ++s) {
            for (std::size_t d = w.first_day(); d <= w.target_day(); ++d) {
                if (!panel.bars[s][d]) {
                    complete = false;
                    break;
                }
            }
            if (complete) w.targets.push_back(*panel.return_at(s, w.target_day()));
        }
        if (complete) {
            out.push_back(std::move(w));
        } else {
            ++dropped;
        }
    }
    if (dropped > 0) {
        spdlog::info("build_windows: dropped {} windows in days [{}, {}) with missing bars", dropped, range.begin,
                     range.end);
    }
    return out;
}

}  // namespace drfn
