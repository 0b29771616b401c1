#pragma once

#include "drfn/dataset.hpp"
#include "drfn/tensor.hpp"

#include <vector>

namespace drfn {

/// Model inputs for one trading day, all stocks stacked by row.
struct DayFeatures {
    Tensor market;              // Z×6 normalised indicators (zeros where the bar is missing)
    Tensor news;                // Z×L aggregated embeddings (zeros on no-news rows)
    std::vector<bool> no_news;  // per stock: no usable news that day
};

/// T consecutive days of features, oldest first.
struct WindowInputs {
    std::vector<Tensor> market;
    std::vector<Tensor> news;
    std::vector<std::vector<bool>> no_news;

    std::size_t steps() const { return market.size(); }
};

/// Features for every day on the panel's axis, normalised with `stats`.
std::vector<DayFeatures> prepare_features(const MarketPanel& panel, const NewsTable& news, const NormStats& stats,
                                          std::size_t max_news);

WindowInputs window_inputs(const std::vector<DayFeatures>& days, const WindowSample& sample);

}  // namespace drfn
