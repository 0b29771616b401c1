#include "drfn/features.hpp"

#include "drfn/encoders.hpp"
#include "drfn/errors.hpp"

namespace drfn {

std::vector<DayFeatures> prepare_features(const MarketPanel& panel, const NewsTable& news, const NormStats& stats,
                                          std::size_t max_news) {
    const std::size_t z = panel.num_stocks();
    if (news.dim == 0) throw DataError("prepare_features: news table has no embedding dimension");
    if (stats.mean.size() != z) throw DataError("prepare_features: normalisation stats do not match the panel");
    std::vector<DayFeatures> out(panel.num_days());
    for (std::size_t d = 0; d < panel.num_days(); ++d) {
        DayFeatures& f = out[d];
        f.market = Tensor::zeros(z, kNumIndicators);
        f.news = Tensor::zeros(z, news.dim);
        f.no_news.assign(z, true);
        for (std::size_t s = 0; s < z; ++s) {
            if (const auto& bar = panel.bars[s][d]) {
                const IndicatorVector norm = zscore_normalize(stats, s, *bar);
                for (std::size_t k = 0; k < kNumIndicators; ++k) f.market(s, k) = norm[k];
            }
            const DayNewsSet* set = news.find(panel.dates[d], static_cast<std::uint32_t>(s));
            if (!set) continue;
            if (auto mean = aggregate_daily_news(set->embeddings, max_news, news.dim)) {
                for (std::size_t l = 0; l < news.dim; ++l) f.news(s, l) = (*mean)[l];
                f.no_news[s] = false;
            }
        }
    }
    return out;
}

WindowInputs window_inputs(const std::vector<DayFeatures>& days, const WindowSample& sample) {
    if (sample.end >= days.size() || sample.window == 0 || sample.window > sample.end + 1) {
        throw ContractError("window_inputs: window ending at day " + std::to_string(sample.end) + " is out of range");
    }
    WindowInputs w;
    for (std::size_t d = sample.first_day(); d <= sample.end; ++d) {
        w.market.push_back(days[d].market);
        w.news.push_back(days[d].news);
        w.no_news.push_back(days[d].no_news);
    }
    return w;
}

}  // namespace drfn
