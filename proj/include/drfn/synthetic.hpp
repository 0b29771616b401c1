#pragma once

#include "drfn/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drfn {

/// Knobs of the sign-switching sector-factor market:
///   r(i,t) = β_i · s_t(sector(i)) · f_t + ε(i,t)
/// with a shared factor f_t ~ N(0, factor_vol²), per-sector regime signs s_t ∈ {±1}
/// that flip independently with probability regime_switch_prob each day, and
/// idiosyncratic ε ~ N(0, idio_vol²). Each news item for stock i on day t is
/// news_snr · sign(r(i,t+1)) · u + noise, u a fixed unit direction and noise an
/// isotropic Gaussian vector with unit expected squared norm.
struct SyntheticSpec {
    std::size_t num_stocks = 12;
    std::size_t num_sectors = 3;
    std::size_t num_days = 600;
    double regime_switch_prob = 0.05;
    double factor_vol = 0.015;
    double idio_vol = 0.005;
    double news_snr = 1.0;
    std::size_t embedding_dim = 32;
    std::size_t max_news_per_day = 3;
    double no_news_prob = 0.1;
    double beta_min = 0.5;
    double beta_max = 1.5;
    std::string start_date = "2018-01-02";
    std::uint64_t seed = 0;

    void validate() const;
};

/// Planted structure kept alongside the market for evaluation.
struct GroundTruth {
    std::vector<std::string> symbols;
    std::vector<std::size_t> sector_of;          // per stock
    std::vector<Date> dates;                     // one per trading day
    std::vector<std::vector<int>> regime_signs;  // [day][sector], ±1

    /// s_a(t)·s_b(t) for the sectors of stocks i and j; +1 within a sector.
    int planted_correlation(std::size_t day, std::size_t i, std::size_t j) const;
};

struct SyntheticMarket {
    MarketPanel panel;
    NewsTable news;
    StaticRelations relations;
    GroundTruth truth;
    std::vector<double> betas;
    std::vector<double> unit_direction;
};

SyntheticMarket generate_synthetic(const SyntheticSpec& spec);

/// Writes bars.csv, news.bin, relations.csv, regimes.csv and sectors.csv into `dir`.
void write_synthetic(const SyntheticMarket& market, const std::filesystem::path& dir);

/// Reads regimes.csv (`date,sector_0,...`) and sectors.csv (`symbol,sector`).
GroundTruth read_ground_truth(const std::filesystem::path& regimes_csv, const std::filesystem::path& sectors_csv);

}  // namespace drfn
