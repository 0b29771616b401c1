#include "drfn/dataset.hpp"
#include "drfn/embedder.hpp"
#include "drfn/errors.hpp"
#include "drfn/market_data.hpp"
#include "drfn/news.hpp"
#include "drfn/relations.hpp"
#include "drfn/reports.hpp"
#include "drfn/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace drfn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("drfn_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

BarSeries series_from_closes(const std::string& symbol, const std::vector<double>& closes) {
    BarSeries s;
    s.symbol = symbol;
    Date d = parse_date("2020-01-01");
    for (double c : closes) {
        s.dates.push_back(d++);
        s.bars.push_back({c, c, c, c, c, 1000.0});
    }
    return s;
}

MarketPanel panel_with_days(std::size_t days, std::size_t stocks = 2) {
    std::vector<BarSeries> all;
    for (std::size_t i = 0; i < stocks; ++i) {
        std::vector<double> closes;
        for (std::size_t t = 0; t < days; ++t) closes.push_back(100.0 + static_cast<double>(t + i));
        all.push_back(series_from_closes("S" + std::to_string(i), closes));
    }
    return make_panel(std::move(all));
}

}  // namespace

TEST(Dates, RoundTrip) {
    EXPECT_EQ(parse_date("1970-01-01"), 0);
    EXPECT_EQ(format_date(parse_date("2018-03-19")), "2018-03-19");
    EXPECT_THROW(parse_date("2018-13-01"), DataError);
}

TEST(Returns, OnePercent) {
    auto r = compute_returns(series_from_closes("A", {100, 101}));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r[0], 0.01);
}

TEST(Returns, ConstantClosesGiveZeros) {
    for (double r : compute_returns(series_from_closes("A", {7, 7, 7, 7}))) EXPECT_EQ(r, 0.0);
}

TEST(Returns, HandArithmetic) {
    auto r = compute_returns(series_from_closes("A", {100, 90, 99}));
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0], -0.10, 1e-15);
    EXPECT_NEAR(r[1], 0.10, 1e-15);
}

TEST(Returns, NonpositiveCloseNamesTheDate) {
    try {
        compute_returns(series_from_closes("A", {100, 0, 99}));
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("2020-01-02"), std::string::npos) << e.what();
    }
    EXPECT_THROW(compute_returns(series_from_closes("A", {100})), DataError);
}

TEST(BarSeries, DatesMustStrictlyIncrease) {
    BarSeries s = series_from_closes("A", {1, 2, 3});
    s.dates[2] = s.dates[1];
    EXPECT_THROW(s.validate(), DataError);
}

TEST(Split, CnScale) {
    auto s = chronological_split(968, 5);
    EXPECT_EQ(s.train.size(), 774u);
    EXPECT_EQ(s.validation.size(), 96u);
    EXPECT_EQ(s.test.size(), 98u);
}

TEST(Split, UsScale) {
    auto s = chronological_split(1006, 5);
    EXPECT_EQ(s.train.size(), 804u);
    EXPECT_EQ(s.validation.size(), 100u);
    EXPECT_EQ(s.test.size(), 102u);
}

TEST(Split, TenDays) {
    auto s = chronological_split(10, 5);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.validation.size(), 1u);
    EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, TooFewDays) { EXPECT_THROW(chronological_split(7, 5), DataError); }

TEST(Split, PartitionsAreDisjointContiguousExhaustiveOrdered) {
    for (std::size_t n = 8; n < 400; n += 7) {
        auto s = chronological_split(n, 5);
        EXPECT_EQ(s.train.begin, 0u);
        EXPECT_EQ(s.train.end, s.validation.begin);
        EXPECT_EQ(s.validation.end, s.test.begin);
        EXPECT_EQ(s.test.end, n);
        EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), n);
    }
}

TEST(ZScore, ConstantFeatureIsZero) {
    MarketPanel p = make_panel({series_from_closes("A", {5, 5, 5, 5})});
    NormStats st = fit_normalization(p, {0, 4});
    auto z = zscore_normalize(st, 0, *p.bars[0][2]);
    for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(ZScore, PopulationStdConvention) {
    MarketPanel p = make_panel({series_from_closes("A", {1, 3, 5})});
    NormStats st = fit_normalization(p, {0, 2});
    EXPECT_DOUBLE_EQ(st.mean[0][kClose], 2.0);
    EXPECT_DOUBLE_EQ(st.std[0][kClose], 1.0);
    EXPECT_DOUBLE_EQ(zscore(3.0, 2.0, 1.0), 1.0);
    // The test-partition value 5 uses the train statistics.
    EXPECT_DOUBLE_EQ(zscore_normalize(st, 0, *p.bars[0][2])[kClose], 3.0);
    EXPECT_EQ(zscore(4.0, 2.0, 1e-13), 0.0);
}

TEST(ZScore, StatisticsIgnoreNonTrainDays) {
    MarketPanel p = panel_with_days(50);
    auto split = chronological_split(50, 5);
    NormStats before = fit_normalization(p, split.train);
    for (std::size_t d = split.test.begin; d < split.test.end; ++d) (*p.bars[1][d])[kVolume] *= 1e6;
    NormStats after = fit_normalization(p, split.train);
    EXPECT_EQ(before.mean, after.mean);
    EXPECT_EQ(before.std, after.std);
}

TEST(Windows, SlidingCount) {
    MarketPanel p = panel_with_days(40);
    EXPECT_EQ(build_windows(p, {0, 6}, 5).size(), 1u);
    EXPECT_EQ(build_windows(p, {3, 3 + 5 + 7}, 5).size(), 7u);
    EXPECT_TRUE(build_windows(p, {0, 5}, 5).empty());
}

TEST(Windows, CnTrainPartition) {
    MarketPanel p = panel_with_days(968, 1);
    auto split = chronological_split(968, 5);
    EXPECT_EQ(build_windows(p, split.train, 5).size(), 769u);
}

TEST(Windows, StayInsideTheirPartitionAndTargetFollowsWindow) {
    MarketPanel p = panel_with_days(120);
    auto split = chronological_split(120, 5);
    for (DayRange r : {split.train, split.validation, split.test}) {
        for (const auto& w : build_windows(p, r, 5)) {
            EXPECT_TRUE(r.contains(w.first_day()));
            EXPECT_TRUE(r.contains(w.target_day()));
            EXPECT_GT(w.target_day(), w.end);
            EXPECT_EQ(w.end + 1 - w.first_day(), 5u);
            ASSERT_EQ(w.targets.size(), 2u);
            EXPECT_DOUBLE_EQ(w.targets[0], *p.return_at(0, w.target_day()));
        }
    }
}

TEST(Windows, MissingBarDropsTheSample) {
    MarketPanel p = panel_with_days(20);
    const std::size_t full = build_windows(p, {0, 20}, 5).size();
    p.bars[1][10].reset();
    // Day 10 sits in the input span of 5 windows and is the target of one more,
    // whose return also needs day 10's bar.
    EXPECT_EQ(build_windows(p, {0, 20}, 5).size(), full - 6);
}

TEST(Relations, SingleEdgeIsSymmetrised) {
    auto r = make_relations({"A", "B", "C"}, {{"A", "B"}});
    EXPECT_EQ(r.matrix, Tensor::matrix({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}));
}

TEST(Relations, SelfEdgeIgnoredAndDuplicatesIdempotent) {
    auto r = make_relations({"A", "B", "C"}, {{"A", "A"}, {"B", "C"}, {"C", "B"}, {"B", "C"}});
    EXPECT_EQ(r.matrix, Tensor::matrix({{0, 0, 0}, {0, 0, 1}, {0, 1, 0}}));
}

TEST(Relations, UnknownSymbolIsListed) {
    try {
        make_relations({"A", "B"}, {{"A", "ZZZ"}});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("ZZZ"), std::string::npos);
    }
}

TEST(Relations, LoadFromFileSymmetricZeroDiagonal) {
    const fs::path dir = scratch_dir("relations");
    {
        std::ofstream f(dir / "rel.csv");
        f << "symbol_a,symbol_b\nA,B\nC,A\nB,B\nA,B\n";
    }
    auto r = load_relations(dir / "rel.csv", {"A", "B", "C"});
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.matrix(i, i), 0.0);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.matrix(i, j), r.matrix(j, i));
    }
    EXPECT_EQ(r.matrix(0, 1), 1.0);
    EXPECT_EQ(r.matrix(0, 2), 1.0);
    EXPECT_EQ(r.matrix(1, 2), 0.0);
}

TEST(Relations, EmptyFileGivesZeros) {
    const fs::path dir = scratch_dir("relations_empty");
    std::ofstream(dir / "rel.csv").close();
    auto r = load_relations(dir / "rel.csv", {"A", "B"});
    EXPECT_EQ(r.matrix, Tensor::zeros(2, 2));
}

TEST(BarsCsv, RoundTripAndGapRowsDropped) {
    const fs::path dir = scratch_dir("bars");
    MarketPanel p = panel_with_days(6);
    write_bars_csv(dir / "bars.csv", p);
    EXPECT_EQ(read_bars_csv(dir / "bars.csv").bars, p.bars);
    {
        std::ofstream f(dir / "gap.csv");
        f << "date,symbol,open,high,low,close,adj_close,volume\n"
          << "2020-01-01,A,1,1,1,1,1,10\n"
          << "2020-01-02,A,1,1,1,,1,10\n"
          << "2020-01-03,A,1,1,1,1,1,10\n";
    }
    MarketPanel g = read_bars_csv(dir / "gap.csv");
    ASSERT_EQ(g.num_stocks(), 1u);
    for (const auto& bar : g.bars[0]) EXPECT_TRUE(bar.has_value());
    EXPECT_EQ(g.num_days(), 2u);
}

TEST(News, BinaryRoundTrip) {
    const fs::path dir = scratch_dir("news");
    NewsTable t;
    t.dim = 3;
    t.add(parse_date("2020-01-02"), 1, {0.5, -0.25, 1.0});
    t.add(parse_date("2020-01-02"), 1, {0.0, 0.0, 2.0});
    t.add(parse_date("2020-01-03"), 0, {1.0, 1.0, 1.0});
    write_news_binary(dir / "n.bin", t);
    NewsTable back = read_news_binary(dir / "n.bin", 2);
    EXPECT_EQ(back.dim, 3u);
    const DayNewsSet* s = back.find(parse_date("2020-01-02"), 1);
    ASSERT_NE(s, nullptr);
    ASSERT_EQ(s->embeddings.size(), 2u);
    EXPECT_EQ(s->embeddings[0], (std::vector<double>{0.5, -0.25, 1.0}));
    EXPECT_THROW(read_news_binary(dir / "n.bin", 1), DataError);
}

TEST(News, BadMagicIsRejected) {
    const fs::path dir = scratch_dir("news_bad");
    write_text_file(dir / "n.bin", "NOTMAGIC");
    EXPECT_THROW(read_news_binary(dir / "n.bin", 2), DataError);
}

TEST(News, JsonLinesAreEmbedded) {
    const fs::path dir = scratch_dir("news_jsonl");
    write_text_file(dir / "n.jsonl", "{\"date\": \"2020-01-02\", \"symbol\": \"B\", \"texts\": [\"rates up\", \"\"]}\n");
    NewsTable t = read_news(dir / "n.jsonl", {"A", "B"}, 16);
    const DayNewsSet* s = t.find(parse_date("2020-01-02"), 1);
    ASSERT_NE(s, nullptr);
    ASSERT_EQ(s->embeddings.size(), 2u);
    EXPECT_EQ(s->embeddings[0], HashingEmbedder(16).embed("rates up"));
    write_text_file(dir / "bad.jsonl", "{\"date\": \"2020-01-02\", \"symbol\": \"Q\", \"texts\": [\"x\"]}\n");
    EXPECT_THROW(read_news(dir / "bad.jsonl", {"A", "B"}, 16), DataError);
}

TEST(Embedder, UnitNormDeterministicAndEmptyIsZero) {
    HashingEmbedder e(32);
    auto v = e.embed("Fed raises rates; banks rally");
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    EXPECT_NEAR(n2, 1.0, 1e-12);
    EXPECT_EQ(v, e.embed("fed RAISES rates banks rally"));
    for (double x : e.embed("  ,;  ")) EXPECT_EQ(x, 0.0);
}

TEST(Synthetic, SameSeedSameBytes) {
    SyntheticSpec spec;
    spec.num_days = 60;
    spec.seed = 11;
    const fs::path a = scratch_dir("syn_a"), b = scratch_dir("syn_b");
    write_synthetic(generate_synthetic(spec), a);
    write_synthetic(generate_synthetic(spec), b);
    for (const char* f : {"bars.csv", "news.bin", "relations.csv", "regimes.csv", "sectors.csv"})
        EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
}

TEST(Synthetic, EveryStockInOneSectorAndRelationsAreCoMembership) {
    SyntheticSpec spec;
    spec.num_days = 30;
    auto m = generate_synthetic(spec);
    ASSERT_EQ(m.truth.sector_of.size(), spec.num_stocks);
    for (std::size_t i = 0; i < spec.num_stocks; ++i) {
        EXPECT_LT(m.truth.sector_of[i], spec.num_sectors);
        for (std::size_t j = 0; j < spec.num_stocks; ++j) {
            const double want = i != j && m.truth.sector_of[i] == m.truth.sector_of[j] ? 1.0 : 0.0;
            EXPECT_EQ(m.relations.matrix(i, j), want);
        }
    }
}

TEST(Synthetic, NewsRevealsNextDayReturnSignWithoutNoise) {
    SyntheticSpec spec;
    spec.num_days = 80;
    spec.news_snr = 1e6;
    spec.no_news_prob = 0.0;
    auto m = generate_synthetic(spec);
    std::size_t checked = 0;
    for (std::size_t t = 0; t + 1 < spec.num_days; ++t)
        for (std::uint32_t i = 0; i < spec.num_stocks; ++i) {
            const DayNewsSet* s = m.news.find(m.panel.dates[t], i);
            ASSERT_NE(s, nullptr);
            double proj = 0.0;
            for (std::size_t l = 0; l < spec.embedding_dim; ++l) proj += s->embeddings[0][l] * m.unit_direction[l];
            const double r = *m.panel.return_at(i, t + 1);
            if (r == 0.0) continue;
            EXPECT_EQ(proj > 0.0, r > 0.0);
            ++checked;
        }
    EXPECT_GT(checked, 500u);
}

TEST(Synthetic, WithinSectorCorrelationExceedsCrossSector) {
    SyntheticSpec spec;
    spec.num_days = 600;
    spec.seed = 3;
    auto m = generate_synthetic(spec);
    double within = 0.0, cross = 0.0;
    std::size_t nw = 0, nc = 0;
    for (std::size_t i = 0; i < spec.num_stocks; ++i)
        for (std::size_t j = i + 1; j < spec.num_stocks; ++j) {
            std::vector<double> a, b;
            for (std::size_t t = 1; t < spec.num_days; ++t) {
                a.push_back(*m.panel.return_at(i, t));
                b.push_back(*m.panel.return_at(j, t));
            }
            const double rho = *pearson(a, b);
            if (m.truth.sector_of[i] == m.truth.sector_of[j]) {
                within += rho;
                ++nw;
            } else {
                cross += rho;
                ++nc;
            }
        }
    EXPECT_GT(within / static_cast<double>(nw), cross / static_cast<double>(nc) + 0.3);
}

TEST(Synthetic, GroundTruthFilesRoundTrip) {
    SyntheticSpec spec;
    spec.num_days = 40;
    auto m = generate_synthetic(spec);
    const fs::path dir = scratch_dir("syn_truth");
    write_synthetic(m, dir);
    GroundTruth g = read_ground_truth(dir / "regimes.csv", dir / "sectors.csv");
    EXPECT_EQ(g.regime_signs, m.truth.regime_signs);
    EXPECT_EQ(g.sector_of, m.truth.sector_of);
    EXPECT_EQ(g.planted_correlation(5, 0, 0), 1);
}

TEST(Synthetic, InvalidProbabilityRejected) {
    SyntheticSpec spec;
    spec.regime_switch_prob = 1.5;
    EXPECT_THROW(generate_synthetic(spec), DataError);
}
