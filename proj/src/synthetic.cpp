#include "drfn/synthetic.hpp"

#include "drfn/errors.hpp"
#include "drfn/params.hpp"
#include "drfn/text_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

namespace drfn {

void SyntheticSpec::validate() const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw DataError(std::string("synthetic spec: ") + name + " must lie in [0, 1]");
    };
    prob(regime_switch_prob, "regime_switch_prob");
    prob(no_news_prob, "no_news_prob");
    if (num_stocks == 0 || num_sectors == 0 || num_sectors > num_stocks) {
        throw DataError("synthetic spec: need 1 <= num_sectors <= num_stocks");
    }
    if (num_days < 2) throw DataError("synthetic spec: need at least 2 days");
    if (embedding_dim == 0) throw DataError("synthetic spec: embedding_dim must be positive");
    if (!(factor_vol >= 0.0) || !(idio_vol >= 0.0) || !(news_snr >= 0.0)) {
        throw DataError("synthetic spec: volatilities and news_snr must be nonnegative");
    }
    if (!(beta_min <= beta_max)) throw DataError("synthetic spec: beta_min > beta_max");
    parse_date(start_date);
}

int GroundTruth::planted_correlation(std::size_t day, std::size_t i, std::size_t j) const {
    return regime_signs[day][sector_of[i]] * regime_signs[day][sector_of[j]];
}

namespace {

std::vector<Date> business_days(Date start, std::size_t n) {
    using namespace std::chrono;
    std::vector<Date> out;
    out.reserve(n);
    for (Date d = start; out.size() < n; ++d) {
        const unsigned wd = weekday{sys_days{days{d}}}.c_encoding();
        if (wd != 0 && wd != 6) out.push_back(d);
    }
    return out;
}

std::string symbol_name(std::size_t i, std::size_t n) {
    const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
    std::string digits = std::to_string(i);
    return "S" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace

SyntheticMarket generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const std::size_t z = spec.num_stocks, n = spec.num_days, sectors = spec.num_sectors;
    SyntheticMarket m;

    for (std::size_t i = 0; i < z; ++i) m.panel.symbols.push_back(symbol_name(i, z));
    m.panel.dates = business_days(parse_date(spec.start_date), n);

    m.truth.symbols = m.panel.symbols;
    m.truth.dates = m.panel.dates;
    for (std::size_t i = 0; i < z; ++i) m.truth.sector_of.push_back(i * sectors / z);

    for (std::size_t i = 0; i < z; ++i) m.betas.push_back(spec.beta_min + (spec.beta_max - spec.beta_min) * unif(rng));

    m.unit_direction.resize(spec.embedding_dim);
    {
        double n2 = 0.0;
        for (auto& v : m.unit_direction) {
            v = normal(rng);
            n2 += v * v;
        }
        for (auto& v : m.unit_direction) v /= std::sqrt(n2);
    }

    // Regime path and returns.
    std::vector<int> sign(sectors);
    for (auto& s : sign) s = unif(rng) < 0.5 ? -1 : 1;
    std::vector<std::vector<double>> returns(n, std::vector<double>(z, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0)
            for (auto& s : sign)
                if (unif(rng) < spec.regime_switch_prob) s = -s;
        m.truth.regime_signs.push_back(sign);
        const double f = spec.factor_vol * normal(rng);
        for (std::size_t i = 0; i < z; ++i) {
            returns[t][i] = m.betas[i] * sign[m.truth.sector_of[i]] * f + spec.idio_vol * normal(rng);
        }
    }

    // Bars: closes compound the returns, other indicators are noisy decorations.
    m.panel.bars.assign(z, std::vector<std::optional<IndicatorVector>>(n));
    for (std::size_t i = 0; i < z; ++i) {
        double close = 100.0 * std::exp(0.7 * normal(rng));
        for (std::size_t t = 0; t < n; ++t) {
            const double prev = close;
            if (t > 0) close = prev * (1.0 + returns[t][i]);
            const double wiggle = std::max(spec.idio_vol, 1e-3);
            const double open = prev * (1.0 + 0.5 * wiggle * normal(rng));
            const double high = std::max(open, close) * (1.0 + std::abs(0.5 * wiggle * normal(rng)));
            const double low = std::min(open, close) * (1.0 - std::abs(0.5 * wiggle * normal(rng)));
            const double volume = std::round(1e6 * std::exp(0.3 * normal(rng)) * (1.0 + 20.0 * std::abs(returns[t][i])));
            m.panel.bars[i][t] = IndicatorVector{open, close, close, high, low, volume};
        }
    }

    // News.
    m.news.dim = spec.embedding_dim;
    const double noise_sd = 1.0 / std::sqrt(static_cast<double>(spec.embedding_dim));
    std::uniform_int_distribution<std::size_t> count_dist(1, std::max<std::size_t>(spec.max_news_per_day, 1));
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < z; ++i) {
            if (spec.max_news_per_day == 0 || unif(rng) < spec.no_news_prob) continue;
            const std::size_t k = count_dist(rng);
            const double next = t + 1 < n ? returns[t + 1][i] : 0.0;
            const double direction = next > 0.0 ? 1.0 : (next < 0.0 ? -1.0 : 0.0);
            for (std::size_t q = 0; q < k; ++q) {
                std::vector<double> e(spec.embedding_dim);
                for (std::size_t l = 0; l < e.size(); ++l) {
                    e[l] = spec.news_snr * direction * m.unit_direction[l] + noise_sd * normal(rng);
                }
                m.news.add(m.panel.dates[t], static_cast<std::uint32_t>(i), std::move(e));
            }
        }
    }

    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < z; ++i)
        for (std::size_t j = i + 1; j < z; ++j)
            if (m.truth.sector_of[i] == m.truth.sector_of[j]) edges.emplace_back(m.panel.symbols[i], m.panel.symbols[j]);
    m.relations = make_relations(m.panel.symbols, edges);
    return m;
}

void write_synthetic(const SyntheticMarket& market, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_bars_csv(dir / "bars.csv", market.panel);
    write_news_binary(dir / "news.bin", market.news);
    write_relations_csv(dir / "relations.csv", market.relations);

    std::ofstream regimes(dir / "regimes.csv", std::ios::binary);
    if (!regimes) throw DataError("cannot write " + (dir / "regimes.csv").string());
    const std::size_t sectors = market.truth.regime_signs.empty() ? 0 : market.truth.regime_signs.front().size();
    regimes << "date";
    for (std::size_t s = 0; s < sectors; ++s) regimes << ",sector_" << s;
    regimes << '\n';
    for (std::size_t t = 0; t < market.truth.dates.size(); ++t) {
        regimes << format_date(market.truth.dates[t]);
        for (int v : market.truth.regime_signs[t]) regimes << ',' << v;
        regimes << '\n';
    }

    std::ofstream sec(dir / "sectors.csv", std::ios::binary);
    if (!sec) throw DataError("cannot write " + (dir / "sectors.csv").string());
    sec << "symbol,sector\n";
    for (std::size_t i = 0; i < market.truth.symbols.size(); ++i)
        sec << market.truth.symbols[i] << ',' << market.truth.sector_of[i] << '\n';
}

GroundTruth read_ground_truth(const std::filesystem::path& regimes_csv, const std::filesystem::path& sectors_csv) {
    GroundTruth gt;
    std::ifstream sec(sectors_csv);
    if (!sec) throw DataError("cannot open " + sectors_csv.string());
    std::string line;
    std::getline(sec, line);
    std::map<std::string, std::size_t> sector_by_symbol;
    while (std::getline(sec, line)) {
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto f = split(row, ',');
        unsigned s = 0;
        if (f.size() != 2 || !parse_unsigned(trim(f[1]), s)) throw DataError(sectors_csv.string() + ": bad row");
        sector_by_symbol[std::string(trim(f[0]))] = s;
    }
    for (const auto& [sym, s] : sector_by_symbol) {
        gt.symbols.push_back(sym);
        gt.sector_of.push_back(s);
    }

    std::ifstream reg(regimes_csv);
    if (!reg) throw DataError("cannot open " + regimes_csv.string());
    std::getline(reg, line);
    while (std::getline(reg, line)) {
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto f = split(row, ',');
        gt.dates.push_back(parse_date(trim(f[0])));
        std::vector<int> signs;
        for (std::size_t k = 1; k < f.size(); ++k) {
            int v = 0;
            if (!parse_int(trim(f[k]), v) || (v != 1 && v != -1)) throw DataError(regimes_csv.string() + ": bad sign");
            signs.push_back(v);
        }
        gt.regime_signs.push_back(std::move(signs));
    }
    return gt;
}

}  // namespace drfn
