#include "drfn/config.hpp"

#include "drfn/errors.hpp"

#include <nlohmann/json.hpp>

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

namespace drfn {

using nlohmann::json;

void RunConfig::set_variant(const VariantSpec& v) {
    relation_mode = v.relation;
    alignment = v.alignment;
    residual = v.residual;
}

ModelConfig RunConfig::model_config(std::size_t z) const {
    ModelConfig m;
    m.num_stocks = z;
    m.window = window;
    m.max_news = max_news;
    m.news_dim = news_dim;
    m.market_dim = market_dim;
    m.fused_dim = fused_dim;
    m.state_dim = state_dim;
    m.head_dim = head_dim;
    m.num_heads = num_heads;
    m.temperature = temperature;
    m.lambda = lambda;
    m.per_stock_fusion = per_stock_fusion;
    m.per_head_relation = per_head_relation;
    m.variant = variant();
    return m;
}

void RunConfig::validate() const {
    if (bars.empty()) throw DataError("config: 'bars' path is required");
    if (news.empty()) throw DataError("config: 'news' path is required");
    if (relations.empty()) throw DataError("config: 'relations' path is required");
    if (!(lr > 0.0)) throw ContractError("config: lr must be positive");
    if (window < 1) throw ContractError("config: window must be at least 1");
    ModelConfig m = model_config(num_stocks == 0 ? 1 : num_stocks);
    m.validate();
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["bars"] = c.bars;
    j["news"] = c.news;
    j["relations"] = c.relations;
    j["regimes"] = c.regimes;
    j["sectors"] = c.sectors;
    j["num_stocks"] = c.num_stocks;
    j["window"] = c.window;
    j["max_news"] = c.max_news;
    j["news_dim"] = c.news_dim;
    j["market_dim"] = c.market_dim;
    j["fused_dim"] = c.fused_dim;
    j["state_dim"] = c.state_dim;
    j["head_dim"] = c.head_dim;
    j["num_heads"] = c.num_heads;
    j["temperature"] = c.temperature;
    j["lambda"] = c.lambda;
    j["lr"] = c.lr;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["relation_mode"] = to_string(c.relation_mode);
    j["alignment"] = c.alignment;
    j["residual"] = c.residual;
    j["per_stock_fusion"] = c.per_stock_fusion;
    j["per_head_relation"] = c.per_head_relation;
    j["output_dir"] = c.output_dir;
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config: top level must be an object");

    static const std::set<std::string> known{
        "bars",      "news",       "relations", "regimes",     "sectors",       "num_stocks",       "window",
        "max_news",  "news_dim",   "market_dim", "fused_dim",  "state_dim",     "head_dim",         "num_heads",
        "temperature", "lambda",   "lr",        "epochs",      "seed",          "relation_mode",    "alignment",
        "residual",  "per_stock_fusion", "per_head_relation", "output_dir"};
    std::vector<std::string> unknown;
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) unknown.push_back(key);
    if (!unknown.empty()) {
        std::string msg = "config: unknown key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw DataError(msg);
    }

    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const json::exception& e) {
            throw DataError(std::string("config: bad value for '") + key + "': " + e.what());
        }
    };
    auto get_size = [&](const char* key, std::size_t& field) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw DataError(std::string("config: '") + key + "' must be a nonnegative integer");
        }
        field = v.get<std::size_t>();
    };
    get("bars", c.bars);
    get("news", c.news);
    get("relations", c.relations);
    get("regimes", c.regimes);
    get("sectors", c.sectors);
    get_size("num_stocks", c.num_stocks);
    get_size("window", c.window);
    get_size("max_news", c.max_news);
    get_size("news_dim", c.news_dim);
    get_size("market_dim", c.market_dim);
    get_size("fused_dim", c.fused_dim);
    get_size("state_dim", c.state_dim);
    get_size("head_dim", c.head_dim);
    get_size("num_heads", c.num_heads);
    get("temperature", c.temperature);
    get("lambda", c.lambda);
    get("lr", c.lr);
    get_size("epochs", c.epochs);
    if (j.contains("seed")) {
        std::size_t s = 0;
        get_size("seed", s);
        c.seed = s;
    }
    if (j.contains("relation_mode")) {
        std::string mode;
        get("relation_mode", mode);
        try {
            c.relation_mode = relation_mode_from_string(mode);
        } catch (const ContractError& e) {
            throw DataError(std::string("config: ") + e.what());
        }
    }
    get("alignment", c.alignment);
    get("residual", c.residual);
    get("per_stock_fusion", c.per_stock_fusion);
    get("per_head_relation", c.per_head_relation);
    get("output_dir", c.output_dir);
    return c;
}

namespace {

std::string resolve(const std::string& p, const std::filesystem::path& base) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = config_from_json(ss.str());
    const auto base = std::filesystem::absolute(path).parent_path();
    for (auto* field : {&c.bars, &c.news, &c.relations, &c.regimes, &c.sectors, &c.output_dir}) {
        *field = resolve(*field, base);
    }
    return c;
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << config_to_json(config) << '\n';
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& config) { return fmt::format("{:016x}", fnv1a64(config_to_json(config))); }

namespace {

template <class F>
void for_each_spec_field(SyntheticSpec& s, F&& f) {
    f("num_stocks", s.num_stocks);
    f("num_sectors", s.num_sectors);
    f("num_days", s.num_days);
    f("regime_switch_prob", s.regime_switch_prob);
    f("factor_vol", s.factor_vol);
    f("idio_vol", s.idio_vol);
    f("news_snr", s.news_snr);
    f("embedding_dim", s.embedding_dim);
    f("max_news_per_day", s.max_news_per_day);
    f("no_news_prob", s.no_news_prob);
    f("beta_min", s.beta_min);
    f("beta_max", s.beta_max);
    f("start_date", s.start_date);
    f("seed", s.seed);
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("synthetic spec: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("synthetic spec: top level must be an object");
    SyntheticSpec spec;
    std::set<std::string> known;
    for_each_spec_field(spec, [&](const char* key, auto& field) {
        known.insert(key);
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const json::exception& e) {
            throw DataError(std::string("synthetic spec: bad value for '") + key + "': " + e.what());
        }
    });
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw DataError("synthetic spec: unknown key '" + key + "'");
    spec.validate();
    return spec;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
    json j;
    SyntheticSpec copy = spec;
    for_each_spec_field(copy, [&](const char* key, auto& field) { j[key] = field; });
    return j.dump(2);
}

}  // namespace drfn
