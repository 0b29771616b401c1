#pragma once

#include "drfn/model.hpp"
#include "drfn/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace drfn {

/// Everything a run needs. Serialised as flat JSON; unknown keys are rejected.
/// Relative paths are resolved against the directory of the file they came from.
struct RunConfig {
    std::string bars;
    std::string news;
    std::string relations;
    std::string regimes;  // optional ground truth (synthetic data)
    std::string sectors;  // optional ground truth (synthetic data)

    std::size_t num_stocks = 0;  // 0: take Z from the bars file
    std::size_t window = 5;
    std::size_t max_news = 30;
    std::size_t news_dim = 768;
    std::size_t market_dim = 64;
    std::size_t fused_dim = 128;
    std::size_t state_dim = 128;
    std::size_t head_dim = 256;
    std::size_t num_heads = 6;
    double temperature = 0.1;
    double lambda = 1.0;
    double lr = 2e-3;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;

    RelationMode relation_mode = RelationMode::Full;
    bool alignment = true;
    bool residual = true;
    bool per_stock_fusion = false;
    bool per_head_relation = false;

    std::string output_dir = "run";

    VariantSpec variant() const { return {relation_mode, alignment, residual}; }
    void set_variant(const VariantSpec& v);
    /// Model shape for a universe of `z` stocks.
    ModelConfig model_config(std::size_t z) const;
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& config);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

/// Synthetic-market spec as flat JSON with the SyntheticSpec field names; unknown
/// keys are rejected and missing keys keep their defaults.
SyntheticSpec synthetic_spec_from_json(const std::string& text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

}  // namespace drfn
