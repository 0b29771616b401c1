#pragma once

#include "drfn/autodiff.hpp"
#include "drfn/encoders.hpp"
#include "drfn/features.hpp"
#include "drfn/fusion.hpp"
#include "drfn/params.hpp"
#include "drfn/relation.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace drfn {

struct VariantSpec {
    RelationMode relation = RelationMode::Full;
    bool alignment = true;
    bool residual = true;

    bool operator==(const VariantSpec&) const = default;
};

/// The six ablation rows in table order: static, relative-static, dynamic,
/// no-alignment, no-residual, full.
struct NamedVariant {
    std::string name;
    VariantSpec spec;
};
std::vector<NamedVariant> ablation_variants();

struct ModelConfig {
    std::size_t num_stocks = 0;   // Z
    std::size_t window = 5;       // T
    std::size_t max_news = 30;    // Q
    std::size_t news_dim = 768;   // L
    std::size_t market_dim = 64;  // L'
    std::size_t fused_dim = 128;  // K
    std::size_t state_dim = 128;  // F
    std::size_t head_dim = 256;   // F'
    std::size_t num_heads = 6;    // B
    double temperature = 0.1;
    double lambda = 1.0;
    bool per_stock_fusion = false;
    bool per_head_relation = false;
    VariantSpec variant;

    void validate() const;
    /// λ actually applied: zero when the variant disables alignment.
    double effective_lambda() const { return variant.alignment ? lambda : 0.0; }
};

struct ForwardResult {
    ad::Var predictions;  // Z×1
    ad::Var align;        // 1×1
    RelationTrace relation;
    std::vector<ad::Var> news_states;
    std::vector<ad::Var> market_states;
};

/// r̂_i = tanh(W_o·[s_i + α1_i(W_n h_n,i + b_n) + α2_i(W_m h_m,i + b_m)] + b_o), or
/// tanh(W_o·s_i + b_o) without the residual terms.
ad::Var predict_returns(ad::Tape& tape, ParamStore& params, ad::Var fused, ad::Var news_state, ad::Var market_state,
                        bool residual);

/// mean((r − r̂)²) + λ·align
ad::Var total_loss(ad::Var predictions, std::span<const double> targets, ad::Var align, double lambda);

class DrfnModel {
public:
    /// Each component draws its initial values from its own stream derived from
    /// `seed`, so variants built from one seed share every tensor they have in common.
    DrfnModel(ModelConfig config, Tensor s_pre, std::uint64_t seed);

    ForwardResult forward(ad::Tape& tape, const WindowInputs& inputs);
    ad::Var loss(const ForwardResult& result, std::span<const double> targets) const;
    /// Forward on a throwaway tape; returns the Z predictions.
    std::vector<double> predict(const WindowInputs& inputs);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return config_; }
    const Tensor& s_pre() const { return s_pre_; }
    std::size_t active_parameter_count() const { return params_.scalar_count(); }

private:
    ModelConfig config_;
    Tensor s_pre_;
    ParamStore params_;
    GruCell news_gru_, market_gru_, temporal_gru_;
};

DrfnModel build_variant(ModelConfig config, const VariantSpec& variant, Tensor s_pre, std::uint64_t seed);

/// Binary checkpoint: "DRFNCKPT", then per tensor u32 name length, name, u32 rank,
/// u32 dims, f64 data; little-endian throughout.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
/// Loads into an existing store. Names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParamStore& params);

}  // namespace drfn
