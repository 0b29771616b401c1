#pragma once

#include "drfn/autodiff.hpp"
#include "drfn/encoders.hpp"
#include "drfn/params.hpp"

#include <span>
#include <vector>

namespace drfn {

struct AlignmentConfig {
    double temperature = 0.1;
    double weight = 1.0;  // λ

    void validate() const;
};

/// InfoNCE over a similarity matrix whose diagonal holds the matched pairs:
/// mean_i [ logsumexp_j(sim_ij/τ) − sim_ii/τ ].
ad::Var infonce_from_similarity(ad::Var similarity, double temperature);

/// Cosine similarity between every news row and every market row. Zero rows give 0.
ad::Var cosine_similarity_matrix(ad::Var news, ad::Var market);

/// Alignment loss averaged over the window. Market states (Z×L') are mapped to the
/// news space through `projection` (L'×L) before the cosine.
ad::Var align_loss(std::span<const ad::Var> news_states, std::span<const ad::Var> market_states,
                   ad::Var projection, double temperature);

struct FusionDims {
    std::size_t news_dim = 0;    // L
    std::size_t market_dim = 0;  // L'
    std::size_t fused_dim = 0;   // K
};

/// Registers W (K×(L'+L)), T ({L, L', K}) and b (1×K) under "fusion.*", or one set
/// per stock under "fusion.<i>.*" when `per_stock` is set.
void init_fusion_params(ParamStore& params, const FusionDims& dims, std::size_t num_stocks, bool per_stock, Rng& rng);

/// x = tanh([h_m ∥ h_n]·Wᵀ + bilinear + b), one row per stock, where
/// bilinear_k = Σ_{p,q} T[p,q,k]·h_n[p]·h_m[q].
ad::Var bilinear_fuse(ad::Tape& tape, ParamStore& params, ad::Var market, ad::Var news, bool per_stock);

/// The third GRU, over fused K-dim inputs, hidden size F.
GruCell temporal_gru(std::size_t fused_dim, std::size_t hidden_dim);

}  // namespace drfn
