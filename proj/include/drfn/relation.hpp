#pragma once

#include "drfn/autodiff.hpp"
#include "drfn/params.hpp"

#include <span>
#include <string>
#include <vector>

namespace drfn {

/// Which relation matrix feeds the relational-temporal fusion.
enum class RelationMode {
    Full,                // bidirectional fusion of dynamic and relative-static relations
    StaticOnly,          // W_s ⊙ S_pre
    RelativeStaticOnly,  // the relative-static recurrence alone
    DynamicOnly,         // the dynamic relation alone
    None,                // identity: no inter-stock mixing (GRU-only baseline)
};

std::string to_string(RelationMode mode);
RelationMode relation_mode_from_string(const std::string& name);

struct RelationDims {
    std::size_t num_stocks = 0;    // Z
    std::size_t state_dim = 0;     // F
    std::size_t head_dim = 0;      // F'
    std::size_t num_heads = 0;     // B
};

/// Registers exactly the tensors `mode` uses:
///   relation.W_d (2Z×Z), relation.W_s (Z×Z, ones), relation.alpha (1×1, raw 0),
///   relation.W_DRS (2Z×Z), relation.W_TR.<b> (F×F'), relation.R_scale.<b> (Z×Z, ones,
///   only with per-head scaling).
void init_relation_params(ParamStore& params, const RelationDims& dims, RelationMode mode, bool per_head_scaling,
                          Rng& rng);

// Individual stages. V is Z×F, everything else Z×Z unless stated.
ad::Var raw_attention(ad::Var v, int a);
ad::Var behavioral_distance(ad::Var v, int a);
ad::Var modulated_attention(ad::Var attention, ad::Var distance);
ad::Var cross_perspective_fuse(ad::Var mod_a, ad::Var mod_neg_a);
/// GELU([F⁺ ∥ F⁻]·W_d)
ad::Var dynamic_relation(ad::Var fused_pos, ad::Var fused_neg, ad::Var w_d);
/// Runs raw_attention through dynamic_relation on one day's states.
ad::Var dynamic_from_states(ad::Var v, ad::Var w_d);
/// α·D^{θ−1} + (1−α)·static_term with α = sigmoid(raw_alpha). `static_term` is W_s ⊙ S_pre.
ad::Var relative_static(ad::Var prev_dynamic, ad::Var static_term, ad::Var raw_alpha);
/// softmax_rows(QKᵀ/√d_k)·V with d_k the column count of Q.
ad::Var scaled_attention(ad::Var q, ad::Var k, ad::Var v);
/// GELU([Attn(S, D, D) ∥ Attn(D, S, S)]·W_DRS)
ad::Var bidirectional_fuse(ad::Var relative, ad::Var dynamic, ad::Var w_drs);
/// Column concatenation over heads of tanh(R_b·(V·W_TR[b])), R_b = R or R ⊙ scale[b].
ad::Var relational_temporal_fuse(ad::Var relation, ad::Var v, std::span<const ad::Var> w_tr,
                                 std::span<const ad::Var> head_scales = {});

struct RelationOptions {
    RelationMode mode = RelationMode::Full;
    bool per_head_scaling = false;
};

/// Per-step relation matrices of one window. Entries a stage does not produce in
/// the chosen mode are left invalid.
struct RelationTrace {
    std::vector<ad::Var> dynamic;    // D_dynamic^θ
    std::vector<ad::Var> relative;   // S_relative^θ
    std::vector<ad::Var> fused;      // R^θ fed downstream
    ad::Var output;                  // S^t, Z×(B·F')
};

/// Iterates θ over the window's states, then fuses R^t with V^t.
RelationTrace run_relation_module(ad::Tape& tape, ParamStore& params, std::span<const ad::Var> states,
                                  const Tensor& s_pre, const RelationOptions& options);

}  // namespace drfn
