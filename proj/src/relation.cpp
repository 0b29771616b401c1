#include "drfn/relation.hpp"

#include "drfn/errors.hpp"

#include <cmath>

namespace drfn {

std::string to_string(RelationMode mode) {
    switch (mode) {
        case RelationMode::Full: return "full";
        case RelationMode::StaticOnly: return "static";
        case RelationMode::RelativeStaticOnly: return "relative-static";
        case RelationMode::DynamicOnly: return "dynamic";
        case RelationMode::None: return "none";
    }
    return "unknown";
}

RelationMode relation_mode_from_string(const std::string& name) {
    for (auto m : {RelationMode::Full, RelationMode::StaticOnly, RelationMode::RelativeStaticOnly,
                   RelationMode::DynamicOnly, RelationMode::None}) {
        if (to_string(m) == name) return m;
    }
    throw ContractError("unknown relation mode '" + name + "' (expected full, static, relative-static, dynamic or none)");
}

namespace {

bool uses_dynamic(RelationMode m) {
    return m == RelationMode::Full || m == RelationMode::RelativeStaticOnly || m == RelationMode::DynamicOnly;
}
bool uses_static(RelationMode m) {
    return m == RelationMode::Full || m == RelationMode::RelativeStaticOnly || m == RelationMode::StaticOnly;
}
bool uses_recurrence(RelationMode m) { return m == RelationMode::Full || m == RelationMode::RelativeStaticOnly; }

}  // namespace

void init_relation_params(ParamStore& params, const RelationDims& d, RelationMode mode, bool per_head_scaling,
                          Rng& rng) {
    if (d.num_stocks == 0 || d.state_dim == 0 || d.head_dim == 0 || d.num_heads == 0) {
        throw ContractError("relation dimensions must be positive");
    }
    const std::size_t z = d.num_stocks;
    // Every draw happens regardless of mode so variants from one seed share W_TR.
    Tensor w_d = uniform_init({2 * z, z}, 2 * z, rng);
    Tensor w_drs = uniform_init({2 * z, z}, 2 * z, rng);
    if (uses_dynamic(mode)) params.add("relation.W_d", std::move(w_d));
    if (uses_static(mode)) params.add("relation.W_s", Tensor::filled(z, z, 1.0));
    if (uses_recurrence(mode)) params.add("relation.alpha", Tensor::zeros(1, 1));
    if (mode == RelationMode::Full) params.add("relation.W_DRS", std::move(w_drs));
    for (std::size_t b = 0; b < d.num_heads; ++b) {
        params.add("relation.W_TR." + std::to_string(b), uniform_init({d.state_dim, d.head_dim}, d.state_dim, rng));
    }
    if (per_head_scaling) {
        for (std::size_t b = 0; b < d.num_heads; ++b) {
            params.add("relation.R_scale." + std::to_string(b), Tensor::filled(z, z, 1.0));
        }
    }
}

ad::Var raw_attention(ad::Var v, int a) {
    if (a != 1 && a != -1) throw ContractError("raw_attention: mode must be +1 or -1");
    const double f = static_cast<double>(v.value().cols());
    ad::Var other = a == 1 ? v : ad::neg(v);
    return ad::scale(ad::matmul(v, ad::transpose(other)), 1.0 / std::sqrt(f));
}

ad::Var behavioral_distance(ad::Var v, int a) {
    if (a != 1 && a != -1) throw ContractError("behavioral_distance: mode must be +1 or -1");
    return ad::pairwise_l1(v, a == 1 ? v : ad::neg(v));
}

ad::Var modulated_attention(ad::Var attention, ad::Var distance) {
    return ad::mul(attention, ad::exp(ad::neg(distance)));
}

ad::Var cross_perspective_fuse(ad::Var mod_a, ad::Var mod_neg_a) {
    const double z = static_cast<double>(mod_a.value().rows());
    ad::Var w = ad::softmax_rows(ad::scale(ad::matmul(mod_a, ad::transpose(mod_neg_a)), 1.0 / std::sqrt(z)));
    return ad::matmul(w, mod_neg_a);
}

ad::Var dynamic_relation(ad::Var fused_pos, ad::Var fused_neg, ad::Var w_d) {
    const std::vector<ad::Var> parts{fused_pos, fused_neg};
    return ad::gelu(ad::matmul(ad::concat_cols(parts), w_d));
}

ad::Var dynamic_from_states(ad::Var v, ad::Var w_d) {
    ad::Var pos = modulated_attention(raw_attention(v, 1), behavioral_distance(v, 1));
    ad::Var neg = modulated_attention(raw_attention(v, -1), behavioral_distance(v, -1));
    return dynamic_relation(cross_perspective_fuse(pos, neg), cross_perspective_fuse(neg, pos), w_d);
}

ad::Var relative_static(ad::Var prev_dynamic, ad::Var static_term, ad::Var raw_alpha) {
    ad::Var alpha = ad::sigmoid(raw_alpha);
    // α·D + (1−α)·S = S + α·(D − S)
    return ad::add(static_term, ad::mul_scalar(ad::sub(prev_dynamic, static_term), alpha));
}

ad::Var scaled_attention(ad::Var q, ad::Var k, ad::Var v) {
    const double dk = static_cast<double>(q.value().cols());
    ad::Var w = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(dk)));
    return ad::matmul(w, v);
}

ad::Var bidirectional_fuse(ad::Var relative, ad::Var dynamic, ad::Var w_drs) {
    const std::vector<ad::Var> parts{scaled_attention(relative, dynamic, dynamic),
                                     scaled_attention(dynamic, relative, relative)};
    return ad::gelu(ad::matmul(ad::concat_cols(parts), w_drs));
}

ad::Var relational_temporal_fuse(ad::Var relation, ad::Var v, std::span<const ad::Var> w_tr,
                                 std::span<const ad::Var> head_scales) {
    if (w_tr.empty()) throw ContractError("relational_temporal_fuse: need at least one head");
    if (!head_scales.empty() && head_scales.size() != w_tr.size()) {
        throw ContractError("relational_temporal_fuse: one scale per head required");
    }
    std::vector<ad::Var> heads;
    heads.reserve(w_tr.size());
    for (std::size_t b = 0; b < w_tr.size(); ++b) {
        ad::Var r = head_scales.empty() ? relation : ad::mul(relation, head_scales[b]);
        heads.push_back(ad::tanh(ad::matmul(r, ad::matmul(v, w_tr[b]))));
    }
    return heads.size() == 1 ? heads.front() : ad::concat_cols(heads);
}

RelationTrace run_relation_module(ad::Tape& tape, ParamStore& params, std::span<const ad::Var> states,
                                  const Tensor& s_pre, const RelationOptions& options) {
    if (states.empty()) throw ContractError("run_relation_module: empty window");
    const std::size_t z = states.front().value().rows();
    if (s_pre.rank() != 2 || s_pre.rows() != z || s_pre.cols() != z) {
        throw DimensionError("run_relation_module: S_pre " + shape_string(s_pre.shape()) + " for " +
                             std::to_string(z) + " stocks");
    }
    const RelationMode mode = options.mode;
    const std::size_t steps = states.size();
    RelationTrace trace;
    trace.dynamic.resize(steps);
    trace.relative.resize(steps);
    trace.fused.resize(steps);

    ad::Var static_term;
    if (uses_static(mode)) static_term = ad::mul(tape.param(params.get("relation.W_s")), tape.constant(s_pre));
    ad::Var w_d = uses_dynamic(mode) ? tape.param(params.get("relation.W_d")) : ad::Var{};
    ad::Var raw_alpha = uses_recurrence(mode) ? tape.param(params.get("relation.alpha")) : ad::Var{};
    ad::Var w_drs = mode == RelationMode::Full ? tape.param(params.get("relation.W_DRS")) : ad::Var{};
    ad::Var identity = mode == RelationMode::None ? tape.constant(Tensor::identity(z)) : ad::Var{};

    for (std::size_t th = 0; th < steps; ++th) {
        const ad::Var v = states[th];
        // The relative-static variant only consumes D^{θ−1}, so the last step's is skipped.
        const bool need_dynamic = mode == RelationMode::Full || mode == RelationMode::DynamicOnly ||
                                  (mode == RelationMode::RelativeStaticOnly && th + 1 < steps);
        if (need_dynamic) trace.dynamic[th] = dynamic_from_states(v, w_d);
        if (uses_recurrence(mode)) {
            trace.relative[th] = th == 0 ? static_term : relative_static(trace.dynamic[th - 1], static_term, raw_alpha);
        }
        switch (mode) {
            case RelationMode::Full:
                trace.fused[th] = bidirectional_fuse(trace.relative[th], trace.dynamic[th], w_drs);
                break;
            case RelationMode::StaticOnly: trace.fused[th] = static_term; break;
            case RelationMode::RelativeStaticOnly: trace.fused[th] = trace.relative[th]; break;
            case RelationMode::DynamicOnly: trace.fused[th] = trace.dynamic[th]; break;
            case RelationMode::None: trace.fused[th] = identity; break;
        }
    }

    std::vector<ad::Var> w_tr, scales;
    for (std::size_t b = 0; params.contains("relation.W_TR." + std::to_string(b)); ++b) {
        w_tr.push_back(tape.param(params.get("relation.W_TR." + std::to_string(b))));
        if (options.per_head_scaling) scales.push_back(tape.param(params.get("relation.R_scale." + std::to_string(b))));
    }
    trace.output = relational_temporal_fuse(trace.fused.back(), states.back(), w_tr, scales);
    return trace;
}

}  // namespace drfn
