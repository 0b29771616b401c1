#include "drfn/fusion.hpp"

#include "drfn/errors.hpp"

#include <cmath>
#include <string>

namespace drfn {

void AlignmentConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ContractError("alignment temperature must be positive, got " + std::to_string(temperature));
    }
    if (!(weight >= 0.0)) throw ContractError("alignment weight must be nonnegative");
}

ad::Var infonce_from_similarity(ad::Var similarity, double temperature) {
    const Tensor& s = similarity.value();
    require_rank2(s, "infonce_from_similarity");
    if (s.rows() != s.cols()) throw DimensionError("infonce_from_similarity: need a square matrix, got " + shape_string(s.shape()));
    if (!(temperature > 0.0)) throw ContractError("infonce_from_similarity: temperature must be positive");
    ad::Var logits = ad::scale(similarity, 1.0 / temperature);
    return ad::mean(ad::sub(ad::logsumexp_rows(logits), ad::diag(logits)));
}

ad::Var cosine_similarity_matrix(ad::Var news, ad::Var market) {
    return ad::matmul(ad::normalize_rows(news), ad::transpose(ad::normalize_rows(market)));
}

ad::Var align_loss(std::span<const ad::Var> news_states, std::span<const ad::Var> market_states,
                   ad::Var projection, double temperature) {
    if (news_states.size() != market_states.size() || news_states.empty()) {
        throw DimensionError("align_loss: " + std::to_string(news_states.size()) + " news steps vs " +
                             std::to_string(market_states.size()) + " market steps");
    }
    ad::Var total;
    for (std::size_t th = 0; th < news_states.size(); ++th) {
        const Tensor& n = news_states[th].value();
        const Tensor& m = market_states[th].value();
        if (n.rows() != m.rows()) {
            throw DimensionError("align_loss: news " + shape_string(n.shape()) + " vs market " + shape_string(m.shape()));
        }
        ad::Var sim = cosine_similarity_matrix(news_states[th], ad::matmul(market_states[th], projection));
        ad::Var term = infonce_from_similarity(sim, temperature);
        total = total.valid() ? ad::add(total, term) : term;
    }
    return ad::scale(total, 1.0 / static_cast<double>(news_states.size()));
}

namespace {

std::string fusion_name(bool per_stock, std::size_t stock, const char* what) {
    return per_stock ? "fusion." + std::to_string(stock) + "." + what : std::string("fusion.") + what;
}

}  // namespace

void init_fusion_params(ParamStore& params, const FusionDims& d, std::size_t num_stocks, bool per_stock, Rng& rng) {
    if (d.news_dim == 0 || d.market_dim == 0 || d.fused_dim == 0) throw ContractError("fusion dimensions must be positive");
    const std::size_t sets = per_stock ? num_stocks : 1;
    for (std::size_t i = 0; i < sets; ++i) {
        params.add(fusion_name(per_stock, i, "W"),
                   uniform_init({d.fused_dim, d.market_dim + d.news_dim}, d.market_dim + d.news_dim, rng));
        params.add(fusion_name(per_stock, i, "T"),
                   uniform_init({d.news_dim, d.market_dim, d.fused_dim}, d.news_dim * d.market_dim, rng));
        params.add(fusion_name(per_stock, i, "b"), Tensor::zeros(1, d.fused_dim));
    }
}

ad::Var bilinear_fuse(ad::Tape& tape, ParamStore& params, ad::Var market, ad::Var news, bool per_stock) {
    auto fuse = [&](ad::Var m, ad::Var n, std::size_t stock) {
        ad::Var w = tape.param(params.get(fusion_name(per_stock, stock, "W")));
        ad::Var t3 = tape.param(params.get(fusion_name(per_stock, stock, "T")));
        ad::Var b = tape.param(params.get(fusion_name(per_stock, stock, "b")));
        const std::vector<ad::Var> parts{m, n};
        ad::Var linear = ad::matmul(ad::concat_cols(parts), ad::transpose(w));
        return ad::tanh(ad::add_row(ad::add(linear, ad::bilinear(n, m, t3)), b));
    };
    if (market.value().rank() != 2 || news.value().rank() != 2 || market.value().rows() != news.value().rows()) {
        throw DimensionError("bilinear_fuse: market " + shape_string(market.value().shape()) + " vs news " +
                             shape_string(news.value().shape()));
    }
    if (!per_stock) return fuse(market, news, 0);
    std::vector<ad::Var> rows;
    for (std::size_t i = 0; i < market.value().rows(); ++i) {
        rows.push_back(fuse(ad::slice_rows(market, i, 1), ad::slice_rows(news, i, 1), i));
    }
    return ad::concat_rows(rows);
}

GruCell temporal_gru(std::size_t fused_dim, std::size_t hidden_dim) { return GruCell("temporal", fused_dim, hidden_dim); }

}  // namespace drfn
