#include "drfn/model.hpp"

#include "drfn/binary_io.hpp"
#include "drfn/errors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

namespace drfn {

std::vector<NamedVariant> ablation_variants() {
    return {
        {"static", {RelationMode::StaticOnly, true, true}},
        {"relative-static", {RelationMode::RelativeStaticOnly, true, true}},
        {"dynamic", {RelationMode::DynamicOnly, true, true}},
        {"no-alignment", {RelationMode::Full, false, true}},
        {"no-residual", {RelationMode::Full, true, false}},
        {"full", {RelationMode::Full, true, true}},
    };
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ContractError(std::string("model config: ") + name + " must be positive");
    };
    positive(num_stocks, "Z");
    positive(window, "T");
    positive(max_news, "Q");
    positive(news_dim, "L");
    positive(market_dim, "L'");
    positive(fused_dim, "K");
    positive(state_dim, "F");
    positive(head_dim, "F'");
    positive(num_heads, "B");
    AlignmentConfig{temperature, lambda}.validate();
}

ad::Var predict_returns(ad::Tape& tape, ParamStore& params, ad::Var fused, ad::Var news_state, ad::Var market_state,
                        bool residual) {
    auto p = [&](const char* name) { return tape.param(params.get(name)); };
    ad::Var s = fused;
    if (residual) {
        ad::Var news_term = ad::add_row(ad::matmul(news_state, ad::transpose(p("head.W_n"))), p("head.b_n"));
        ad::Var market_term = ad::add_row(ad::matmul(market_state, ad::transpose(p("head.W_m"))), p("head.b_m"));
        s = ad::add(s, ad::add(ad::mul_rows(news_term, p("head.alpha1")), ad::mul_rows(market_term, p("head.alpha2"))));
    }
    return ad::tanh(ad::add_scalar(ad::matmul(s, ad::transpose(p("head.W_o"))), p("head.b_o")));
}

ad::Var total_loss(ad::Var predictions, std::span<const double> targets, ad::Var align, double lambda) {
    const Tensor& pv = predictions.value();
    if (pv.size() != targets.size()) {
        throw DimensionError("total_loss: " + std::to_string(pv.size()) + " predictions vs " +
                             std::to_string(targets.size()) + " targets");
    }
    if (!(lambda >= 0.0)) throw ContractError("total_loss: λ must be nonnegative");
    Tensor t(pv.shape(), std::vector<double>(targets.begin(), targets.end()));
    ad::Var mse = ad::mean(ad::square(ad::sub(predictions, predictions.tape().constant(std::move(t)))));
    if (lambda == 0.0) return mse;
    return ad::add(mse, ad::scale(align, lambda));
}

namespace {

enum Stream : std::uint64_t { kNewsGru = 1, kMarketGru, kAlign, kFusion, kTemporal, kRelation, kHead };

Rng stream_rng(std::uint64_t seed, Stream s) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s)};
    return Rng(seq);
}

template <class F>
auto staged(const char* stage, F&& f) {
    try {
        return f();
    } catch (const DimensionError& e) {
        throw DimensionError(std::string(stage) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string(stage) + ": " + e.what());
    }
}

}  // namespace

DrfnModel::DrfnModel(ModelConfig config, Tensor s_pre, std::uint64_t seed)
    : config_(std::move(config)), s_pre_(std::move(s_pre)) {
    config_.validate();
    const std::size_t z = config_.num_stocks;
    if (s_pre_.rank() != 2 || s_pre_.rows() != z || s_pre_.cols() != z) {
        throw DimensionError("static relations " + shape_string(s_pre_.shape()) + " do not match Z=" +
                             std::to_string(z));
    }
    news_gru_ = GruCell("news_gru", config_.news_dim, config_.news_dim);
    market_gru_ = GruCell("market_gru", kNumIndicators, config_.market_dim);
    temporal_gru_ = temporal_gru(config_.fused_dim, config_.state_dim);

    {
        Rng rng = stream_rng(seed, kNewsGru);
        news_gru_.init(params_, rng);
        params_.add("news.no_news", Tensor::zeros(1, config_.news_dim));
    }
    {
        Rng rng = stream_rng(seed, kMarketGru);
        market_gru_.init(params_, rng);
    }
    {
        Rng rng = stream_rng(seed, kAlign);
        params_.add("align.P", uniform_init({config_.market_dim, config_.news_dim}, config_.market_dim, rng));
    }
    {
        Rng rng = stream_rng(seed, kFusion);
        init_fusion_params(params_, {config_.news_dim, config_.market_dim, config_.fused_dim}, z,
                           config_.per_stock_fusion, rng);
    }
    {
        Rng rng = stream_rng(seed, kTemporal);
        temporal_gru_.init(params_, rng);
    }
    {
        Rng rng = stream_rng(seed, kRelation);
        init_relation_params(params_, {z, config_.state_dim, config_.head_dim, config_.num_heads},
                             config_.variant.relation, config_.per_head_relation, rng);
    }
    {
        Rng rng = stream_rng(seed, kHead);
        const std::size_t width = config_.num_heads * config_.head_dim;
        params_.add("head.W_o", uniform_init({1, width}, width, rng));
        params_.add("head.b_o", Tensor::zeros(1, 1));
        if (config_.variant.residual) {
            params_.add("head.W_n", uniform_init({width, config_.news_dim}, config_.news_dim, rng));
            params_.add("head.b_n", Tensor::zeros(1, width));
            params_.add("head.W_m", uniform_init({width, config_.market_dim}, config_.market_dim, rng));
            params_.add("head.b_m", Tensor::zeros(1, width));
            params_.add("head.alpha1", Tensor::filled(z, 1, 0.5));
            params_.add("head.alpha2", Tensor::filled(z, 1, 0.5));
        }
    }
}

ForwardResult DrfnModel::forward(ad::Tape& tape, const WindowInputs& in) {
    const std::size_t steps = in.steps();
    const std::size_t z = config_.num_stocks;
    if (steps == 0 || in.news.size() != steps || in.no_news.size() != steps) {
        throw DimensionError("forward: inconsistent window of " + std::to_string(steps) + " days");
    }
    for (std::size_t th = 0; th < steps; ++th) {
        if (in.market[th].rows() != z || in.news[th].rows() != z || in.no_news[th].size() != z) {
            throw DimensionError("forward: day " + std::to_string(th) + " does not cover all " + std::to_string(z) +
                                 " stocks");
        }
    }

    ForwardResult r;
    std::vector<ad::Var> news_in, market_in;
    ad::Var no_news = tape.param(params_.get("news.no_news"));
    for (std::size_t th = 0; th < steps; ++th) {
        market_in.push_back(tape.constant(in.market[th]));
        ad::Var raw = tape.constant(in.news[th]);
        const bool any_missing = std::find(in.no_news[th].begin(), in.no_news[th].end(), true) != in.no_news[th].end();
        news_in.push_back(any_missing ? ad::fill_rows(raw, in.no_news[th], no_news) : raw);
    }
    r.news_states = staged("news encoder", [&] { return news_gru_.unroll(tape, params_, news_in); });
    r.market_states = staged("market encoder", [&] { return market_gru_.unroll(tape, params_, market_in); });
    r.align = staged("alignment", [&] {
        return align_loss(r.news_states, r.market_states, tape.param(params_.get("align.P")), config_.temperature);
    });
    std::vector<ad::Var> fused;
    staged("bilinear fusion", [&] {
        for (std::size_t th = 0; th < steps; ++th) {
            fused.push_back(bilinear_fuse(tape, params_, r.market_states[th], r.news_states[th], config_.per_stock_fusion));
        }
        return 0;
    });
    auto states = staged("temporal encoder", [&] { return temporal_gru_.unroll(tape, params_, fused); });
    r.relation = staged("relation module", [&] {
        return run_relation_module(tape, params_, states, s_pre_,
                                   {config_.variant.relation, config_.per_head_relation});
    });
    r.predictions = staged("output head", [&] {
        return predict_returns(tape, params_, r.relation.output, r.news_states.back(), r.market_states.back(),
                               config_.variant.residual);
    });
    return r;
}

ad::Var DrfnModel::loss(const ForwardResult& result, std::span<const double> targets) const {
    return total_loss(result.predictions, targets, result.align, config_.effective_lambda());
}

std::vector<double> DrfnModel::predict(const WindowInputs& inputs) {
    ad::Tape tape;
    ForwardResult r = forward(tape, inputs);
    const auto d = r.predictions.value().data();
    return {d.begin(), d.end()};
}

DrfnModel build_variant(ModelConfig config, const VariantSpec& variant, Tensor s_pre, std::uint64_t seed) {
    config.variant = variant;
    return DrfnModel(std::move(config), std::move(s_pre), seed);
}

namespace {

constexpr char kCheckpointMagic[8] = {'D', 'R', 'F', 'N', 'C', 'K', 'P', 'T'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, 8);
    for (const auto& p : params.all()) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
        for (std::size_t d : p.value.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (double v : p.value.data()) put_le<double>(out, v);
    }
    if (!out) throw DataError("I/O error writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& params) {
    auto bytes = slurp(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
        throw DataError(path.string() + ": missing DRFNCKPT magic");
    }
    ByteReader r(std::move(bytes), path.string());
    r.read_string(8);
    std::map<std::string, Tensor> loaded;
    while (!r.at_end()) {
        const auto len = r.read<std::uint32_t>();
        std::string name = r.read_string(len);
        const auto rank = r.read<std::uint32_t>();
        Shape shape(rank);
        for (auto& d : shape) d = r.read<std::uint32_t>();
        Tensor t(shape);
        for (auto& v : t.data()) v = r.read<double>();
        if (!params.contains(name)) throw DataError(path.string() + ": unexpected tensor '" + name + "'");
        const Shape& want = params.get(name).value.shape();
        if (want != shape) {
            throw DataError(path.string() + ": tensor '" + name + "' has shape " + shape_string(shape) +
                            ", config expects " + shape_string(want));
        }
        if (!loaded.emplace(name, std::move(t)).second) throw DataError(path.string() + ": duplicate tensor '" + name + "'");
    }
    for (const auto& p : params.all()) {
        if (!loaded.count(p.name)) throw DataError(path.string() + ": missing tensor '" + p.name + "'");
    }
    for (auto& p : params.all()) p.value = std::move(loaded.at(p.name));
}

}  // namespace drfn
