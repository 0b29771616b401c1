#include "drfn/encoders.hpp"

#include "drfn/errors.hpp"

#include <algorithm>

namespace drfn {

std::optional<std::vector<double>> aggregate_daily_news(std::span<const std::vector<double>> items,
                                                        std::size_t max_items, std::size_t dim) {
    const std::size_t skip = items.size() > max_items ? items.size() - max_items : 0;
    std::vector<double> mean(dim, 0.0);
    std::size_t used = 0;
    for (std::size_t k = skip; k < items.size(); ++k) {
        const auto& e = items[k];
        if (e.size() != dim) {
            throw DimensionError("aggregate_daily_news: embedding length " + std::to_string(e.size()) +
                                 ", expected " + std::to_string(dim));
        }
        if (std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; })) continue;
        for (std::size_t l = 0; l < dim; ++l) mean[l] += e[l];
        ++used;
    }
    if (used == 0) return std::nullopt;
    for (auto& v : mean) v /= static_cast<double>(used);
    return mean;
}

GruCell::GruCell(std::string prefix, std::size_t input_dim, std::size_t hidden_dim)
    : prefix_(std::move(prefix)), input_dim_(input_dim), hidden_dim_(hidden_dim) {
    if (input_dim == 0 || hidden_dim == 0) throw ContractError("GruCell " + prefix_ + ": dimensions must be positive");
}

void GruCell::init(ParamStore& params, Rng& rng) const {
    for (const char* gate : {"z", "r", "h"}) {
        params.add(name((std::string("W_") + gate).c_str()), uniform_init({input_dim_, hidden_dim_}, input_dim_, rng));
        params.add(name((std::string("U_") + gate).c_str()), uniform_init({hidden_dim_, hidden_dim_}, hidden_dim_, rng));
        params.add(name((std::string("b_") + gate).c_str()), Tensor::zeros(1, hidden_dim_));
    }
}

std::vector<std::string> GruCell::parameter_names() const {
    std::vector<std::string> out;
    for (const char* gate : {"z", "r", "h"})
        for (const char* kind : {"W_", "U_", "b_"}) out.push_back(name((std::string(kind) + gate).c_str()));
    return out;
}

ad::Var GruCell::step(ad::Tape& tape, ParamStore& params, ad::Var x, ad::Var h) const {
    const Tensor& xv = x.value();
    const Tensor& hv = h.value();
    if (xv.rank() != 2 || xv.cols() != input_dim_ || hv.rank() != 2 || hv.cols() != hidden_dim_ ||
        xv.rows() != hv.rows()) {
        throw DimensionError("GruCell " + prefix_ + ": input " + shape_string(xv.shape()) + " / state " +
                             shape_string(hv.shape()) + " incompatible with in=" + std::to_string(input_dim_) +
                             ", hidden=" + std::to_string(hidden_dim_));
    }
    auto p = [&](const char* n) { return tape.param(params.get(name(n))); };
    using namespace ad;
    Var z = sigmoid(add_row(add(matmul(x, p("W_z")), matmul(h, p("U_z"))), p("b_z")));
    Var r = sigmoid(add_row(add(matmul(x, p("W_r")), matmul(h, p("U_r"))), p("b_r")));
    Var cand = ad::tanh(add_row(add(matmul(x, p("W_h")), matmul(mul(r, h), p("U_h"))), p("b_h")));
    // (1 − z) ⊙ h + z ⊙ h̃ = h + z ⊙ (h̃ − h)
    return add(h, mul(z, sub(cand, h)));
}

std::vector<ad::Var> GruCell::unroll(ad::Tape& tape, ParamStore& params, std::span<const ad::Var> inputs) const {
    std::vector<ad::Var> states;
    if (inputs.empty()) return states;
    ad::Var h = tape.constant(Tensor::zeros(inputs.front().value().rows(), hidden_dim_));
    states.reserve(inputs.size());
    for (const auto& x : inputs) {
        h = step(tape, params, x, h);
        states.push_back(h);
    }
    return states;
}

}  // namespace drfn
