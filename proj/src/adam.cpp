#include "drfn/adam.hpp"

#include "drfn/errors.hpp"

#include <cmath>

namespace drfn {

AdamState::AdamState(const ParamStore& params, AdamConfig cfg) : config(cfg) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params.all()) {
        m.emplace_back(p.value.shape());
        v.emplace_back(p.value.shape());
    }
}

void adam_step(AdamState& state, ParamStore& params) {
    if (state.m.size() != params.size()) {
        throw DimensionError("adam_step: optimizer state covers " + std::to_string(state.m.size()) +
                             " parameters, store has " + std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Parameter& p = params.all()[k];
        if (p.grad.shape() != state.m[k].shape()) {
            throw DimensionError("adam_step: moment shape " + shape_string(state.m[k].shape()) +
                                 " does not match parameter " + p.name + " " + shape_string(p.grad.shape()));
        }
        if (p.trainable && !p.grad.all_finite()) throw NumericError("non-finite gradient in parameter " + p.name);
    }

    ++state.step;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params.all()[k];
        if (!p.trainable) continue;
        auto w = p.value.data();
        const auto g = p.grad.data();
        auto m = state.m[k].data();
        auto v = state.v[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

}  // namespace drfn
