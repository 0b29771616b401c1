#pragma once

#include "drfn/params.hpp"

#include <cstdint>
#include <vector>

namespace drfn {

struct AdamConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment buffers line up one-to-one with the ParamStore they were created for.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    AdamState() = default;
    AdamState(const ParamStore& params, AdamConfig cfg);
};

/// One bias-corrected Adam update over every trainable parameter using its
/// accumulated grad. Throws NumericError naming the first parameter whose
/// gradient is not finite; in that case no parameter is modified.
void adam_step(AdamState& state, ParamStore& params);

}  // namespace drfn
