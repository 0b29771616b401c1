#pragma once

#include "drfn/autodiff.hpp"
#include "drfn/params.hpp"
#include "drfn/tensor.hpp"

#include <random>
#include <vector>

namespace drfn::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.data()) v = u(rng);
    return t;
}

/// Σ out ⊙ w for a fixed random w, so every output entry carries a distinct weight.
inline ad::Var weighted_sum(ad::Tape& tape, ad::Var out, std::uint64_t seed = 99) {
    Rng rng(seed);
    Tensor w = random_tensor(out.value().shape(), rng);
    return ad::sum(ad::mul(out, tape.constant(std::move(w))));
}

}  // namespace drfn::testing
