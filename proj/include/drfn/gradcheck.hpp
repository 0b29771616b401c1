#pragma once

#include "drfn/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace drfn {

/// Outcome of comparing reverse-mode gradients against central differences.
/// Per-entry relative error is |analytic − numeric| / max(|analytic| + |numeric|, floor).
struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst;  // "<input>[<flat index>]"
    std::size_t checked = 0;
};

double relative_error(double analytic, double numeric, double floor = 1e-6);

using ScalarFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

/// Checks d f / d inputs for a scalar-valued f built on the tape.
GradCheckResult check_gradients(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5);

/// Checks the gradient of a scalar loss with respect to every trainable entry of a
/// parameter store. `max_entries_per_param` > 0 subsamples large tensors with a
/// fixed stride so big models stay cheap to check.
GradCheckResult check_param_gradients(ParamStore& params, const std::function<ad::Var(ad::Tape&)>& loss,
                                      double h = 1e-5, std::size_t max_entries_per_param = 0);

}  // namespace drfn
