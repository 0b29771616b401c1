#include "drfn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace drfn {

double relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

namespace {

void record(GradCheckResult& r, double analytic, double numeric, const std::string& where) {
    const double rel = relative_error(analytic, numeric);
    r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic - numeric));
    if (rel > r.max_rel_error || r.checked == 0) {
        r.max_rel_error = rel;
        r.worst = where;
    }
    ++r.checked;
}

double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return f(tape, vars).value().item();
}

}  // namespace

GradCheckResult check_gradients(const ScalarFn& f, std::vector<Tensor> inputs, double h) {
    std::vector<Tensor> analytic;
    {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (const auto& t : inputs) vars.push_back(tape.leaf(t));
        ad::Var out = f(tape, vars);
        tape.backward(out);
        for (const auto& v : vars) analytic.push_back(tape.grad(v));
    }

    GradCheckResult result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double orig = inputs[k][i];
            inputs[k][i] = orig + h;
            const double plus = evaluate(f, inputs);
            inputs[k][i] = orig - h;
            const double minus = evaluate(f, inputs);
            inputs[k][i] = orig;
            record(result, analytic[k][i], (plus - minus) / (2.0 * h),
                   "input" + std::to_string(k) + "[" + std::to_string(i) + "]");
        }
    }
    return result;
}

GradCheckResult check_param_gradients(ParamStore& params, const std::function<ad::Var(ad::Tape&)>& loss, double h,
                                      std::size_t max_entries_per_param) {
    params.zero_grad();
    {
        ad::Tape tape;
        ad::Var out = loss(tape);
        tape.backward(out);
    }
    std::vector<Tensor> analytic;
    for (const auto& p : params.all()) analytic.push_back(p.grad);

    auto eval = [&]() {
        ad::Tape tape;
        return loss(tape).value().item();
    };

    GradCheckResult result;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params.all()[k];
        if (!p.trainable) continue;
        const std::size_t n = p.value.size();
        std::size_t stride = 1;
        if (max_entries_per_param > 0 && n > max_entries_per_param)
            stride = (n + max_entries_per_param - 1) / max_entries_per_param;
        for (std::size_t i = 0; i < n; i += stride) {
            const double orig = p.value[i];
            p.value[i] = orig + h;
            const double plus = eval();
            p.value[i] = orig - h;
            const double minus = eval();
            p.value[i] = orig;
            record(result, analytic[k][i], (plus - minus) / (2.0 * h), p.name + "[" + std::to_string(i) + "]");
        }
    }
    params.zero_grad();
    return result;
}

}  // namespace drfn
