#include "drfn/params.hpp"

#include "drfn/errors.hpp"

#include <cmath>

namespace drfn {

Parameter& ParamStore::add(std::string name, Tensor value) {
    if (index_.contains(name)) throw ContractError("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    Tensor grad(value.shape());
    params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), true});
    return params_.back();
}

Parameter& ParamStore::get(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ContractError("unknown parameter: " + std::string(name));
    return params_[it->second];
}

const Parameter& ParamStore::get(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ContractError("unknown parameter: " + std::string(name));
    return params_[it->second];
}

bool ParamStore::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
}

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace drfn
