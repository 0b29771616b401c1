#pragma once

#include "drfn/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace drfn {

/// A learnable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

/// Ordered, name-addressable container of every learnable tensor in a model.
/// Insertion order is the iteration order (checkpoints and the optimizer rely on it).
class ParamStore {
public:
    Parameter& add(std::string name, Tensor value);
    Parameter& get(std::string_view name);
    const Parameter& get(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::vector<Parameter>& all() { return params_; }
    const std::vector<Parameter>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

using Rng = std::mt19937_64;

/// uniform(−1/√fan_in, +1/√fan_in)
Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace drfn
