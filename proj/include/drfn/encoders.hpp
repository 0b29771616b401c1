#pragma once

#include "drfn/autodiff.hpp"
#include "drfn/params.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drfn {

/// Mean of the newest `max_items` embeddings, ignoring all-zero vectors. Returns
/// nullopt when nothing remains, so the caller can substitute its learned no-news
/// vector.
std::optional<std::vector<double>> aggregate_daily_news(std::span<const std::vector<double>> items,
                                                        std::size_t max_items, std::size_t dim);

/// GRU cell whose weights live in a ParamStore under "<prefix>.W_z" etc.
/// Row convention: inputs are (rows × in), states (rows × hidden), one row per stock.
///   z  = σ(x W_z + h U_z + b_z)
///   r  = σ(x W_r + h U_r + b_r)
///   h̃ = tanh(x W_h + (r ⊙ h) U_h + b_h)
///   h' = (1 − z) ⊙ h + z ⊙ h̃
class GruCell {
public:
    GruCell() = default;
    GruCell(std::string prefix, std::size_t input_dim, std::size_t hidden_dim);

    /// Registers the nine tensors: matrices uniform(±1/√fan_in), zero biases.
    void init(ParamStore& params, Rng& rng) const;

    ad::Var step(ad::Tape& tape, ParamStore& params, ad::Var x, ad::Var h) const;
    /// Unrolls from a zero state over `inputs` (all with the same row count) and
    /// returns every hidden state.
    std::vector<ad::Var> unroll(ad::Tape& tape, ParamStore& params, std::span<const ad::Var> inputs) const;

    std::vector<std::string> parameter_names() const;
    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_dim() const { return hidden_dim_; }
    const std::string& prefix() const { return prefix_; }

private:
    std::string name(const char* suffix) const { return prefix_ + "." + suffix; }

    std::string prefix_;
    std::size_t input_dim_ = 0;
    std::size_t hidden_dim_ = 0;
};

}  // namespace drfn
