#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace drfn {

/// Text → fixed-length vector. Implementations must be deterministic and return
/// either a unit-norm vector or an all-zero vector (empty input).
class NewsEmbedder {
public:
    virtual ~NewsEmbedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Signed feature hashing over lowercase alphanumeric tokens. Each token lands in
/// bucket h₁(token) mod L with sign ±1 taken from an independent hash; counts are
/// summed and the result L2-normalised.
class HashingEmbedder final : public NewsEmbedder {
public:
    explicit HashingEmbedder(std::size_t dim);
    std::size_t dim() const override { return dim_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

std::vector<std::string_view> tokenize(std::string_view text);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace drfn
