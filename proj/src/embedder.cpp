#include "drfn/embedder.hpp"

#include "drfn/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>

namespace drfn {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint64_t kBucketBasis = 14695981039346656037ULL;
constexpr std::uint64_t kSignBasis = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    bool in_token = false;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        const bool word = i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]));
        if (word && !in_token) {
            start = i;
            in_token = true;
        } else if (!word && in_token) {
            tokens.push_back(text.substr(start, i - start));
            in_token = false;
        }
    }
    return tokens;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ContractError("HashingEmbedder: dimension must be positive");
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
    std::vector<double> out(dim_, 0.0);
    std::string lowered;
    for (std::string_view tok : tokenize(text)) {
        lowered.assign(tok);
        for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const std::uint64_t bucket = fnv1a(lowered, kBucketBasis) % dim_;
        const double sign = (fnv1a(lowered, kSignBasis) >> 63) ? -1.0 : 1.0;
        out[bucket] += sign;
    }
    double n2 = 0.0;
    for (double v : out) n2 += v * v;
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& v : out) v *= inv;
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace drfn
