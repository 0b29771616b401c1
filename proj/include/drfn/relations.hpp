#pragma once

#include "drfn/tensor.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace drfn {

/// Predefined binary relation matrix over a fixed, ordered symbol universe.
/// Always symmetric with a zero diagonal.
struct StaticRelations {
    std::vector<std::string> symbols;
    Tensor matrix;
};

/// Builds the matrix from (a, b) symbol pairs: symmetrised, diagonal masked,
/// duplicates idempotent. Unknown symbols throw DataError listing them.
StaticRelations make_relations(const std::vector<std::string>& symbols,
                               const std::vector<std::pair<std::string, std::string>>& edges);

/// CSV edge list `symbol_a,symbol_b`; a header line with those names is optional.
/// An empty file gives an all-zero matrix and a warning.
StaticRelations load_relations(const std::filesystem::path& path, const std::vector<std::string>& symbols);
void write_relations_csv(const std::filesystem::path& path, const StaticRelations& rel);

}  // namespace drfn
