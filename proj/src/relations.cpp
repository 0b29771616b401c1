#include "drfn/relations.hpp"

#include "drfn/errors.hpp"
#include "drfn/text_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace drfn {

StaticRelations make_relations(const std::vector<std::string>& symbols,
                               const std::vector<std::pair<std::string, std::string>>& edges) {
    const std::size_t z = symbols.size();
    StaticRelations rel{symbols, Tensor::zeros(z, z)};
    auto index = [&](const std::string& s) -> std::ptrdiff_t {
        auto it = std::find(symbols.begin(), symbols.end(), s);
        return it == symbols.end() ? -1 : it - symbols.begin();
    };
    std::set<std::string> unknown;
    for (const auto& [a, b] : edges) {
        const auto i = index(a), j = index(b);
        if (i < 0) unknown.insert(a);
        if (j < 0) unknown.insert(b);
        if (i < 0 || j < 0 || i == j) continue;
        rel.matrix(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1.0;
        rel.matrix(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = 1.0;
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& s : unknown) list += (list.empty() ? "" : ", ") + s;
        throw DataError("relations reference unknown symbols: " + list);
    }
    return rel;
}

StaticRelations load_relations(const std::filesystem::path& path, const std::vector<std::string>& symbols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open relations file " + path.string());
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto fields = split(row, ',');
        if (fields.size() != 2) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'symbol_a,symbol_b'");
        }
        const std::string a(trim(fields[0])), b(trim(fields[1]));
        if (line_no == 1 && a == "symbol_a" && b == "symbol_b") continue;
        edges.emplace_back(a, b);
    }
    if (edges.empty()) spdlog::warn("{}: no relation edges, using an all-zero static relation matrix", path.string());
    return make_relations(symbols, edges);
}

void write_relations_csv(const std::filesystem::path& path, const StaticRelations& rel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "symbol_a,symbol_b\n";
    const std::size_t z = rel.symbols.size();
    for (std::size_t i = 0; i < z; ++i)
        for (std::size_t j = i + 1; j < z; ++j)
            if (rel.matrix(i, j) != 0.0) out << rel.symbols[i] << ',' << rel.symbols[j] << '\n';
}

}  // namespace drfn
