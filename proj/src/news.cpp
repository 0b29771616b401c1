#include "drfn/news.hpp"

#include "drfn/binary_io.hpp"
#include "drfn/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace drfn {

const DayNewsSet* NewsTable::find(Date date, std::uint32_t stock) const {
    auto it = entries.find({date, stock});
    return it == entries.end() ? nullptr : &it->second;
}

void NewsTable::add(Date date, std::uint32_t stock, std::vector<double> embedding) {
    if (embedding.size() != dim) {
        throw DimensionError("news embedding has length " + std::to_string(embedding.size()) + ", expected " +
                             std::to_string(dim));
    }
    entries[{date, stock}].embeddings.push_back(std::move(embedding));
}

NewsTable read_news_jsonl(const std::filesystem::path& path, const std::vector<std::string>& symbols,
                          const NewsEmbedder& embedder) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open news file " + path.string());
    NewsTable table;
    table.dim = embedder.dim();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.contains("date") || !rec.contains("symbol") || !rec.contains("texts") || !rec["texts"].is_array()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": need date, symbol and texts[]");
        }
        const Date date = parse_date(rec["date"].get<std::string>());
        const auto symbol = rec["symbol"].get<std::string>();
        auto it = std::lower_bound(symbols.begin(), symbols.end(), symbol);
        if (it == symbols.end() || *it != symbol) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown symbol " + symbol);
        }
        const auto stock = static_cast<std::uint32_t>(it - symbols.begin());
        for (const auto& text : rec["texts"]) table.add(date, stock, embedder.embed(text.get<std::string>()));
    }
    return table;
}

namespace {

constexpr char kEmbeddingMagic[8] = {'D', 'R', 'F', 'N', 'E', 'M', 'B', '1'};

}  // namespace

NewsTable read_news_binary(const std::filesystem::path& path, std::size_t num_stocks) {
    auto bytes = slurp(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kEmbeddingMagic, 8) != 0) {
        throw DataError(path.string() + ": missing DRFNEMB1 magic");
    }
    ByteReader r(std::move(bytes), path.string());
    for (int i = 0; i < 8; ++i) r.read<std::uint8_t>();
    NewsTable table;
    table.dim = r.read<std::uint32_t>();
    const auto count = r.read<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto date = static_cast<Date>(r.read<std::uint32_t>());
        const auto stock = r.read<std::uint32_t>();
        const auto q = r.read<std::uint32_t>();
        if (stock >= num_stocks) {
            throw DataError(path.string() + ": record " + std::to_string(k) + " has stock index " +
                            std::to_string(stock) + " outside universe of " + std::to_string(num_stocks));
        }
        for (std::uint32_t j = 0; j < q; ++j) {
            std::vector<double> e(table.dim);
            for (auto& v : e) v = static_cast<double>(r.read<float>());
            table.add(date, stock, std::move(e));
        }
    }
    if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after " + std::to_string(count) + " records");
    return table;
}

void write_news_binary(const std::filesystem::path& path, const NewsTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kEmbeddingMagic, 8);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.entries.size()));
    for (const auto& [key, set] : table.entries) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.first));
        put_le<std::uint32_t>(out, key.second);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.embeddings.size()));
        for (const auto& e : set.embeddings)
            for (double v : e) put_le<float>(out, static_cast<float>(v));
    }
    if (!out) throw DataError("write failed for " + path.string());
}

NewsTable read_news(const std::filesystem::path& path, const std::vector<std::string>& symbols,
                    std::size_t embedding_dim) {
    const auto ext = path.extension().string();
    if (ext == ".jsonl" || ext == ".json") {
        HashingEmbedder embedder(embedding_dim);
        return read_news_jsonl(path, symbols, embedder);
    }
    NewsTable table = read_news_binary(path, symbols.size());
    if (table.dim != embedding_dim) {
        throw DataError(path.string() + ": embedding dimension " + std::to_string(table.dim) +
                        " does not match configured L=" + std::to_string(embedding_dim));
    }
    return table;
}

}  // namespace drfn
