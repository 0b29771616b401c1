#pragma once

#include "drfn/embedder.hpp"
#include "drfn/market_data.hpp"

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

namespace drfn {

/// Embeddings of one stock's news on one day, oldest first.
struct DayNewsSet {
    std::vector<std::vector<double>> embeddings;
};

/// Per (date, stock index) news sets, all of dimension `dim`.
struct NewsTable {
    std::size_t dim = 0;
    std::map<std::pair<Date, std::uint32_t>, DayNewsSet> entries;

    const DayNewsSet* find(Date date, std::uint32_t stock) const;
    void add(Date date, std::uint32_t stock, std::vector<double> embedding);
};

/// JSON-lines `{"date": "...", "symbol": "...", "texts": [...]}`; texts are
/// embedded with `embedder`. Lines for symbols absent from `symbols` are rejected.
NewsTable read_news_jsonl(const std::filesystem::path& path, const std::vector<std::string>& symbols,
                          const NewsEmbedder& embedder);

/// Precomputed-embedding file: magic "DRFNEMB1", u32 L, u32 record count, then per
/// record u32 date (days since epoch), u32 stock index, u32 count Q', Q'×L f32.
/// All integers and floats little-endian.
NewsTable read_news_binary(const std::filesystem::path& path, std::size_t num_stocks);
void write_news_binary(const std::filesystem::path& path, const NewsTable& table);

/// Dispatches on extension: ".jsonl"/".json" → JSON lines, anything else → binary.
NewsTable read_news(const std::filesystem::path& path, const std::vector<std::string>& symbols,
                    std::size_t embedding_dim);

}  // namespace drfn
