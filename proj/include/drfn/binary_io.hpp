#pragma once

#include "drfn/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

namespace drfn {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
inline T from_le(const unsigned char* p) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

template <class T>
inline void put_le(std::ostream& out, T v) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

/// Bounds-checked little-endian cursor over a byte buffer.
class ByteReader {
public:
    ByteReader(std::vector<unsigned char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    template <class T>
    T read() {
        if (pos_ + sizeof(T) > bytes_.size()) throw DataError(name_ + ": truncated at byte " + std::to_string(pos_));
        T v = from_le<T>(bytes_.data() + pos_);
        pos_ += sizeof(T);
        return v;
    }
    std::string read_string(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw DataError(name_ + ": truncated at byte " + std::to_string(pos_));
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == bytes_.size(); }
    std::size_t pos() const { return pos_; }

private:
    std::vector<unsigned char> bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace drfn
