#pragma once

// Shared helpers for the checksummed binary file formats (dataset cache,
// forest model).

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "bess/errors.hpp"

namespace bess {

inline std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

struct ByteSink {
    std::vector<unsigned char> bytes;

    template <typename T>
    void put(T v) {
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        bytes.insert(bytes.end(), raw, raw + sizeof(T));
    }
};

struct ByteSource {
    const unsigned char* p;
    const unsigned char* end;

    template <typename T>
    T get() {
        if (p + sizeof(T) > end) throw CacheError("file truncated");
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    bool exhausted() const { return p == end; }
};

// Writes magic + payload + FNV-1a checksum of the payload.
inline void write_checksummed(const std::filesystem::path& path, const char (&magic)[4],
                              const ByteSink& sink) {
    const std::uint64_t checksum = fnv1a(sink.bytes.data(), sink.bytes.size());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write " + path.string());
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(sink.bytes.data()),
              static_cast<std::streamsize>(sink.bytes.size()));
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw CacheError("short write to " + path.string());
}

// Verifies magic and checksum, returns the payload.
inline std::vector<unsigned char> read_checksummed(const std::filesystem::path& path,
                                                   const char (&magic)[4]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError("cannot open " + path.string());
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 4 + sizeof(std::uint64_t)) throw CacheError("file too small: " + path.string());
    if (std::memcmp(raw.data(), magic, 4) != 0) throw CacheError("bad magic in " + path.string());
    const std::size_t payload_len = raw.size() - 4 - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, raw.data() + 4 + payload_len, sizeof(stored));
    if (fnv1a(raw.data() + 4, payload_len) != stored) {
        throw CacheError("checksum mismatch in " + path.string());
    }
    raw.erase(raw.begin(), raw.begin() + 4);
    raw.resize(payload_len);
    return raw;
}

}  // namespace bess
