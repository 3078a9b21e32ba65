#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace itu {

// FNV-1a, 64-bit. Used for config hashes and golden-file checks.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::uint64_t fnv1a64(const std::vector<double>& v) {
    return fnv1a64(v.data(), v.size() * sizeof(double));
}

std::string hex64(std::uint64_t h);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace itu
