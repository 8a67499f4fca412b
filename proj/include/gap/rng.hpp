#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace gap {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream seed from a base seed and a path of labels.
/// Streams keyed by (chain, generation, ...) are independent of the order in
/// which other streams are consumed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = splitmix64(base);
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    return Rng(derive_seed(base, parts));
}

}  // namespace gap
