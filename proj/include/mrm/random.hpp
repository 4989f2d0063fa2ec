#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrm {

using Engine = std::mt19937_64;

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for stream `label`, replica `index` under a base seed.
///
/// For fixed (base, label) the map index -> seed is injective, so replica
/// streams never share a seed. The value depends only on the inputs and is
/// identical across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                    std::uint64_t index) noexcept {
    std::uint64_t h = mix64(base);
    h = mix64(h ^ fnv1a64(label));
    return mix64(h ^ index);
}

inline Engine make_engine(std::uint64_t base, std::string_view label, std::uint64_t index) {
    return Engine(derive_seed(base, label, index));
}

}  // namespace mrm
