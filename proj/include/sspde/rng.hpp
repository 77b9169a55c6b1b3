#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sspde {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used only to turn a stream name into a key.
inline std::uint64_t hash_name(std::string_view name)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed of replica `index` in stream `name`. Adding replicas never changes
// the seeds of existing ones.
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index)
{
    return splitmix64(splitmix64(root ^ hash_name(name)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::string_view name, std::uint64_t index)
{
    return Rng(stream_seed(root, name, index));
}

} // namespace sspde
