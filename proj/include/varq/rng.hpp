#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace varq {

// splitmix64 finalizer; whitens seeds for named sub-streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic seed for the sub-stream (master, name, index). All randomness
// in the library flows from one master seed through these named streams, so
// components are independently reproducible regardless of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a over the stream name
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::string_view stream,
                       std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

}  // namespace varq
