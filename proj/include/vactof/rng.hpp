#pragma once

#include <cstdint>
#include <random>

namespace vactof {

// Counter-based substream derivation: one root seed expands into independent
// per-purpose, per-index streams, so adding measurement points never perturbs
// earlier draws.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class StreamPurpose : std::uint64_t {
    bits = 1,
    position = 2,
    velocity = 3,
    ionization_time = 4,
    pilot = 5,
};

inline std::uint64_t substream_seed(std::uint64_t root, StreamPurpose purpose,
                                    std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(root ^ (static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL));
    return splitmix64(s ^ splitmix64(index));
}

inline std::mt19937_64 make_stream(std::uint64_t root, StreamPurpose purpose,
                                   std::uint64_t index = 0) {
    return std::mt19937_64(substream_seed(root, purpose, index));
}

} // namespace vactof
