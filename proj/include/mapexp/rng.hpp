#pragma once

#include <cstdint>

namespace mapexp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent stream: depends only on (master, purpose, index).
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(master) ^ purpose) ^ index);
}

// stream purposes
enum : std::uint64_t {
    kPurposeSimulate = 1,
    kPurposeCycles = 2,
    kPurposeProbe = 3,
    kPurposeCorroborate = 4,
    kPurposeEstimate = 5,
};

}  // namespace mapexp
