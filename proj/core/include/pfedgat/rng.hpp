#pragma once

#include <cstdint>
#include <random>

// Seed derivation for independent deterministic streams. Every consumer of
// randomness (client training, client init, partitioning, GAT heads, ...)
// gets its own engine seeded from (experiment seed, purpose tag, index), so
// results never depend on call order, client count or thread scheduling.

namespace pfedgat {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ tag) ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return std::mt19937_64(mix_seed(seed, tag, index));
}

namespace seed_tag {
// Arbitrary distinct constants naming each stream.
inline constexpr std::uint64_t kData = 0x44415441;       // dataset generation
inline constexpr std::uint64_t kPartition = 0x50415254;  // partitioning
inline constexpr std::uint64_t kSplit = 0x53504c54;      // per-client train/test split
inline constexpr std::uint64_t kClientInit = 0x494e4954; // model initialization
inline constexpr std::uint64_t kClientTrain = 0x434c4e54;
inline constexpr std::uint64_t kGatHead = 0x47415448;
inline constexpr std::uint64_t kClientSlot = 0x534c4f54; // per-client init stream selector
inline constexpr std::uint64_t kCohort = 0x434f4854;     // founding vs joining cohort
}  // namespace seed_tag

}  // namespace pfedgat
