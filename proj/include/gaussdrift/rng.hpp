#pragma once

#include <cstdint>
#include <random>

namespace gaussdrift {

// splitmix64; used to derive well-separated engine seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for sub-stream `index` of a master seed. Each trajectory owns one
// stream so results do not depend on scheduling or worker count.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t index) {
    return std::mt19937_64(substream_seed(master, index));
}

}  // namespace gaussdrift
