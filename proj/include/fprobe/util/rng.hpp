#pragma once

#include <cstdint>
#include <vector>

#include "fprobe/util/hash.hpp"

namespace fprobe {

// Deterministic PRNG with a stable cross-platform output sequence.
// std::shuffle / std::uniform_int_distribution are implementation-defined,
// so every sampling decision in the pipeline goes through this instead.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Modulo bias is < 2^-32 for bound < 2^32.
    uint64_t next_below(uint64_t bound) { return next() % bound; }

    // Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    uint64_t state_;
};

// First k indices of a seeded Fisher-Yates permutation of [0, n).
inline std::vector<size_t> sample_indices(size_t n, size_t k, uint64_t seed) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    SplitMix64 rng(seed);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace fprobe
