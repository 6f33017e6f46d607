#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

namespace kern {

// Counter-based generator: the k-th output for a given seed is the SplitMix64
// finalizer applied to seed + (k+1) * golden-gamma. Stateless apart from the
// counter, so any draw can be reproduced from (seed, counter) alone.
inline uint64_t splitmix64_at(uint64_t seed, uint64_t counter) {
    uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed, e.g. one per font or per tensor.
inline uint64_t derive_stream(uint64_t seed, uint64_t stream_tag) {
    return splitmix64_at(seed ^ 0xA5A5A5A55A5A5A5Aull, stream_tag);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}
    Rng(uint64_t seed, uint64_t stream_tag) : seed_(derive_stream(seed, stream_tag)) {}

    uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }

    // Uniform in [0, 1).
    double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_real(); }

    // Uniform integer in [lo, hi] inclusive; unbiased enough for corpus work.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    template <class T>
    void shuffle(T* data, size_t n) {
        for (size_t i = n; i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(data[i - 1], data[j]);
        }
    }

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace kern
