#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace coin {

// Derives an independent stream state from a base seed and a stream key.
// Used for counter-style generation (one stream per token id, per record,
// per audit) so every artifact replays bit-identically.
inline uint64_t mix_key(uint64_t seed, uint64_t key) {
    uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (key + 0x632BE59BD9B4E019ull));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// splitmix64 generator with portable distributions. The standard library
// engines are portable but its distributions are not, so uniform/gaussian
// draws are implemented here to keep cross-platform determinism.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, bound), bound > 0. Lemire reduction with a
    // rejection pass, so results are unbiased and platform independent.
    uint64_t below(uint64_t bound) {
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        uint64_t low = static_cast<uint64_t>(m);
        if (low < bound) {
            uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                low = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    size_t index(size_t n) { return static_cast<size_t>(below(n)); }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [lo, hi] inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    // Standard normal via Box-Muller.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

    // k distinct indices from [0, n), ascending. Floyd's algorithm.
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        if (k > n) k = n;
        std::vector<size_t> picked;
        picked.reserve(k);
        for (size_t j = n - k; j < n; ++j) {
            size_t t = index(j + 1);
            if (std::find(picked.begin(), picked.end(), t) != picked.end()) {
                picked.push_back(j);
            } else {
                picked.push_back(t);
            }
        }
        std::sort(picked.begin(), picked.end());
        return picked;
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace coin
