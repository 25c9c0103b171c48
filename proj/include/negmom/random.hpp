#pragma once

// Counter-based RNG (Philox4x32-10) with explicit stream splitting.
//
// A generator is identified by (seed, stream). Output depends only on that pair
// and the draw position, never on global state, so identical seed + call
// sequence reproduces bit-exactly. Parallel code derives one child stream per
// unitary round via substream(); children with distinct tags are independent.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace negmom {

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    std::uint64_t seed() const {
        return static_cast<std::uint64_t>(key_[1]) << 32 | key_[0];
    }
    std::uint64_t stream() const { return stream_; }

    /// Independent child stream; mixing is SplitMix64-style so nested tags
    /// (round, repetition, grid point) do not collide in practice.
    Rng substream(std::uint64_t tag) const {
        return Rng(seed(), mix64(stream_ ^ (tag + 0x9E3779B97F4A7C15ull)));
    }

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return hi << 32 | lo;
    }

    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo with rejection to stay unbiased
        const std::uint64_t lim = ~std::uint64_t(0) - ~std::uint64_t(0) % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= lim);
        return v % n;
    }

    /// Standard normal via Box-Muller (pairwise, deterministic).
    double gauss() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        gauss_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = 0xD2511F53ull * c[0];
        const std::uint64_t p1 = 0xCD9E8D57ull * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    void refill() {
        std::array<std::uint32_t, 4> c = {static_cast<std::uint32_t>(counter_),
                                          static_cast<std::uint32_t>(counter_ >> 32),
                                          static_cast<std::uint32_t>(stream_),
                                          static_cast<std::uint32_t>(stream_ >> 32)};
        std::array<std::uint32_t, 2> k = key_;
        for (int r = 0; r < 10; ++r) {
            round(c, k);
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        buf_ = c;
        pos_ = 0;
        ++counter_;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool have_gauss_ = false;
    double gauss_ = 0.0;
};

/// Multinomial draw: histogram over probs.size() outcomes summing to n.
/// Inverse-CDF per shot; deterministic under the rng state.
inline std::vector<int> sample_counts(const std::vector<double>& probs, int n, Rng& rng) {
    if (n < 0) throw std::invalid_argument("sample_counts: negative shot count");
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < -1e-12) throw std::invalid_argument("sample_counts: negative probability");
        acc += std::max(probs[i], 0.0);
        cdf[i] = acc;
    }
    std::vector<int> counts(probs.size(), 0);
    for (int s = 0; s < n; ++s) {
        const double u = rng.uniform() * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cdf.begin());
        if (k >= counts.size()) k = counts.size() - 1;
        ++counts[k];
    }
    return counts;
}

}  // namespace negmom
