#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nnsa {

/// SplitMix64 finalizer; used to derive sub-seeds and stream ids.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(a) ^ (0x9E3779B97F4A7C15ull + b));
}

/// Philox4x32-10 counter-based generator. Every (seed, stream) pair is an
/// independent sequence; draws are bit-stable across platforms and thread
/// counts, which is what makes parallel Monte-Carlo sweeps reproducible.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() noexcept {
        if (have_ == 0) refill();
        return block_[4 - have_--];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform in the open interval (0, 1).
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) noexcept { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller; second value is cached.
    double gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Uniform index in [0, n); n must be positive.
    std::size_t uniform_index(std::size_t n) noexcept {
        return static_cast<std::size_t>(next_u64() % n);
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() noexcept {
        std::array<std::uint32_t, 4> c = counter_;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += kWeyl0;
                k[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
                 static_cast<std::uint32_t>(p0)};
        }
        block_ = c;
        have_ = 4;
        if (++counter_[0] == 0) ++counter_[1];  // 2^64 blocks per stream
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int have_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nnsa
