#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bsle {

// One root seed plus a per-path stream index. Identical (seed, stream)
// reproduces an identical variate sequence bit-for-bit, independent of
// which worker thread consumes it.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// The 128-bit counter is split as (block_lo, block_hi, stream_lo, stream_hi)
// and the 64-bit key is the root seed, so distinct streams are distinct
// counter prefixes of the same keyed permutation.
class Philox {
public:
    explicit Philox(RngSpec spec) noexcept
        : key_{static_cast<std::uint32_t>(spec.seed),
               static_cast<std::uint32_t>(spec.seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(spec.stream)),
          stream_hi_(static_cast<std::uint32_t>(spec.stream >> 32)) {}

    std::uint64_t next_u64() noexcept {
        if (block_pos_ >= 2) refill();
        const std::uint64_t lo = block_[2 * block_pos_];
        const std::uint64_t hi = block_[2 * block_pos_ + 1];
        ++block_pos_;
        return lo | (hi << 32);
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes exactly two 64-bit words
    // per pair, so stream consumption is data-independent.
    double next_normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite.
        const double u1 =
            static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Raw keyed block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(
        std::array<std::uint32_t, 4> ctr,
        std::array<std::uint32_t, 2> key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    void refill() noexcept {
        block_ = block({static_cast<std::uint32_t>(counter_),
                        static_cast<std::uint32_t>(counter_ >> 32),
                        stream_lo_, stream_hi_},
                       key_);
        ++counter_;
        block_pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 2;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bsle
