#pragma once

// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
//
// Each (key, counter) pair maps to four independent 64-bit words, so a
// trajectory's random stream is fully determined by (seed, stream id) and
// the position inside it: no generator state is shared between workers.

#include <array>
#include <cstdint>

namespace halfstrip {

class Philox4x64 {
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = one_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static Counter one_round(const Counter& c, const Key& k) noexcept {
        const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * c[0];
        const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
        const auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Uniform stream for one trajectory: key = (seed, 0), counter = (block, stream, 0, 0).
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_{seed, 0}, stream_(stream) {}

    std::uint64_t operator()() noexcept {
        if (used_ == 4) {
            buffer_ = Philox4x64::block({block_++, stream_, 0, 0}, key_);
            used_ = 0;
        }
        return buffer_[used_++];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

private:
    Philox4x64::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x64::Counter buffer_{};
    int used_ = 4;
};

}  // namespace halfstrip
