#pragma once

// Counter-based random number generation (Philox4x64-10).
//
// Every variate is a pure function of (seed, stream tag, counter words), so
// parallel workers produce identical streams regardless of scheduling and
// common random numbers can be shared across experiment cells.

#include <array>
#include <cmath>
#include <cstdint>

namespace chainflux::rng {

using u64 = std::uint64_t;

namespace detail {

inline u64 mulhi64(u64 a, u64 b) {
    return static_cast<u64>((static_cast<unsigned __int128>(a) * b) >> 64);
}

} // namespace detail

// Philox4x64, 10 rounds. Constants from Salmon et al.; bit-exact against
// numpy.random.Philox raw output (numpy pre-increments the counter by one
// before emitting a block, see tests/test_rng.cpp).
inline std::array<u64, 4> philox4x64(std::array<u64, 4> ctr, u64 key0, u64 key1) {
    constexpr u64 kMul0 = 0xD2E7470EE14C6C93ULL;
    constexpr u64 kMul1 = 0xCA5A826395121157ULL;
    constexpr u64 kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr u64 kWeyl1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        const u64 hi0 = detail::mulhi64(kMul0, ctr[0]);
        const u64 lo0 = kMul0 * ctr[0];
        const u64 hi1 = detail::mulhi64(kMul1, ctr[2]);
        const u64 lo1 = kMul1 * ctr[2];
        ctr = {hi1 ^ ctr[1] ^ key0, lo1, hi0 ^ ctr[3] ^ key1, lo0};
        key0 += kWeyl0;
        key1 += kWeyl1;
    }
    return ctr;
}

// Stream tags keep the variates of unrelated experiment stages disjoint.
enum class StreamTag : u64 {
    masses = 0x01,
    sde = 0x02,
    chain_noise = 0x03,
    calibration = 0x04,
};

// A keyed, stateless stream: draw i is addressed by up to three counter
// words (typically site, sample, cell).
struct RandomStream {
    u64 seed = 0;
    u64 stream = 0;

    RandomStream() = default;
    RandomStream(u64 seed_, StreamTag tag, u64 substream = 0)
        : seed(seed_), stream((static_cast<u64>(tag) << 56) ^ substream) {}

    std::array<u64, 4> raw(u64 c0, u64 c1 = 0, u64 c2 = 0) const {
        return philox4x64({c0, c1, c2, stream}, seed, stream);
    }

    // Uniform on [0,1), 53-bit mantissa.
    double u01(u64 c0, u64 c1 = 0, u64 c2 = 0) const {
        return static_cast<double>(raw(c0, c1, c2)[0] >> 11) * 0x1.0p-53;
    }

    // Two independent standard Gaussians from one block (Box-Muller).
    std::array<double, 2> normal2(u64 c0, u64 c1 = 0, u64 c2 = 0) const {
        const auto b = raw(c0, c1, c2);
        const double u1 = (static_cast<double>(b[0] >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = static_cast<double>(b[1] >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }
};

} // namespace chainflux::rng
