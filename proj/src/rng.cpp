#include "qnoise/rng.hpp"

#include <cmath>
#include <numbers>

namespace qnoise {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t m0 = 0xD2511F53;
    constexpr std::uint32_t m1 = 0xCD9E8D57;
    constexpr std::uint32_t w0 = 0x9E3779B9;
    constexpr std::uint32_t w1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

double uniform_open(std::uint64_t bits)
{
    // 52 bits: with 53 the top value plus one half rounds up to exactly 1
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double normal_variate(std::uint64_t seed, std::uint64_t index)
{
    const auto r = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0, 0},
                              {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    const double u1 = uniform_open(static_cast<std::uint64_t>(r[0]) << 32 | r[1]);
    const double u2 = uniform_open(static_cast<std::uint64_t>(r[2]) << 32 | r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace qnoise
