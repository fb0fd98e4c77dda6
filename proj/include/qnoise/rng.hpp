#pragma once

#include <array>
#include <cstdint>

namespace qnoise {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Standard normal variate number `index` of the stream keyed by `seed`.
/// Pure function of (seed, index), so paths can be drawn in any order.
double normal_variate(std::uint64_t seed, std::uint64_t index);

/// Uniform in (0, 1) from 64 random bits (the top 52 are used).
double uniform_open(std::uint64_t bits);

} // namespace qnoise
