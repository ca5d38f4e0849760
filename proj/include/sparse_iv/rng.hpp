#pragma once

#include <cstdint>
#include <random>

namespace siv {

/// Random engine used everywhere in the library: 64-bit Mersenne Twister.
///
/// Substreams are addressed by (seed, stream). Each pair seeds its own engine
/// through std::seed_seq over the four 32-bit halves, so work split into
/// independently seeded jobs reproduces regardless of scheduling. Golden
/// files produced by the CLI are specific to this generator and to the
/// libstdc++ distribution implementations.
using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

}  // namespace siv
