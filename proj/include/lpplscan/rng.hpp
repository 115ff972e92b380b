#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lppl {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11), exposed as a
// 64-bit UniformRandomBitGenerator so it plugs into <random> distributions.
//
// The 64-bit key is the seed; `stream` selects an independent counter range,
// so (seed, stream) pairs never overlap.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    // Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key) noexcept;

private:
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> buffer_{};
    int next_word_ = 4;
};

// Seed-derivation tree: child seeds are SplitMix64 hashes of (parent, index).
// Every stochastic routine takes a seed and derives per-path / per-repetition
// children with this function, so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

}  // namespace lppl
