#pragma once

#include <cstdint>
#include <random>

#include "vortexscore/strain_field.hpp"

namespace vortexscore {

/// SplitMix64 finalizer. Used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`. Depends only on the pair, never on call order.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Standard-normal pairs for one trajectory. Draw order is fixed: r first, then z.
class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, std::uint64_t attempt_index)
        : engine_(substream_seed(master_seed, attempt_index)) {}

    Vec2 operator()() {
        const double er = normal_(engine_);
        const double ez = normal_(engine_);
        return {er, ez};
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vortexscore
