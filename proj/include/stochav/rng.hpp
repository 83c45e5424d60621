/** \file rng.hpp
    \brief Counter-based Gaussian increments (Philox4x32-10 + Box-Muller).

    Every Brownian increment is addressed by (master seed, stream, substream,
    step), so trajectories are reproducible bit-exactly under any worker
    count and increments can be re-read in any order (coupling, refinement).
*/
#pragma once

#include <array>
#include <cstdint>

#include "stochav/types.hpp"

namespace stochav {

/// One Philox4x32-10 block: 128-bit counter, 64-bit key -> 4 x 32 bits.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key);

/// Four standard Gaussians per block via two Box-Muller pairs.
std::array<double, 4> gaussian_block(std::uint64_t seed, std::uint64_t stream,
                                     std::uint32_t substream, std::uint64_t block);

/// N(0,1) draw addressed by (seed, stream, substream, index).
inline double gaussian_at(std::uint64_t seed, std::uint64_t stream,
                          std::uint32_t substream, std::uint64_t index) {
    return gaussian_block(seed, stream, substream, index >> 2)[index & 3];
}

/// Seed descriptor for one trajectory's driving noise: n_streams independent
/// Brownian motions sampled at step dt.
struct NoiseSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream = 0;   ///< path index
    int n_streams = 1;
    double dt = 1e-3;

    /// Increment of Brownian motion k over step j: sqrt(dt) * N(0,1).
    double increment(std::uint64_t step, int k) const {
        return sqrt_dt() * gaussian_at(master_seed, stream, static_cast<std::uint32_t>(k), step);
    }
    double sqrt_dt() const { return std::sqrt(dt); }
};

/// Materialized increments, entry (j,k) ~ N(0, dt) for step j, stream k.
/// Bit-identical to the lazy draws of the generating NoiseSpec.
struct NoisePath {
    NoiseSpec spec;
    std::int64_t n_steps = 0;
    Vec increments;  ///< row-major [n_steps][n_streams]

    static NoisePath generate(const NoiseSpec& spec, std::int64_t n_steps);

    double at(std::int64_t step, int k) const {
        return increments[static_cast<size_t>(step) * spec.n_streams + k];
    }

    /// Brownian value B^k(t) at step boundary `upto` (sum of increments).
    double sum(int k, std::int64_t upto) const;

    /// Coarsened path: groups of `factor` increments summed, dt scaled.
    /// Used for strong-order refinement studies on a common Brownian path.
    NoisePath aggregate(int factor) const;
};

}  // namespace stochav
