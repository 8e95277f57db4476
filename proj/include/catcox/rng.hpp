#pragma once

#include <cstdint>
#include <random>

namespace catcox {

using Rng = std::mt19937_64;

/**
 * Independent stream `stream` of master seed `seed`. Replication r of a study
 * uses make_rng(seed, r); sub-streams inside a replication are derived with
 * make_rng(seed, r, k). The mapping depends only on the integers, so serial
 * and parallel runs draw identical numbers.
 */
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t sub = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(sub), static_cast<std::uint32_t>(sub >> 32)};
    return Rng(seq);
}

/// Seed for a child stream, for APIs that take a seed rather than an engine.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0)
{
    Rng rng = make_rng(seed, stream, sub);
    return rng();
}

} // namespace catcox
