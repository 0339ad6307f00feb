#pragma once

// Portable random variates on top of std::mt19937_64.
//
// The standard library distributions are implementation-defined, so every
// variate used by the simulators is drawn here from raw 64-bit engine output.
// Given the same seed, all platforms produce the same streams.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace igdist {

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& rng);

/// Uniform double in (0, 1); never returns 0.
double uniform_open01(Engine& rng);

/// Uniform integer in [0, bound). bound must be positive.
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound);

/// Exact Binomial(trials, prob) variate.
///
/// Sequential inversion when (trials + 1) * min(prob, 1 - prob) < 11, otherwise
/// Hormann's BTRD transformed rejection. Both are exact samplers.
std::int64_t binomial(Engine& rng, std::int64_t trials, double prob);

/// Uniform random subset of {0, ..., range - 1} of the given size.
///
/// Sparse partial Fisher-Yates: only touched positions are stored, so the cost
/// is linear in `count` regardless of `range`. Elements come out in draw order.
void sample_distinct(Engine& rng, std::int64_t range, std::int64_t count,
                     std::vector<std::int64_t>& out);

/// Standard Gumbel variate by inversion: -log(-log U).
double standard_gumbel(Engine& rng);

/// Stateless stream derivation: mixes (master, tag, replicate) through a
/// 64-bit finalizer. Bit-exact across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t replicate);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace igdist
