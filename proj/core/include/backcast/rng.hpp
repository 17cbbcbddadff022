#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "backcast/exceptions.hpp"

// Deterministic sampling helpers. The standard distributions are
// implementation-defined, so anything that feeds persisted artifacts or
// seeded experiments goes through these instead; given the same seed they
// produce the same draws on every platform.

namespace backcast {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection, bias-free.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_below: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Exponential with the given mean, via inverse CDF. Always > 0.
inline double exponential(Rng& rng, double mean) {
    return -mean * std::log1p(-uniform_unit(rng));
}

// Uniform sample of min(m, values.size()) elements without replacement,
// returned in ascending value order. Partial Fisher-Yates on a copy.
template <typename T>
std::vector<T> sample_without_replacement(std::span<const T> values, std::size_t m, Rng& rng) {
    std::vector<T> pool(values.begin(), values.end());
    if (m >= pool.size()) {
        std::sort(pool.begin(), pool.end());
        return pool;
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace backcast
