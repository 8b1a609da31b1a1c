// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "condtune/array.hpp"

namespace condtune::numcore {

/// splitmix64 finalizer. Counter-based use (hash of seed and index) gives
/// order-independent, platform-stable streams for every random draw in the
/// project; no stateful engine is shared between call sites.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ (0x632be59bd9b4e019ULL * (stream + 1))) + index);
}

/// Uniform in [0,1) with 53 usable bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(mix_seed(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter draws.
inline double normal01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const double u1 = uniform01(seed, stream, 2 * index);
    const double u2 = uniform01(seed, stream, 2 * index + 1);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline RealArray normal_array(std::vector<std::size_t> shape, std::uint64_t seed,
                              std::uint64_t stream, double sigma = 1.0) {
    RealArray a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] = sigma * normal01(seed, stream, i);
    return a;
}

inline RealArray uniform_array(std::vector<std::size_t> shape, std::uint64_t seed,
                               std::uint64_t stream, double lo = 0.0, double hi = 1.0) {
    RealArray a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.data[i] = lo + (hi - lo) * uniform01(seed, stream, i);
    }
    return a;
}

}  // namespace condtune::numcore
