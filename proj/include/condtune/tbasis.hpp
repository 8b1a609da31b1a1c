// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>

#include "condtune/array.hpp"

namespace condtune {

inline constexpr std::size_t kTemporalBases = 8;

/// Fixed bank of sinusoidal temporal bases evaluated at `steps` positions
/// spread over [0,1]: alternating sin/cos at frequencies 1,1,2,2,3,3,4,4.
/// Shared by the generator (over frame index) and the motion critic (over
/// sampled-pair index) so temporal patterns live in one common space.
inline numcore::RealArray basis_matrix(std::size_t steps, std::size_t n_basis = kTemporalBases) {
    numcore::RealArray bank({steps, n_basis});
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t t = 0; t < steps; ++t) {
        const double tau = steps > 1 ? static_cast<double>(t) / static_cast<double>(steps - 1)
                                     : 0.5;
        for (std::size_t k = 0; k < n_basis; ++k) {
            const double freq = static_cast<double>(k / 2 + 1);
            const double phase = two_pi * freq * tau;
            bank.data[t * n_basis + k] = (k % 2 == 0) ? std::sin(phase) : std::cos(phase);
        }
    }
    return bank;
}

}  // namespace condtune
