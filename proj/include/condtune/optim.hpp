// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "condtune/array.hpp"

namespace condtune::numcore {

/// Adam moment state for one group of parameter arrays. No gradient clipping
/// exists anywhere in the update path by design.
struct AdamState {
    std::vector<RealArray> m;
    std::vector<RealArray> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const std::vector<RealArray>& params);
};

/// In-place bias-corrected Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::vector<RealArray>& params, const std::vector<RealArray>& grads,
               AdamState& state, double lr);

/// lr0 * 0.5 * (1 + cos(pi * step / total_steps)); exactly 0 at the last step.
double cosine_lr(long step, long total_steps, double lr0);

/// Central-difference gradient oracle: (f(x+h e_i) - f(x-h e_i)) / (2h) for
/// every coordinate of every leaf. loss_fn receives the full perturbed leaf
/// set and must be deterministic.
std::vector<RealArray> finite_diff_grad(
    const std::function<double(const std::vector<RealArray>&)>& loss_fn,
    std::vector<RealArray> leaves, double h);

}  // namespace condtune::numcore
