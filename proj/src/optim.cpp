// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace condtune::numcore {

AdamState AdamState::for_params(const std::vector<RealArray>& params) {
    AdamState s;
    for (const RealArray& p : params) {
        s.m.emplace_back(p.shape, 0.0);
        s.v.emplace_back(p.shape, 0.0);
    }
    return s;
}

void adam_step(std::vector<RealArray>& params, const std::vector<RealArray>& grads,
               AdamState& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    }
    if (lr < 0.0) throw std::invalid_argument("adam_step: negative learning rate");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        RealArray& p = params[k];
        const RealArray& g = grads[k];
        if (!p.same_shape(g) || !p.same_shape(state.m[k])) {
            throw std::invalid_argument("adam_step: shape mismatch in group " + std::to_string(k));
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            double& m = state.m[k].data[i];
            double& v = state.v[k].data[i];
            m = state.beta1 * m + (1.0 - state.beta1) * g.data[i];
            v = state.beta2 * v + (1.0 - state.beta2) * g.data[i] * g.data[i];
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p.data[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

double cosine_lr(long step, long total_steps, double lr0) {
    if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
    if (step < 0 || step > total_steps) {
        throw std::invalid_argument("cosine_lr: step " + std::to_string(step) + " outside [0," +
                                    std::to_string(total_steps) + "]");
    }
    if (step == total_steps) return 0.0;
    const double x = 3.14159265358979323846 * static_cast<double>(step) /
                     static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(x));
}

std::vector<RealArray> finite_diff_grad(
    const std::function<double(const std::vector<RealArray>&)>& loss_fn,
    std::vector<RealArray> leaves, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
    std::vector<RealArray> out;
    out.reserve(leaves.size());
    for (const RealArray& leaf : leaves) out.emplace_back(leaf.shape, 0.0);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        for (std::size_t i = 0; i < leaves[k].size(); ++i) {
            const double saved = leaves[k].data[i];
            leaves[k].data[i] = saved + h;
            const double fp = loss_fn(leaves);
            leaves[k].data[i] = saved - h;
            const double fm = loss_fn(leaves);
            leaves[k].data[i] = saved;
            out[k].data[i] = (fp - fm) / (2.0 * h);
        }
    }
    return out;
}

}  // namespace condtune::numcore
