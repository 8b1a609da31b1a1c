// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "condtune/rng.hpp"

namespace condtune::ppo {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

void check_policy(const GaussianPolicy& p) {
    if (!p.mean_alpha.same_shape(p.log_std_alpha) || !p.mean_dv.same_shape(p.log_std_dv)) {
        throw std::invalid_argument("policy: mean and log-std shapes differ");
    }
}

double log_prob_part(const RealArray& mean, const RealArray& log_std, const RealArray& action) {
    if (!action.same_shape(mean)) throw std::invalid_argument("log_prob: action shape mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double s = std::exp(log_std.data[i]);
        const double z = (action.data[i] - mean.data[i]) / s;
        lp += -log_std.data[i] - kHalfLog2Pi - 0.5 * z * z;
    }
    return lp;
}

RealArray draw_part(const RealArray& mean, const RealArray& log_std, std::uint64_t seed,
                    std::uint64_t stream, std::size_t rollout_index) {
    RealArray out = mean;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t counter =
            static_cast<std::uint64_t>(rollout_index) * out.size() + i;
        const double z = numcore::normal01(seed, stream, counter);
        out.data[i] = mean.data[i] + std::exp(log_std.data[i]) * z;
    }
    return out;
}

}  // namespace

GaussianPolicy make_policy(const RealArray& alpha_like, const RealArray& dv_like,
                           const PpoConfig& cfg) {
    GaussianPolicy p;
    p.mean_alpha = RealArray(alpha_like.shape, 0.0);
    p.mean_dv = RealArray(dv_like.shape, 0.0);
    p.log_std_alpha = RealArray(alpha_like.shape, cfg.init_log_std);
    p.log_std_dv = RealArray(dv_like.shape, cfg.init_log_std);
    return p;
}

double log_prob(const GaussianPolicy& policy, const RealArray& action_alpha,
                const RealArray& action_dv) {
    check_policy(policy);
    return log_prob_part(policy.mean_alpha, policy.log_std_alpha, action_alpha) +
           log_prob_part(policy.mean_dv, policy.log_std_dv, action_dv);
}

Rollout sample_action(const GaussianPolicy& policy, std::uint64_t seed,
                      std::size_t rollout_index) {
    check_policy(policy);
    Rollout r;
    r.action_alpha =
        draw_part(policy.mean_alpha, policy.log_std_alpha, seed, kStreamActionAlpha, rollout_index);
    r.action_dv =
        draw_part(policy.mean_dv, policy.log_std_dv, seed, kStreamActionDv, rollout_index);
    r.log_prob = log_prob(policy, r.action_alpha, r.action_dv);
    return r;
}

double reward(const tuner::TuneContext& ctx, const EditTask& task, const ConditioningState& state,
              const tuner::TuningConfig& cfg) {
    return -tuner::total_loss(ctx, task, state, cfg).total;
}

double clipped_ratio(double ratio, double clip_eps) {
    return std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
}

double surrogate(double ratio, double advantage, double clip_eps) {
    return std::min(ratio * advantage, clipped_ratio(ratio, clip_eps) * advantage);
}

void ppo_update(GaussianPolicy& policy, const std::vector<Rollout>& rollouts, double clip_eps,
                double lr) {
    check_policy(policy);
    if (rollouts.empty()) throw std::invalid_argument("ppo_update: no rollouts");

    RealArray g_mean_a(policy.mean_alpha.shape, 0.0);
    RealArray g_mean_v(policy.mean_dv.shape, 0.0);
    RealArray g_ls_a(policy.log_std_alpha.shape, 0.0);
    RealArray g_ls_v(policy.log_std_dv.shape, 0.0);

    const double inv_n = 1.0 / static_cast<double>(rollouts.size());
    for (const Rollout& r : rollouts) {
        const double lp = log_prob(policy, r.action_alpha, r.action_dv);
        const double ratio = std::exp(lp - r.log_prob);
        const double unclipped = ratio * r.advantage;
        const double clipped = clipped_ratio(ratio, clip_eps) * r.advantage;
        // The clipped branch only wins when the clamp saturates, where its
        // derivative is zero.
        const double factor = unclipped <= clipped ? ratio * r.advantage * inv_n : 0.0;
        if (factor == 0.0) continue;

        auto accumulate = [&](const RealArray& mean, const RealArray& log_std,
                              const RealArray& action, RealArray& gm, RealArray& gl) {
            for (std::size_t i = 0; i < mean.size(); ++i) {
                const double s = std::exp(log_std.data[i]);
                const double z = (action.data[i] - mean.data[i]) / s;
                gm.data[i] += factor * z / s;
                gl.data[i] += factor * (z * z - 1.0);
            }
        };
        accumulate(policy.mean_alpha, policy.log_std_alpha, r.action_alpha, g_mean_a, g_ls_a);
        accumulate(policy.mean_dv, policy.log_std_dv, r.action_dv, g_mean_v, g_ls_v);
    }

    for (std::size_t i = 0; i < policy.mean_alpha.size(); ++i) {
        policy.mean_alpha.data[i] += lr * g_mean_a.data[i];
        policy.log_std_alpha.data[i] += lr * g_ls_a.data[i];
    }
    for (std::size_t i = 0; i < policy.mean_dv.size(); ++i) {
        policy.mean_dv.data[i] += lr * g_mean_v.data[i];
        policy.log_std_dv.data[i] += lr * g_ls_v.data[i];
    }
}

PpoResult ppo_tune(const tuner::TuneContext& ctx, const EditTask& task, std::size_t budget,
                   const tuner::TuningConfig& cfg, const PpoConfig& pcfg) {
    tuner::validate_config(cfg);
    if (budget == 0) throw std::invalid_argument("ppo_tune: budget must be positive");
    if (pcfg.rollouts_per_update == 0) {
        throw std::invalid_argument("ppo_tune: rollouts_per_update must be positive");
    }

    const genmodel::FrozenGenerator& gen = *ctx.gen;
    const ConditioningState s0 = genmodel::initial_state(gen, task);

    PpoResult out;
    out.policy = make_policy(s0.alpha, s0.delta_v, pcfg);
    out.result.baseline_clip = genmodel::baseline_edit(gen, task);
    out.result.best = s0;
    out.result.stop_reason = tuner::StopReason::Budget;

    double best_reward = -std::numeric_limits<double>::infinity();
    std::size_t rollout_index = 0;

    while (out.critic_calls < budget) {
        const std::size_t batch =
            std::min(pcfg.rollouts_per_update, budget - out.critic_calls);
        std::vector<Rollout> rollouts;
        rollouts.reserve(batch);
        double batch_mean = 0.0;

        for (std::size_t b = 0; b < batch; ++b) {
            Rollout r = sample_action(out.policy, cfg.seed, rollout_index);

            ConditioningState cand = s0;
            for (std::size_t i = 0; i < cand.alpha.size(); ++i) {
                cand.alpha.data[i] += r.action_alpha.data[i];
            }
            cand.delta_v = r.action_dv;

            const tuner::LossBreakdown lb = tuner::total_loss(ctx, task, cand, cfg);
            ++out.critic_calls;
            r.reward = -lb.total;

            tuner::LossBreakdown row = lb;
            row.iteration = rollout_index;
            out.result.trace.push_back(row);
            out.result.lr_trace.push_back(pcfg.lr);
            out.rewards.push_back(r.reward);
            batch_mean += r.reward;

            if (r.reward > best_reward) {
                best_reward = r.reward;
                out.result.best = cand;
            }
            rollouts.push_back(std::move(r));
            ++rollout_index;
        }

        batch_mean /= static_cast<double>(rollouts.size());
        if (!out.policy.baseline_ready) {
            out.policy.reward_baseline = batch_mean;
            out.policy.baseline_ready = true;
        }
        for (Rollout& r : rollouts) r.advantage = r.reward - out.policy.reward_baseline;
        ppo_update(out.policy, rollouts, pcfg.clip_eps, pcfg.lr);
        out.policy.reward_baseline = pcfg.baseline_decay * out.policy.reward_baseline +
                                     (1.0 - pcfg.baseline_decay) * batch_mean;
    }

    out.result.final_clip = genmodel::generate(gen, task, out.result.best, cfg.k_grad);
    return out;
}

}  // namespace condtune::ppo
