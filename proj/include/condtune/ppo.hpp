// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "condtune/tuner.hpp"

namespace condtune::ppo {

using genmodel::ConditioningState;
using media::EditTask;
using numcore::RealArray;

/// Counter-based PRNG streams for action noise; disjoint from the generator,
/// critic, and perceptual weight streams.
inline constexpr std::uint64_t kStreamActionAlpha = 51;
inline constexpr std::uint64_t kStreamActionDv = 52;

struct PpoConfig {
    double clip_eps = 0.2;
    double lr = 5e-3;
    double init_log_std = -2.995732273553991;  // log(0.05)
    std::size_t rollouts_per_update = 4;
    double baseline_decay = 0.9;
};

/// Diagonal Gaussian over (delta-alpha, delta-v) actions plus a running
/// scalar reward baseline (EMA, seeded from the first batch mean).
struct GaussianPolicy {
    RealArray mean_alpha;
    RealArray mean_dv;
    RealArray log_std_alpha;
    RealArray log_std_dv;
    double reward_baseline = 0.0;
    bool baseline_ready = false;
};

struct Rollout {
    RealArray action_alpha;
    RealArray action_dv;
    double log_prob = 0.0;
    double reward = 0.0;
    double advantage = 0.0;
};

GaussianPolicy make_policy(const RealArray& alpha_like, const RealArray& dv_like,
                           const PpoConfig& cfg);

/// Exact diagonal-Gaussian log-density of the action under the policy.
double log_prob(const GaussianPolicy& policy, const RealArray& action_alpha,
                const RealArray& action_dv);

/// Draws action = mean + exp(log_std) * z with counter-based noise, so the
/// k-th rollout of a seed is reproducible in isolation.
Rollout sample_action(const GaussianPolicy& policy, std::uint64_t seed, std::size_t rollout_index);

/// r = -(L_vlm + L_latent + L_preserve); shares total_loss with the gradient
/// tuner, so the duality holds to the last bit.
double reward(const tuner::TuneContext& ctx, const EditTask& task, const ConditioningState& state,
              const tuner::TuningConfig& cfg);

double clipped_ratio(double ratio, double clip_eps);

/// min(ratio * adv, clip(ratio) * adv): the pessimistic clipped surrogate.
double surrogate(double ratio, double advantage, double clip_eps);

/// One ascent step on the mean clipped surrogate over the batch; advantages
/// are read from the rollouts. Gradients flow through the unclipped branch
/// unless the clipped branch is strictly better.
void ppo_update(GaussianPolicy& policy, const std::vector<Rollout>& rollouts, double clip_eps,
                double lr);

struct PpoResult {
    tuner::TuneResult result;
    std::vector<double> rewards;      // one per scored candidate
    std::size_t critic_calls = 0;
    GaussianPolicy policy;
};

/// Policy-gradient search under an exact critic-call budget: every scored
/// candidate costs one call, recorded calls always equal the budget, and the
/// best-reward state is re-rendered into TuneResult form.
PpoResult ppo_tune(const tuner::TuneContext& ctx, const EditTask& task, std::size_t budget,
                   const tuner::TuningConfig& cfg, const PpoConfig& pcfg);

}  // namespace condtune::ppo
