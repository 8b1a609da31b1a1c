// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "condtune/autodiff.hpp"
#include "condtune/critic.hpp"
#include "condtune/genmodel.hpp"
#include "condtune/media.hpp"
#include "condtune/metrics.hpp"

namespace condtune::tuner {

using genmodel::ConditioningState;
using media::EditTask;
using media::VideoClip;
using numcore::RealArray;
using numcore::Tape;
using numcore::Value;

enum class StopReason { Budget, Patience };

struct TuningConfig {
    double lambda_alpha = 0.01;
    double lambda_v = 0.001;
    double lambda_lpips = 1.0;
    double lambda_temp = 1.0;
    double eps = 1e-6;
    double lr0 = 5e-3;
    std::size_t max_iters = 30;
    std::size_t patience = 15;
    std::size_t k_grad = 8;
    critic::Schedule schedule = critic::Schedule::Uniform;
    std::size_t n_frames = 8;
    critic::CriticVariant variant = critic::CriticVariant::Temporal;
    std::uint64_t seed = 0;
};

void validate_config(const TuningConfig& cfg);

/// l_lpips and l_temp hold the lambda-weighted contributions, so
/// total = l_vlm + l_latent + l_lpips + l_temp as composed on the tape.
struct LossBreakdown {
    double l_vlm = 0.0;
    double l_latent = 0.0;
    double l_lpips = 0.0;
    double l_temp = 0.0;
    double total = 0.0;
    std::size_t iteration = 0;
};

struct TuneResult {
    ConditioningState best;
    std::vector<LossBreakdown> trace;
    std::vector<double> lr_trace;  // parallel to trace
    VideoClip final_clip;
    VideoClip baseline_clip;
    StopReason stop_reason = StopReason::Budget;
};

struct TransferReport {
    double p_yes_transferred = 0.0;
    double p_yes_baseline = 0.0;
    double gap = 0.0;
    VideoClip transferred;
};

/// The frozen models one tuning run operates against.
struct TuneContext {
    const genmodel::FrozenGenerator* gen = nullptr;
    const critic::MotionCritic* critic_model = nullptr;
    const metrics::PerceptualNet* perceptual = nullptr;
};

/// lambda_alpha * ||alpha - alpha0||^2 + lambda_v * ||delta_v||^2.
double latent_reg(const RealArray& alpha, const RealArray& alpha0, const RealArray& delta_v,
                  double lambda_alpha, double lambda_v);

/// Mean perceptual distance over n_pairs consecutive frame pairs chosen by a
/// deterministic uniform stride over the T-1 pair slots.
double temporal_distance(const VideoClip& clip, std::size_t n_pairs,
                         const metrics::PerceptualNet& net);

/// max(0, D_temp(edit) - D_temp(base)) over all consecutive pairs.
double temporal_preserve(const VideoClip& edit, const VideoClip& base,
                         const metrics::PerceptualNet& net);

/// lambda_lpips * FRPD(edit, base) + lambda_temp * temporal_preserve.
double preserve_loss(const VideoClip& edit, const VideoClip& base, double lambda_lpips,
                     double lambda_temp, const metrics::PerceptualNet& net);

struct TotalLossGraph {
    Value alpha;
    Value delta_v;
    Value rows;
    Value l_vlm;
    Value l_latent;
    Value l_lpips;
    Value l_temp;
    Value total;
};

/// Builds the full differentiable objective on the tape: render, critic
/// margin, latent anchor, and the preservation terms against the prompt-only
/// baseline. Gradients flow to alpha and delta_v only.
TotalLossGraph total_loss_on_tape(Tape& tape, const TuneContext& ctx, const EditTask& task,
                                  const ConditioningState& state, const TuningConfig& cfg);

/// Same composition hung off caller-owned leaves (for gradient checking).
TotalLossGraph total_loss_from_leaves(Tape& tape, const TuneContext& ctx, const EditTask& task,
                                      Value alpha, Value delta_v, const TuningConfig& cfg);

LossBreakdown total_loss(const TuneContext& ctx, const EditTask& task,
                         const ConditioningState& state, const TuningConfig& cfg);

/// Adam with a cosine learning-rate schedule, early stopping on the total
/// objective, best-checkpoint selection (earliest minimum), and a final
/// re-render from the winning state.
TuneResult tune(const TuneContext& ctx, const EditTask& task, const TuningConfig& cfg);

/// Renders the target with transferred (alpha*, delta_v*) and no further
/// optimization; reports critic approval against the target's own baseline.
TransferReport transfer(const TuneContext& ctx, const ConditioningState& tuned,
                        const EditTask& target, const TuningConfig& cfg);

/// CSV columns: iter,l_vlm,l_latent,l_lpips,l_temp,total,lr. When rewards is
/// non-null (one entry per trace row) a trailing reward column is appended.
std::string trace_csv_text(const TuneResult& result, const std::vector<double>* rewards = nullptr);

void write_trace_csv(const std::string& path, const TuneResult& result,
                     const std::vector<double>* rewards = nullptr);

}  // namespace condtune::tuner
