// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "condtune/array.hpp"
#include "condtune/autodiff.hpp"
#include "condtune/media.hpp"

namespace condtune::critic {

using media::VideoClip;
using numcore::RealArray;
using numcore::Tape;
using numcore::Value;

enum class CriticVariant { Temporal, Framewise };
enum class Schedule { Uniform, Midpoint };

/// Binary question stand-in for one prompt: a feature-space direction plus a
/// temporal pattern over the shared sinusoidal basis.
struct MotionTemplate {
    long prompt_id = 0;
    RealArray embedding;  // (d_feat, 1)
    RealArray pattern;    // (kTemporalBases, 1)
};

struct CriticOutput {
    double l_yes = 0.0;
    double l_no = 0.0;
    double p_yes = 0.0;
};

/// Frozen binary motion critic: per-frame features f = tanh(x W + b); the
/// temporal variant scores consecutive-feature differences against the
/// template's temporal pattern, the framewise variant scores frames
/// directly (permutation invariant, the appearance-only ablation).
struct MotionCritic {
    long seed = 0;
    std::size_t frame_size = 0;
    std::size_t d_feat = 16;
    double gain = 6.0;
    double bias_yes = -0.4;
    double bias_no = 0.4;
    RealArray feat_w;  // (frame_size, d_feat)
    RealArray feat_b;  // (1, d_feat)
};

MotionCritic build_critic(long seed, std::size_t frame_size);
MotionTemplate template_for_prompt(const MotionCritic& critic, long prompt_id);

/// Inverse standard-normal CDF (rational approximation, ~1e-9 accurate).
double inv_norm_cdf(double p);

/// round(linspace(0, T-1, n)), deduplicated ascending; n=1 gives [0].
std::vector<std::size_t> sample_uniform(std::size_t t, std::size_t n);

/// Deterministic normal quantiles around the clip midpoint:
/// clamp(round((T-1)/2 + sigma * inv_norm_cdf((i+0.5)/n))), deduplicated.
/// Rounding is half-to-even so symmetric quantile pairs stay symmetric.
std::vector<std::size_t> sample_midpoint(std::size_t t, std::size_t n, double sigma);

std::vector<std::size_t> sample_frames(Schedule schedule, std::size_t t, std::size_t n);

/// Binary softmax P(yes); shift-invariant in the logit pair.
double p_yes(double l_yes, double l_no);

/// L_vlm = -log(P_yes + eps).
double vlm_loss(double p, double eps);

/// Eager critic evaluation on pre-sampled frame rows (n, frame_size).
CriticOutput critic_logits(const RealArray& rows, const MotionCritic& critic,
                           const MotionTemplate& tmpl, CriticVariant variant);

/// Differentiable path: clip_rows is a (T, frame_size) tape value; returns
/// the scalar P_yes value. Mirrors critic_logits bit for bit.
Value p_yes_on_tape(Tape& tape, Value clip_rows, const std::vector<std::size_t>& indices,
                    const MotionCritic& critic, const MotionTemplate& tmpl,
                    CriticVariant variant);

/// Convenience: sample, slice, and score a whole clip.
CriticOutput score_clip(const VideoClip& clip, const MotionCritic& critic,
                        const MotionTemplate& tmpl, Schedule schedule, std::size_t n,
                        CriticVariant variant);

/// Pearson correlation between the clip's projected consecutive-difference
/// trace and the template's pattern curve at the sampled positions.
double pattern_correlation(const VideoClip& clip, const MotionCritic& critic,
                           const MotionTemplate& tmpl, Schedule schedule, std::size_t n);

}  // namespace condtune::critic
