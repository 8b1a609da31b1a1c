// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "condtune/array.hpp"
#include "condtune/autodiff.hpp"
#include "condtune/media.hpp"

namespace condtune::metrics {

using media::VideoClip;
using numcore::RealArray;
using numcore::Tape;
using numcore::Value;

inline constexpr long kDefaultPerceptualSeed = 1977;

/// Fixed seeded random-feature perceptual distance (three scales of 3x3
/// convolutions, tanh, per-location channel normalization, squared-diff
/// spatial mean, summed over scales). Stands in for a pretrained perceptual
/// backbone; every report that uses it says so in its header row.
struct PerceptualNet {
    long seed = kDefaultPerceptualSeed;
    std::size_t channels = 3;
    std::size_t filters = 8;
    std::size_t scales = 3;
    std::vector<RealArray> conv_w;  // per scale (filters, 3, 3, channels)
    std::vector<RealArray> conv_b;  // per scale (filters)
};

PerceptualNet build_perceptual(long seed, std::size_t channels);

/// Random-feature perceptual distance between two frames (H,W,C) on tape.
Value frpd_frame_on_tape(Tape& tape, Value frame_a, Value frame_b, const PerceptualNet& net);

double frpd_frame(const RealArray& frame_a, const RealArray& frame_b, const PerceptualNet& net);

/// Clip distance: mean of per-frame distances.
double frpd(const VideoClip& a, const VideoClip& b, const PerceptualNet& net);

/// Multi-scale SSIM in [0,1]; uniform window of min(8, dims), K1=0.01,
/// K2=0.03, contrast-structure at every scale, luminance at the coarsest.
double ms_ssim(const VideoClip& a, const VideoClip& b, std::size_t scales);
double ms_ssim_frame(const RealArray& a, const RealArray& b, std::size_t scales);

/// Weighted background-change combination over the masked region:
/// 0.5 * perceptual + 0.3 * (1 - ms_ssim) + 0.2 * mean absolute difference.
double bg_combine(double d_perceptual, double ms_ssim_value, double d_l1);

/// mask is (H,W) with entries exactly 0 or 1 (1 = background). Pixels off
/// the mask are zeroed for the perceptual and structural terms; the absolute
/// difference is averaged over background pixels only.
double bg_distance(const VideoClip& src, const VideoClip& edit, const RealArray& bg_mask,
                   const PerceptualNet& net);

struct DriftReport {
    std::vector<std::pair<int, int>> shifts;  // per consecutive pair (dx, dy)
    double mean_magnitude = 0.0;
};

/// Exhaustive circular integer-shift search over [-4,4]^2 per consecutive
/// frame pair, minimizing mean squared difference; exact for pure
/// translations with wraparound.
DriftReport global_drift(const VideoClip& clip);

/// 1 / (1 + CV) of residual motion energy after removing the dominant shift
/// per pair; 1.0 for static or perfectly constant motion.
double motion_flatness(const VideoClip& clip);

/// 0.35 EA + 0.25 MQ + 0.20 SP + 0.20 VQ, arguments in [0,10].
double vlm_score(double ea, double mq, double sp, double vq);

/// Weighted average of the six modality sub-scores
/// (align, motion, natural, preserve, visual, local) with weights
/// 0.25, 0.25, 0.20, 0.15, 0.10, 0.05.
double modality_score(double align, double motion, double natural, double preserve,
                      double visual, double local);

struct SurveyResponse {
    std::string rater;
    std::string scenario;
    std::string method;
    int rank = 0;  // 1..3, or 0 for unranked
    bool achieved = false;
};

struct SurveyStats {
    std::string method;
    std::string scenario;
    double win = 0.0;
    double top3 = 0.0;
    double avg = 0.0;
    double achieved = 0.0;
    std::size_t raters = 0;
};

/// Per (method, scenario): win = P(rank 1), top3 = P(rank in 1..3),
/// avg = mean of 3/2/1/0 points, achieved = mean flag. Results sorted by
/// scenario then method. Duplicate ranks per rater/scenario are an error.
std::vector<SurveyStats> survey_aggregate(const std::vector<SurveyResponse>& responses);

/// Per-scenario 0..10 min-max scaling; a constant vector maps to all zeros.
std::vector<double> minmax_scale_0_10(const std::vector<double>& values);

}  // namespace condtune::metrics
