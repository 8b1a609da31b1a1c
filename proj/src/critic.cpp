// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/critic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "condtune/rng.hpp"
#include "condtune/tbasis.hpp"

namespace condtune::critic {

namespace {

using numcore::k_add;
using numcore::k_broadcast0;
using numcore::k_concat0;
using numcore::k_matmul;
using numcore::k_mean;
using numcore::k_mul;
using numcore::k_slice0;
using numcore::k_sub;
using numcore::k_tanh;
using numcore::normal_array;

enum Stream : std::uint64_t {
    kStreamFeatW = 11,
    kStreamFeatB = 12,
    kStreamEmbedding = 13,
    kStreamPattern = 14,
};

// Projected consecutive-difference score (temporal) or frame score
// (framewise); shared by the eager and taped paths via identical kernels.
double raw_score(const RealArray& rows, const MotionCritic& critic, const MotionTemplate& tmpl,
                 CriticVariant variant) {
    const std::size_t n = rows.shape[0];
    const RealArray f = k_tanh(k_add(k_matmul(rows, critic.feat_w),
                                     k_broadcast0(critic.feat_b, n)));
    if (variant == CriticVariant::Framewise) {
        return k_mean(k_matmul(f, tmpl.embedding));
    }
    const RealArray diffs = k_sub(k_slice0(f, 1, n), k_slice0(f, 0, n - 1));
    const RealArray proj = k_matmul(diffs, tmpl.embedding);
    const RealArray pat = k_matmul(basis_matrix(n - 1), tmpl.pattern);
    return k_mean(k_mul(pat, proj));
}

void check_rows(const RealArray& rows, const MotionCritic& critic, CriticVariant variant) {
    if (rows.rank() != 2 || rows.shape[1] != critic.frame_size) {
        throw std::invalid_argument("critic: rows must be (n, " +
                                    std::to_string(critic.frame_size) + ")");
    }
    const std::size_t min_frames = variant == CriticVariant::Temporal ? 2 : 1;
    if (rows.shape[0] < min_frames) {
        throw std::invalid_argument("critic: need at least " + std::to_string(min_frames) +
                                    " sampled frames for this variant");
    }
}

}  // namespace

MotionCritic build_critic(long seed, std::size_t frame_size) {
    if (frame_size == 0) throw std::invalid_argument("build_critic: empty frames");
    MotionCritic critic;
    critic.seed = seed;
    critic.frame_size = frame_size;
    const std::uint64_t useed = static_cast<std::uint64_t>(seed);
    critic.feat_w = normal_array({frame_size, critic.d_feat}, useed, kStreamFeatW,
                                 1.0 / std::sqrt(static_cast<double>(frame_size)));
    critic.feat_b = normal_array({1, critic.d_feat}, useed, kStreamFeatB, 0.3);
    return critic;
}

MotionTemplate template_for_prompt(const MotionCritic& critic, long prompt_id) {
    if (prompt_id < 0) throw std::invalid_argument("template_for_prompt: prompt_id must be >= 0");
    const std::uint64_t sub = numcore::splitmix64(
        static_cast<std::uint64_t>(critic.seed) ^
        (0xc21716ULL + static_cast<std::uint64_t>(prompt_id) * 0x9e3779b97f4a7c15ULL));
    MotionTemplate tmpl;
    tmpl.prompt_id = prompt_id;
    tmpl.embedding = normal_array({critic.d_feat, 1}, sub, kStreamEmbedding,
                                  1.0 / std::sqrt(static_cast<double>(critic.d_feat)));
    tmpl.pattern = normal_array({kTemporalBases, 1}, sub, kStreamPattern);
    return tmpl;
}

double inv_norm_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("inv_norm_cdf: p must be in (0,1), got " + std::to_string(p));
    }
    if (p > 0.5) return -inv_norm_cdf(1.0 - p);

    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::vector<std::size_t> sample_uniform(std::size_t t, std::size_t n) {
    if (n < 1 || n > t) throw std::invalid_argument("sample_uniform: need 1 <= n <= T");
    std::vector<std::size_t> idx;
    if (n == 1) {
        idx.push_back(0);
        return idx;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) * static_cast<double>(t - 1) /
                         static_cast<double>(n - 1);
        idx.push_back(static_cast<std::size_t>(std::llround(x)));
    }
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

std::vector<std::size_t> sample_midpoint(std::size_t t, std::size_t n, double sigma) {
    if (n < 1 || n > t) throw std::invalid_argument("sample_midpoint: need 1 <= n <= T");
    if (sigma <= 0.0) throw std::invalid_argument("sample_midpoint: sigma must be positive");
    const double mu = static_cast<double>(t - 1) / 2.0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        // Half-to-even rounding keeps symmetric quantile pairs symmetric
        // about the midpoint (FE_TONEAREST is the untouched default).
        double x = std::nearbyint(mu + sigma * inv_norm_cdf(p));
        x = std::min(static_cast<double>(t - 1), std::max(0.0, x));
        idx.push_back(static_cast<std::size_t>(x));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

std::vector<std::size_t> sample_frames(Schedule schedule, std::size_t t, std::size_t n) {
    if (schedule == Schedule::Uniform) return sample_uniform(t, n);
    return sample_midpoint(t, n, static_cast<double>(t - 1) / 6.0);
}

double p_yes(double l_yes, double l_no) {
    if (!std::isfinite(l_yes) || !std::isfinite(l_no)) {
        throw std::invalid_argument("p_yes: logits must be finite");
    }
    const double d = l_yes - l_no;
    if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
    const double e = std::exp(d);
    return e / (1.0 + e);
}

double vlm_loss(double p, double eps) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("vlm_loss: P_yes must be in [0,1]");
    if (eps <= 0.0) throw std::invalid_argument("vlm_loss: eps must be positive");
    return -std::log(p + eps);
}

CriticOutput critic_logits(const RealArray& rows, const MotionCritic& critic,
                           const MotionTemplate& tmpl, CriticVariant variant) {
    check_rows(rows, critic, variant);
    const double s = raw_score(rows, critic, tmpl, variant);
    CriticOutput out;
    out.l_yes = critic.gain * s + critic.bias_yes;
    out.l_no = -critic.gain * s + critic.bias_no;
    out.p_yes = p_yes(out.l_yes, out.l_no);
    return out;
}

Value p_yes_on_tape(Tape& tape, Value clip_rows, const std::vector<std::size_t>& indices,
                    const MotionCritic& critic, const MotionTemplate& tmpl,
                    CriticVariant variant) {
    const std::size_t min_frames = variant == CriticVariant::Temporal ? 2 : 1;
    if (indices.size() < min_frames) {
        throw std::invalid_argument("p_yes_on_tape: too few sampled frames");
    }
    std::vector<Value> picked;
    for (std::size_t i : indices) picked.push_back(tape.slice0(clip_rows, i, i + 1));
    Value rows = tape.concat0(picked);
    const std::size_t n = indices.size();

    Value f = tape.tanh(tape.add(tape.matmul(rows, tape.input(critic.feat_w)),
                                 tape.broadcast0(tape.input(critic.feat_b), n)));
    Value score;
    if (variant == CriticVariant::Framewise) {
        score = tape.mean(tape.matmul(f, tape.input(tmpl.embedding)));
    } else {
        Value diffs = tape.sub(tape.slice0(f, 1, n), tape.slice0(f, 0, n - 1));
        Value proj = tape.matmul(diffs, tape.input(tmpl.embedding));
        Value pat = tape.matmul(tape.input(basis_matrix(n - 1)), tape.input(tmpl.pattern));
        score = tape.mean(tape.mul(pat, proj));
    }
    Value l_yes = tape.add_const(tape.scale(score, critic.gain), critic.bias_yes);
    Value l_no = tape.add_const(tape.scale(score, -critic.gain), critic.bias_no);
    return tape.sigmoid(tape.sub(l_yes, l_no));
}

CriticOutput score_clip(const VideoClip& clip, const MotionCritic& critic,
                        const MotionTemplate& tmpl, Schedule schedule, std::size_t n,
                        CriticVariant variant) {
    if (clip.frame_size() != critic.frame_size) {
        throw std::invalid_argument("score_clip: clip frame size does not match critic");
    }
    const std::vector<std::size_t> indices = sample_frames(schedule, clip.t, n);
    RealArray flat;
    flat.shape = {clip.t, clip.frame_size()};
    flat.data = clip.frames.data;
    std::vector<RealArray> picked;
    std::vector<const RealArray*> parts;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(k_slice0(flat, i, i + 1));
    for (const RealArray& r : picked) parts.push_back(&r);
    return critic_logits(k_concat0(parts), critic, tmpl, variant);
}

double pattern_correlation(const VideoClip& clip, const MotionCritic& critic,
                           const MotionTemplate& tmpl, Schedule schedule, std::size_t n) {
    const std::vector<std::size_t> indices = sample_frames(schedule, clip.t, n);
    if (indices.size() < 3) {
        throw std::invalid_argument("pattern_correlation: need at least 3 distinct frames");
    }
    RealArray flat;
    flat.shape = {clip.t, clip.frame_size()};
    flat.data = clip.frames.data;
    std::vector<RealArray> picked;
    std::vector<const RealArray*> parts;
    for (std::size_t i : indices) picked.push_back(k_slice0(flat, i, i + 1));
    for (const RealArray& r : picked) parts.push_back(&r);
    const RealArray rows = k_concat0(parts);
    const std::size_t m = indices.size();
    const RealArray f = k_tanh(k_add(k_matmul(rows, critic.feat_w),
                                     k_broadcast0(critic.feat_b, m)));
    const RealArray diffs = k_sub(k_slice0(f, 1, m), k_slice0(f, 0, m - 1));
    const RealArray proj = k_matmul(diffs, tmpl.embedding);
    const RealArray pat = k_matmul(basis_matrix(m - 1), tmpl.pattern);

    const std::size_t len = m - 1;
    double mean_p = 0.0, mean_q = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        mean_p += proj.data[i];
        mean_q += pat.data[i];
    }
    mean_p /= static_cast<double>(len);
    mean_q /= static_cast<double>(len);
    double cov = 0.0, var_p = 0.0, var_q = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double dp = proj.data[i] - mean_p;
        const double dq = pat.data[i] - mean_q;
        cov += dp * dq;
        var_p += dp * dp;
        var_q += dq * dq;
    }
    if (var_p <= 0.0 || var_q <= 0.0) return 0.0;
    return cov / std::sqrt(var_p * var_q);
}

}  // namespace condtune::critic
