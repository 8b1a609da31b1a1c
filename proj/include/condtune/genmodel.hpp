// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "condtune/array.hpp"
#include "condtune/autodiff.hpp"
#include "condtune/media.hpp"

namespace condtune::genmodel {

using media::EditTask;
using media::VideoClip;
using numcore::RealArray;
using numcore::Tape;
using numcore::Value;

struct GenDims {
    std::size_t t = 17;
    std::size_t h = 16;
    std::size_t w = 16;
    std::size_t c = 3;
    std::size_t l_a = 8;
    std::size_t d_a = 16;
    std::size_t l_t = 8;
    std::size_t d_t = 16;

    std::size_t frame_size() const { return h * w * c; }
    std::size_t audio_size() const { return l_a * d_a; }
    std::size_t text_size() const { return l_t * d_t; }
};

/// Frozen text conditioning v_p. The encoded values are immutable; residual
/// edits go through ConditioningState.delta_v instead.
class TextContext {
public:
    TextContext() = default;
    explicit TextContext(RealArray values) : values_(std::move(values)) {}

    const RealArray& values() const { return values_; }
    void set(std::size_t i, double v);

private:
    RealArray values_;
};

/// The tunable conditioning pair (alpha, delta_v) plus the frozen prompt
/// context; the effective text context is prompt + delta_v.
struct ConditioningState {
    RealArray alpha;       // (L_a, D_a)
    TextContext prompt;    // (L_t, D_t), frozen
    RealArray delta_v;     // (L_t, D_t)
};

/// Frozen seeded editor: S refinement steps over a per-frame latent canvas,
/// each step adding tanh(W_s [z; b(t) P_a(alpha); b(t) P_v(v_p + delta_v)])
/// with W_s stored as a low-rank factor pair and b(t) a fixed sinusoidal
/// temporal basis bank. Frames [0,K) of the output are the source bits.
struct FrozenGenerator {
    long seed = 0;
    GenDims dims;
    std::size_t steps = 30;
    std::size_t rank = 24;
    std::size_t d_cond = 16;

    RealArray basis;           // (T, 8)
    RealArray canvas_noise;    // (T, frame_size)
    RealArray audio_proj_t;    // (audio_size, 8 * d_cond)
    RealArray text_proj_t;     // (text_size, 8 * d_cond)
    std::vector<RealArray> vz_t;  // per step (frame_size, rank)
    std::vector<RealArray> va_t;  // per step (d_cond, rank)
    std::vector<RealArray> vv_t;  // per step (d_cond, rank)
    std::vector<RealArray> us_t;  // per step (rank, frame_size)
    RealArray video_enc_w;     // (T, audio_size)
    RealArray video_enc_b;     // (1, audio_size)
};

enum class AudioMode { FromAudioSeed, FromVideo };

FrozenGenerator build_generator(long seed, const GenDims& dims, std::size_t steps);

/// FromAudioSeed draws the stand-in source-audio latent from audio_seed;
/// FromVideo derives it from per-frame means through a frozen projection
/// (the no-source-audio path).
RealArray encode_audio(const FrozenGenerator& gen, const VideoClip& clip, AudioMode mode,
                       long audio_seed = 0);

TextContext encode_text(const FrozenGenerator& gen, long prompt_id);

/// Task policy for the initial audio latent alpha0: explicit latent file if
/// present, else the task's audio seed, else the from-video path.
RealArray initial_audio_latent(const FrozenGenerator& gen, const EditTask& task);

ConditioningState initial_state(const FrozenGenerator& gen, const EditTask& task);

/// Eager render. k_grad has no effect on values (gradient truncation is a
/// backward-only concept) but is validated against [1, S].
VideoClip generate(const FrozenGenerator& gen, const EditTask& task,
                   const ConditioningState& state, std::size_t k_grad);

/// Differentiable render: returns a (T, frame_size) matrix of values in
/// [0,1]. Steps before the last k_grad run off-tape on the same kernels, so
/// forward values are bit-identical for every k_grad.
Value render_on_tape(Tape& tape, const FrozenGenerator& gen, const EditTask& task, Value alpha,
                     Value delta_v, std::size_t k_grad);

VideoClip baseline_edit(const FrozenGenerator& gen, const EditTask& task);

/// Reassembles a clip from a (T, frame_size) row matrix using the source's
/// dims and fps.
VideoClip clip_from_rows(const VideoClip& like, const RealArray& rows);

}  // namespace condtune::genmodel
