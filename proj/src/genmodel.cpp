// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/genmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "condtune/rng.hpp"
#include "condtune/tbasis.hpp"

namespace condtune::genmodel {

namespace {

using numcore::k_add;
using numcore::k_concat0;
using numcore::k_matmul;
using numcore::k_sigmoid;
using numcore::k_slice0;
using numcore::k_tanh;
using numcore::normal_array;

// Stream ids for the generator's frozen weight draws.
enum Stream : std::uint64_t {
    kStreamAudioProj = 1,
    kStreamTextProj = 2,
    kStreamCanvasNoise = 3,
    kStreamVideoEncW = 4,
    kStreamVideoEncB = 5,
    kStreamText = 6,
    kStreamAudioSeed = 7,
    kStreamStepBase = 100,
};

RealArray reshaped(const RealArray& a, std::vector<std::size_t> shape) {
    if (numcore::shape_product(shape) != a.size()) {
        throw std::invalid_argument("reshaped: element count mismatch");
    }
    RealArray out;
    out.shape = std::move(shape);
    out.data = a.data;
    return out;
}

double logit(double p) {
    const double q = std::min(0.98, std::max(0.02, p));
    return std::log(q / (1.0 - q));
}

void check_task(const FrozenGenerator& gen, const EditTask& task) {
    const GenDims& d = gen.dims;
    if (task.source.t != d.t || task.source.h != d.h || task.source.w != d.w ||
        task.source.c != d.c) {
        throw std::invalid_argument("generate: task dims (" + std::to_string(task.source.t) +
                                    "," + std::to_string(task.source.h) + "," +
                                    std::to_string(task.source.w) + "," +
                                    std::to_string(task.source.c) +
                                    ") do not match generator dims");
    }
    if (task.preserved_frames >= task.source.t) {
        throw std::invalid_argument("generate: preserved frames K=" +
                                    std::to_string(task.preserved_frames) + " must be < T=" +
                                    std::to_string(task.source.t));
    }
    if (task.preserved_frames < 1) {
        throw std::invalid_argument("generate: preserved frames K must be >= 1");
    }
}

void check_state(const FrozenGenerator& gen, const ConditioningState& state) {
    const GenDims& d = gen.dims;
    if (state.alpha.shape != std::vector<std::size_t>{d.l_a, d.d_a}) {
        throw std::invalid_argument("generate: alpha shape " +
                                    numcore::shape_to_string(state.alpha.shape) +
                                    " does not match generator audio dims");
    }
    if (state.prompt.values().shape != std::vector<std::size_t>{d.l_t, d.d_t}) {
        throw std::invalid_argument("generate: prompt shape does not match generator text dims");
    }
    if (state.delta_v.shape != state.prompt.values().shape) {
        throw std::invalid_argument("generate: delta_v shape must equal prompt shape");
    }
}

// Initial latent canvas for the generated suffix: a linear ramp from the
// logit of the last preserved frame into frozen per-frame noise.
RealArray initial_canvas(const FrozenGenerator& gen, const EditTask& task) {
    const std::size_t d_z = gen.dims.frame_size();
    const std::size_t k = task.preserved_frames;
    const std::size_t g_count = gen.dims.t - k;
    RealArray canvas({g_count, d_z});
    const double* last = &task.source.frames.data[(k - 1) * d_z];
    for (std::size_t g = 0; g < g_count; ++g) {
        const double rho =
            1.0 - static_cast<double>(g + 1) / static_cast<double>(g_count);
        const double* noise = &gen.canvas_noise.data[(k + g) * d_z];
        for (std::size_t j = 0; j < d_z; ++j) {
            canvas.data[g * d_z + j] = rho * logit(last[j]) + (1.0 - rho) * noise[j];
        }
    }
    return canvas;
}

struct CondInputs {
    RealArray audio_frames;  // (G, d_cond)
    RealArray text_frames;   // (G, d_cond)
};

// Eager conditioning pipeline; the taped version mirrors these kernel calls
// exactly so forward values are bit-identical either way.
CondInputs conditioning_frames(const FrozenGenerator& gen, const RealArray& basis_suffix,
                               const RealArray& alpha, const RealArray& veff) {
    const RealArray a8 = reshaped(
        k_matmul(reshaped(alpha, {1, gen.dims.audio_size()}), gen.audio_proj_t),
        {kTemporalBases, gen.d_cond});
    const RealArray v8 = reshaped(
        k_matmul(reshaped(veff, {1, gen.dims.text_size()}), gen.text_proj_t),
        {kTemporalBases, gen.d_cond});
    return CondInputs{k_matmul(basis_suffix, a8), k_matmul(basis_suffix, v8)};
}

RealArray refine_step(const FrozenGenerator& gen, std::size_t s, const RealArray& z,
                      const CondInputs& cond) {
    const RealArray h = k_add(k_add(k_matmul(z, gen.vz_t[s]), k_matmul(cond.audio_frames, gen.va_t[s])),
                              k_matmul(cond.text_frames, gen.vv_t[s]));
    return k_add(z, k_tanh(k_matmul(h, gen.us_t[s])));
}

}  // namespace

void TextContext::set(std::size_t, double) {
    throw std::logic_error("TextContext: frozen context cannot be mutated; use delta_v");
}

FrozenGenerator build_generator(long seed, const GenDims& dims, std::size_t steps) {
    if (steps < 1) throw std::invalid_argument("build_generator: steps must be >= 1");
    if (!media::validate_temporal(dims.t)) {
        throw std::invalid_argument("build_generator: T=" + std::to_string(dims.t) +
                                    " violates (T-1) mod 8 == 0");
    }
    FrozenGenerator gen;
    gen.seed = seed;
    gen.dims = dims;
    gen.steps = steps;

    const std::size_t d_z = dims.frame_size();
    const std::uint64_t useed = static_cast<std::uint64_t>(seed);
    const double a_sz = static_cast<double>(dims.audio_size());
    const double t_sz = static_cast<double>(dims.text_size());

    gen.basis = basis_matrix(dims.t);
    gen.canvas_noise = normal_array({dims.t, d_z}, useed, kStreamCanvasNoise, 0.5);
    gen.audio_proj_t = normal_array({dims.audio_size(), kTemporalBases * gen.d_cond}, useed,
                                    kStreamAudioProj, 1.0 / std::sqrt(a_sz));
    gen.text_proj_t = normal_array({dims.text_size(), kTemporalBases * gen.d_cond}, useed,
                                   kStreamTextProj, 1.0 / std::sqrt(t_sz));
    gen.video_enc_w = normal_array({dims.t, dims.audio_size()}, useed, kStreamVideoEncW,
                                   1.0 / std::sqrt(static_cast<double>(dims.t)));
    gen.video_enc_b = normal_array({1, dims.audio_size()}, useed, kStreamVideoEncB, 1.0);

    const double s_vz = 1.0 / std::sqrt(static_cast<double>(d_z));
    const double s_vc = 1.0 / std::sqrt(static_cast<double>(gen.d_cond));
    const double s_us = 0.08 / std::sqrt(static_cast<double>(gen.rank));
    for (std::size_t s = 0; s < steps; ++s) {
        const std::uint64_t base = kStreamStepBase + 10 * s;
        gen.vz_t.push_back(normal_array({d_z, gen.rank}, useed, base + 0, s_vz));
        gen.va_t.push_back(normal_array({gen.d_cond, gen.rank}, useed, base + 1, s_vc));
        gen.vv_t.push_back(normal_array({gen.d_cond, gen.rank}, useed, base + 2, s_vc));
        gen.us_t.push_back(normal_array({gen.rank, d_z}, useed, base + 3, s_us));
    }
    return gen;
}

RealArray encode_audio(const FrozenGenerator& gen, const VideoClip& clip, AudioMode mode,
                       long audio_seed) {
    const GenDims& d = gen.dims;
    if (mode == AudioMode::FromAudioSeed) {
        const std::uint64_t sub = numcore::splitmix64(
            static_cast<std::uint64_t>(gen.seed) ^
            (0xa0d10ULL + static_cast<std::uint64_t>(audio_seed) * 0x9e3779b97f4a7c15ULL));
        return normal_array({d.l_a, d.d_a}, sub, kStreamAudioSeed);
    }
    if (clip.t != d.t) {
        throw std::invalid_argument("encode_audio: clip length " + std::to_string(clip.t) +
                                    " does not match generator T=" + std::to_string(d.t));
    }
    RealArray means({1, d.t});
    const std::size_t fsz = clip.frame_size();
    for (std::size_t t = 0; t < d.t; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < fsz; ++j) s += clip.frames.data[t * fsz + j];
        means.data[t] = s / static_cast<double>(fsz);
    }
    const RealArray flat = k_add(k_matmul(means, gen.video_enc_w), gen.video_enc_b);
    return reshaped(flat, {d.l_a, d.d_a});
}

TextContext encode_text(const FrozenGenerator& gen, long prompt_id) {
    if (prompt_id < 0) throw std::invalid_argument("encode_text: prompt_id must be >= 0");
    const std::uint64_t sub = numcore::splitmix64(
        static_cast<std::uint64_t>(gen.seed) ^
        (0x7e57ULL + static_cast<std::uint64_t>(prompt_id) * 0x9e3779b97f4a7c15ULL));
    return TextContext(normal_array({gen.dims.l_t, gen.dims.d_t}, sub, kStreamText));
}

RealArray initial_audio_latent(const FrozenGenerator& gen, const EditTask& task) {
    if (task.audio_latent) {
        const RealArray& latent = *task.audio_latent;
        if (latent.shape != std::vector<std::size_t>{gen.dims.l_a, gen.dims.d_a}) {
            throw std::invalid_argument("initial_audio_latent: latent shape " +
                                        numcore::shape_to_string(latent.shape) +
                                        " does not match generator audio dims");
        }
        return latent;
    }
    if (task.audio_seed) {
        return encode_audio(gen, task.source, AudioMode::FromAudioSeed, *task.audio_seed);
    }
    return encode_audio(gen, task.source, AudioMode::FromVideo);
}

ConditioningState initial_state(const FrozenGenerator& gen, const EditTask& task) {
    ConditioningState state;
    state.alpha = initial_audio_latent(gen, task);
    state.prompt = encode_text(gen, task.prompt_id);
    state.delta_v = RealArray(state.prompt.values().shape, 0.0);
    return state;
}

VideoClip generate(const FrozenGenerator& gen, const EditTask& task,
                   const ConditioningState& state, std::size_t k_grad) {
    if (k_grad < 1 || k_grad > gen.steps) {
        throw std::invalid_argument("generate: k_grad must be in [1," +
                                    std::to_string(gen.steps) + "]");
    }
    check_task(gen, task);
    check_state(gen, state);

    const std::size_t d_z = gen.dims.frame_size();
    const std::size_t k = task.preserved_frames;
    const RealArray basis_suffix = k_slice0(gen.basis, k, gen.dims.t);
    const CondInputs cond = conditioning_frames(gen, basis_suffix, state.alpha,
                                                k_add(state.prompt.values(), state.delta_v));
    RealArray z = initial_canvas(gen, task);
    for (std::size_t s = 0; s < gen.steps; ++s) z = refine_step(gen, s, z, cond);
    const RealArray suffix = k_sigmoid(z);
    const RealArray prefix =
        k_slice0(reshaped(task.source.frames, {gen.dims.t, d_z}), 0, k);
    return clip_from_rows(task.source, k_concat0({&prefix, &suffix}));
}

Value render_on_tape(Tape& tape, const FrozenGenerator& gen, const EditTask& task, Value alpha,
                     Value delta_v, std::size_t k_grad) {
    if (k_grad < 1 || k_grad > gen.steps) {
        throw std::invalid_argument("render_on_tape: k_grad must be in [1," +
                                    std::to_string(gen.steps) + "]");
    }
    check_task(gen, task);
    const std::size_t d_z = gen.dims.frame_size();
    const std::size_t k = task.preserved_frames;
    const RealArray basis_suffix = k_slice0(gen.basis, k, gen.dims.t);
    const TextContext prompt = encode_text(gen, task.prompt_id);

    // Off-tape phase: everything before the last k_grad steps is computed
    // with plain kernels, so its contribution is a constant to the tape.
    const RealArray veff_raw = k_add(prompt.values(), tape.value(delta_v));
    const CondInputs cond_raw =
        conditioning_frames(gen, basis_suffix, tape.value(alpha), veff_raw);
    RealArray z_raw = initial_canvas(gen, task);
    const std::size_t raw_steps = gen.steps - k_grad;
    for (std::size_t s = 0; s < raw_steps; ++s) z_raw = refine_step(gen, s, z_raw, cond_raw);

    // Taped phase: conditioning is rebuilt from the leaves with the same
    // kernel sequence, so values match the eager path bit for bit.
    Value audio_proj = tape.input(gen.audio_proj_t);
    Value text_proj = tape.input(gen.text_proj_t);
    Value basis_leaf = tape.input(basis_suffix);
    Value a8 = tape.reshape(
        tape.matmul(tape.reshape(alpha, {1, gen.dims.audio_size()}), audio_proj),
        {kTemporalBases, gen.d_cond});
    Value veff = tape.add(tape.input(prompt.values()), delta_v);
    Value v8 = tape.reshape(
        tape.matmul(tape.reshape(veff, {1, gen.dims.text_size()}), text_proj),
        {kTemporalBases, gen.d_cond});
    Value audio_frames = tape.matmul(basis_leaf, a8);
    Value text_frames = tape.matmul(basis_leaf, v8);

    Value z = tape.input(z_raw);
    for (std::size_t s = raw_steps; s < gen.steps; ++s) {
        Value h = tape.add(tape.add(tape.matmul(z, tape.input(gen.vz_t[s])),
                                    tape.matmul(audio_frames, tape.input(gen.va_t[s]))),
                           tape.matmul(text_frames, tape.input(gen.vv_t[s])));
        z = tape.add(z, tape.tanh(tape.matmul(h, tape.input(gen.us_t[s]))));
    }
    Value suffix = tape.sigmoid(z);
    Value prefix = tape.input(k_slice0(reshaped(task.source.frames, {gen.dims.t, d_z}), 0, k));
    return tape.concat0({prefix, suffix});
}

VideoClip baseline_edit(const FrozenGenerator& gen, const EditTask& task) {
    return generate(gen, task, initial_state(gen, task), gen.steps);
}

VideoClip clip_from_rows(const VideoClip& like, const RealArray& rows) {
    if (rows.shape != std::vector<std::size_t>{like.t, like.frame_size()}) {
        throw std::invalid_argument("clip_from_rows: row matrix shape " +
                                    numcore::shape_to_string(rows.shape) + " does not match clip");
    }
    VideoClip clip;
    clip.t = like.t;
    clip.h = like.h;
    clip.w = like.w;
    clip.c = like.c;
    clip.fps = like.fps;
    clip.frames = reshaped(rows, {like.t, like.h, like.w, like.c});
    clip.validate();
    return clip;
}

}  // namespace condtune::genmodel
