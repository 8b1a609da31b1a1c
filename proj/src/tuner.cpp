// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/tuner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "condtune/optim.hpp"

namespace condtune::tuner {

namespace {

RealArray frame_array(const VideoClip& clip, std::size_t t) {
    RealArray frame;
    frame.shape = {clip.h, clip.w, clip.c};
    const std::size_t fsz = clip.frame_size();
    frame.data.assign(clip.frames.data.begin() + static_cast<std::ptrdiff_t>(t * fsz),
                      clip.frames.data.begin() + static_cast<std::ptrdiff_t>((t + 1) * fsz));
    return frame;
}

Value mean_pair_distance_on_tape(Tape& tape, const std::vector<Value>& frames,
                                 const std::vector<std::size_t>& pair_slots,
                                 const metrics::PerceptualNet& net) {
    Value acc = metrics::frpd_frame_on_tape(tape, frames[pair_slots[0]],
                                            frames[pair_slots[0] + 1], net);
    for (std::size_t i = 1; i < pair_slots.size(); ++i) {
        acc = tape.add(acc, metrics::frpd_frame_on_tape(tape, frames[pair_slots[i]],
                                                        frames[pair_slots[i] + 1], net));
    }
    return tape.scale(acc, 1.0 / static_cast<double>(pair_slots.size()));
}

std::vector<std::size_t> all_pair_slots(std::size_t t) {
    std::vector<std::size_t> slots(t - 1);
    for (std::size_t i = 0; i + 1 < t; ++i) slots[i] = i;
    return slots;
}

void check_same_dims(const VideoClip& a, const VideoClip& b, const char* where) {
    if (a.t != b.t || a.h != b.h || a.w != b.w || a.c != b.c) {
        throw std::invalid_argument(std::string(where) + ": clip dims differ");
    }
}

void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

void validate_config(const TuningConfig& cfg) {
    const double lambdas[] = {cfg.lambda_alpha, cfg.lambda_v, cfg.lambda_lpips, cfg.lambda_temp};
    for (double l : lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("tuning config: lambdas must be finite and >= 0");
        }
    }
    if (!(cfg.eps > 0.0)) throw std::invalid_argument("tuning config: eps must be > 0");
    if (!(cfg.lr0 >= 0.0) || !std::isfinite(cfg.lr0)) {
        throw std::invalid_argument("tuning config: lr0 must be finite and >= 0");
    }
    if (cfg.patience > cfg.max_iters) {
        throw std::invalid_argument("tuning config: patience must not exceed max_iters");
    }
    if (cfg.k_grad < 1) throw std::invalid_argument("tuning config: k_grad must be >= 1");
    if (cfg.n_frames < 1) throw std::invalid_argument("tuning config: n_frames must be >= 1");
}

double latent_reg(const RealArray& alpha, const RealArray& alpha0, const RealArray& delta_v,
                  double lambda_alpha, double lambda_v) {
    if (!alpha.same_shape(alpha0)) throw std::invalid_argument("latent_reg: alpha shape mismatch");
    double sa = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double d = alpha.data[i] - alpha0.data[i];
        sa += d * d;
    }
    double sv = 0.0;
    for (double v : delta_v.data) sv += v * v;
    return lambda_alpha * sa + lambda_v * sv;
}

double temporal_distance(const VideoClip& clip, std::size_t n_pairs,
                         const metrics::PerceptualNet& net) {
    if (clip.t < 2) throw std::invalid_argument("temporal_distance: need at least two frames");
    if (n_pairs < 1 || n_pairs > clip.t - 1) {
        throw std::invalid_argument("temporal_distance: n_pairs out of [1, T-1]");
    }
    const std::vector<std::size_t> slots = critic::sample_uniform(clip.t - 1, n_pairs);
    Tape tape;
    std::vector<Value> frames(clip.t);
    for (std::size_t t = 0; t < clip.t; ++t) frames[t] = tape.input(frame_array(clip, t));
    return tape.value(mean_pair_distance_on_tape(tape, frames, slots, net)).data[0];
}

double temporal_preserve(const VideoClip& edit, const VideoClip& base,
                         const metrics::PerceptualNet& net) {
    check_same_dims(edit, base, "temporal_preserve");
    const std::size_t n = edit.t - 1;
    return std::max(0.0, temporal_distance(edit, n, net) - temporal_distance(base, n, net));
}

double preserve_loss(const VideoClip& edit, const VideoClip& base, double lambda_lpips,
                     double lambda_temp, const metrics::PerceptualNet& net) {
    check_same_dims(edit, base, "preserve_loss");
    const double a = lambda_lpips * metrics::frpd(edit, base, net);
    const double b = lambda_temp * temporal_preserve(edit, base, net);
    return a + b;
}

TotalLossGraph total_loss_from_leaves(Tape& tape, const TuneContext& ctx, const EditTask& task,
                                      Value alpha, Value delta_v, const TuningConfig& cfg) {
    validate_config(cfg);
    const genmodel::FrozenGenerator& gen = *ctx.gen;
    const std::size_t t_frames = task.source.t;
    const std::size_t h = task.source.h, w = task.source.w, c = task.source.c;

    const VideoClip baseline = genmodel::baseline_edit(gen, task);
    const double d_temp_base =
        temporal_distance(baseline, t_frames - 1, *ctx.perceptual);
    const RealArray alpha0 = genmodel::initial_audio_latent(gen, task);

    TotalLossGraph g;
    g.alpha = alpha;
    g.delta_v = delta_v;
    g.rows = genmodel::render_on_tape(tape, gen, task, g.alpha, g.delta_v, cfg.k_grad);

    const critic::MotionTemplate tmpl =
        critic::template_for_prompt(*ctx.critic_model, task.prompt_id);
    const std::vector<std::size_t> indices =
        critic::sample_frames(cfg.schedule, t_frames, cfg.n_frames);
    const Value p =
        critic::p_yes_on_tape(tape, g.rows, indices, *ctx.critic_model, tmpl, cfg.variant);
    g.l_vlm = tape.scale(tape.log(tape.add_const(p, cfg.eps)), -1.0);

    const Value alpha0_leaf = tape.input(alpha0);
    const Value sum_alpha = tape.sum(tape.square(tape.sub(g.alpha, alpha0_leaf)));
    const Value sum_v = tape.sum(tape.square(g.delta_v));
    g.l_latent = tape.add(tape.scale(sum_alpha, cfg.lambda_alpha),
                          tape.scale(sum_v, cfg.lambda_v));

    std::vector<Value> frames(t_frames);
    std::vector<Value> base_frames(t_frames);
    for (std::size_t t = 0; t < t_frames; ++t) {
        frames[t] = tape.reshape(tape.slice0(g.rows, t, t + 1), {h, w, c});
        base_frames[t] = tape.input(frame_array(baseline, t));
    }

    Value facc = metrics::frpd_frame_on_tape(tape, frames[0], base_frames[0], *ctx.perceptual);
    for (std::size_t t = 1; t < t_frames; ++t) {
        facc = tape.add(
            facc, metrics::frpd_frame_on_tape(tape, frames[t], base_frames[t], *ctx.perceptual));
    }
    const Value frpd_clip = tape.scale(facc, 1.0 / static_cast<double>(t_frames));

    const Value d_temp_hat =
        mean_pair_distance_on_tape(tape, frames, all_pair_slots(t_frames), *ctx.perceptual);
    const Value hinge = tape.max_const(tape.add_const(d_temp_hat, -d_temp_base), 0.0);

    g.l_lpips = tape.scale(frpd_clip, cfg.lambda_lpips);
    g.l_temp = tape.scale(hinge, cfg.lambda_temp);
    g.total = tape.add(tape.add(tape.add(g.l_vlm, g.l_latent), g.l_lpips), g.l_temp);
    return g;
}

TotalLossGraph total_loss_on_tape(Tape& tape, const TuneContext& ctx, const EditTask& task,
                                  const ConditioningState& state, const TuningConfig& cfg) {
    return total_loss_from_leaves(tape, ctx, task, tape.input(state.alpha),
                                  tape.input(state.delta_v), cfg);
}

LossBreakdown total_loss(const TuneContext& ctx, const EditTask& task,
                         const ConditioningState& state, const TuningConfig& cfg) {
    Tape tape;
    const TotalLossGraph g = total_loss_on_tape(tape, ctx, task, state, cfg);
    LossBreakdown out;
    out.l_vlm = tape.value(g.l_vlm).data[0];
    out.l_latent = tape.value(g.l_latent).data[0];
    out.l_lpips = tape.value(g.l_lpips).data[0];
    out.l_temp = tape.value(g.l_temp).data[0];
    out.total = tape.value(g.total).data[0];
    return out;
}

TuneResult tune(const TuneContext& ctx, const EditTask& task, const TuningConfig& cfg) {
    validate_config(cfg);
    const genmodel::FrozenGenerator& gen = *ctx.gen;

    ConditioningState state = genmodel::initial_state(gen, task);
    TuneResult res;
    res.baseline_clip = genmodel::baseline_edit(gen, task);
    res.best = state;
    res.stop_reason = StopReason::Budget;

    std::vector<RealArray> params = {state.alpha, state.delta_v};
    numcore::AdamState opt = numcore::AdamState::for_params(params);
    double best_total = std::numeric_limits<double>::infinity();
    std::size_t since_improve = 0;

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        const double lr = numcore::cosine_lr(static_cast<long>(iter),
                                             static_cast<long>(cfg.max_iters), cfg.lr0);
        state.alpha = params[0];
        state.delta_v = params[1];

        Tape tape;
        const TotalLossGraph g = total_loss_on_tape(tape, ctx, task, state, cfg);
        LossBreakdown lb;
        lb.l_vlm = tape.value(g.l_vlm).data[0];
        lb.l_latent = tape.value(g.l_latent).data[0];
        lb.l_lpips = tape.value(g.l_lpips).data[0];
        lb.l_temp = tape.value(g.l_temp).data[0];
        lb.total = tape.value(g.total).data[0];
        lb.iteration = iter;
        if (!std::isfinite(lb.total)) {
            throw std::runtime_error("tune: non-finite total at iteration " +
                                     std::to_string(iter));
        }
        res.trace.push_back(lb);
        res.lr_trace.push_back(lr);

        if (lb.total < best_total) {
            best_total = lb.total;
            res.best = state;
            since_improve = 0;
        } else {
            ++since_improve;
            if (since_improve >= cfg.patience) {
                res.stop_reason = StopReason::Patience;
                break;
            }
        }

        tape.backward(g.total);
        const std::vector<RealArray> grads = {tape.grad(g.alpha), tape.grad(g.delta_v)};
        numcore::adam_step(params, grads, opt, lr);
    }

    res.final_clip = genmodel::generate(gen, task, res.best, cfg.k_grad);
    return res;
}

TransferReport transfer(const TuneContext& ctx, const ConditioningState& tuned,
                        const EditTask& target, const TuningConfig& cfg) {
    validate_config(cfg);
    const genmodel::FrozenGenerator& gen = *ctx.gen;
    ConditioningState state = genmodel::initial_state(gen, target);
    if (!tuned.alpha.same_shape(state.alpha) || !tuned.delta_v.same_shape(state.delta_v)) {
        throw std::invalid_argument("transfer: conditioning shapes do not match the target");
    }
    state.alpha = tuned.alpha;
    state.delta_v = tuned.delta_v;

    TransferReport rep;
    rep.transferred = genmodel::generate(gen, target, state, cfg.k_grad);
    const VideoClip base = genmodel::baseline_edit(gen, target);
    const critic::MotionTemplate tmpl =
        critic::template_for_prompt(*ctx.critic_model, target.prompt_id);
    rep.p_yes_transferred = critic::score_clip(rep.transferred, *ctx.critic_model, tmpl,
                                               cfg.schedule, cfg.n_frames, cfg.variant)
                                .p_yes;
    rep.p_yes_baseline =
        critic::score_clip(base, *ctx.critic_model, tmpl, cfg.schedule, cfg.n_frames, cfg.variant)
            .p_yes;
    rep.gap = rep.p_yes_transferred - rep.p_yes_baseline;
    return rep;
}

std::string trace_csv_text(const TuneResult& result, const std::vector<double>* rewards) {
    if (rewards != nullptr && rewards->size() != result.trace.size()) {
        throw std::invalid_argument("trace_csv_text: reward column length mismatch");
    }
    std::string out = "iter,l_vlm,l_latent,l_lpips,l_temp,total,lr";
    if (rewards != nullptr) out += ",reward";
    out += "\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        const LossBreakdown& lb = result.trace[i];
        out += std::to_string(lb.iteration);
        for (double v : {lb.l_vlm, lb.l_latent, lb.l_lpips, lb.l_temp, lb.total,
                         result.lr_trace[i]}) {
            out += ',';
            append_double(out, v);
        }
        if (rewards != nullptr) {
            out += ',';
            append_double(out, (*rewards)[i]);
        }
        out += "\n";
    }
    return out;
}

void write_trace_csv(const std::string& path, const TuneResult& result,
                     const std::vector<double>* rewards) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << trace_csv_text(result, rewards);
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace condtune::tuner
