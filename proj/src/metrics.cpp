// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "condtune/rng.hpp"

namespace condtune::metrics {

namespace {

enum Stream : std::uint64_t {
    kStreamConvW = 21,
    kStreamConvB = 22,
};

RealArray frame_at(const VideoClip& clip, std::size_t t) {
    RealArray f({clip.h, clip.w, clip.c});
    const std::size_t fsz = clip.frame_size();
    for (std::size_t i = 0; i < fsz; ++i) f.data[i] = clip.frames.data[t * fsz + i];
    return f;
}

void check_same_dims(const VideoClip& a, const VideoClip& b, const char* op) {
    if (a.t != b.t || a.h != b.h || a.w != b.w || a.c != b.c) {
        throw std::invalid_argument(std::string(op) + ": clip dims differ");
    }
}

// Per-location channel normalization of a (H,W,F) feature map, composed
// from tape primitives so the same graph serves eager and gradient paths.
Value channel_normalize(Tape& tape, Value g, std::size_t filters) {
    const auto& shape = tape.value(g).shape;
    const std::size_t locations = shape[0] * shape[1];
    Value flat = tape.reshape(g, {locations, filters});
    Value ones_col = tape.input(RealArray({filters, 1}, 1.0));
    Value ones_row = tape.input(RealArray({1, filters}, 1.0));
    Value sq_sum = tape.matmul(tape.square(flat), ones_col);
    Value inv = tape.exp(tape.scale(tape.log(tape.add_const(sq_sum, 1e-8)), -0.5));
    return tape.mul(flat, tape.matmul(inv, ones_row));
}

double ssim_window_mean(const RealArray& a, const RealArray& b, bool with_luminance) {
    const std::size_t h = a.shape[0];
    const std::size_t w = a.shape[1];
    const std::size_t c = a.shape[2];
    const std::size_t win = std::min<std::size_t>(8, std::min(h, w));
    constexpr double c1 = 1e-4;  // (0.01 * range)^2 with range 1
    constexpr double c2 = 9e-4;  // (0.03 * range)^2
    const double n = static_cast<double>(win * win);

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y + win <= h; ++y) {
            for (std::size_t x = 0; x + win <= w; ++x) {
                double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (std::size_t dy = 0; dy < win; ++dy) {
                    for (std::size_t dx = 0; dx < win; ++dx) {
                        const double va = a.data[((y + dy) * w + (x + dx)) * c + ch];
                        const double vb = b.data[((y + dy) * w + (x + dx)) * c + ch];
                        sx += va;
                        sy += vb;
                        sxx += va * va;
                        syy += vb * vb;
                        sxy += va * vb;
                    }
                }
                const double mx = sx / n;
                const double my = sy / n;
                const double vx = sxx / n - mx * mx;
                const double vy = syy / n - my * my;
                const double vxy = sxy / n - mx * my;
                double term = (2.0 * vxy + c2) / (vx + vy + c2);
                if (with_luminance) {
                    term *= (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
                }
                acc += std::max(0.0, term);
                ++count;
            }
        }
    }
    return acc / static_cast<double>(count);
}

RealArray pool_frame(const RealArray& f) { return numcore::k_avg_pool2(f); }

double shift_mse(const RealArray& prev, const RealArray& next, int dx, int dy) {
    const std::size_t h = prev.shape[0];
    const std::size_t w = prev.shape[1];
    const std::size_t c = prev.shape[2];
    double acc = 0.0;
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy =
            static_cast<std::size_t>((static_cast<long>(y) - dy + 8 * static_cast<long>(h)) %
                                     static_cast<long>(h));
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t sx =
                static_cast<std::size_t>((static_cast<long>(x) - dx + 8 * static_cast<long>(w)) %
                                         static_cast<long>(w));
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double d = next.data[(y * w + x) * c + ch] -
                                 prev.data[(sy * w + sx) * c + ch];
                acc += d * d;
            }
        }
    }
    return acc / static_cast<double>(h * w * c);
}

struct BestShift {
    int dx = 0;
    int dy = 0;
    double mse = 0.0;
};

BestShift best_shift(const RealArray& prev, const RealArray& next) {
    BestShift best;
    bool first = true;
    for (int dy = -4; dy <= 4; ++dy) {
        for (int dx = -4; dx <= 4; ++dx) {
            const double mse = shift_mse(prev, next, dx, dy);
            if (first || mse < best.mse) {
                best = BestShift{dx, dy, mse};
                first = false;
            }
        }
    }
    return best;
}

void check_score_range(double v, const char* name) {
    if (!(v >= 0.0 && v <= 10.0)) {
        throw std::invalid_argument(std::string(name) + " must be in [0,10], got " +
                                    std::to_string(v));
    }
}

}  // namespace

PerceptualNet build_perceptual(long seed, std::size_t channels) {
    if (channels == 0) throw std::invalid_argument("build_perceptual: channels must be >= 1");
    PerceptualNet net;
    net.seed = seed;
    net.channels = channels;
    const std::uint64_t useed = static_cast<std::uint64_t>(seed);
    const double sw = 1.0 / std::sqrt(9.0 * static_cast<double>(channels));
    for (std::size_t s = 0; s < net.scales; ++s) {
        net.conv_w.push_back(numcore::normal_array({net.filters, 3, 3, channels}, useed,
                                                   kStreamConvW + 10 * s, sw));
        net.conv_b.push_back(numcore::normal_array({net.filters}, useed, kStreamConvB + 10 * s,
                                                   0.1));
    }
    return net;
}

Value frpd_frame_on_tape(Tape& tape, Value frame_a, Value frame_b, const PerceptualNet& net) {
    const auto& shape = tape.value(frame_a).shape;
    if (shape != tape.value(frame_b).shape || shape.size() != 3) {
        throw std::invalid_argument("frpd: frames must share (H,W,C) dims");
    }
    if (shape[2] != net.channels) {
        throw std::invalid_argument("frpd: channel count does not match perceptual net");
    }
    const std::size_t min_dim = std::min(shape[0], shape[1]);
    if (min_dim >> (net.scales - 1) == 0) {
        throw std::invalid_argument("frpd: frame too small for " + std::to_string(net.scales) +
                                    " scales");
    }
    Value fa = frame_a;
    Value fb = frame_b;
    Value total{};
    for (std::size_t s = 0; s < net.scales; ++s) {
        if (s > 0) {
            fa = tape.avg_pool2(fa);
            fb = tape.avg_pool2(fb);
        }
        Value ga = channel_normalize(
            tape, tape.tanh(tape.conv2d(fa, net.conv_w[s], net.conv_b[s])), net.filters);
        Value gb = channel_normalize(
            tape, tape.tanh(tape.conv2d(fb, net.conv_w[s], net.conv_b[s])), net.filters);
        Value d = tape.mean(tape.square(tape.sub(ga, gb)));
        total = s == 0 ? d : tape.add(total, d);
    }
    return total;
}

double frpd_frame(const RealArray& frame_a, const RealArray& frame_b, const PerceptualNet& net) {
    Tape tape;
    Value a = tape.input(frame_a);
    Value b = tape.input(frame_b);
    return tape.value(frpd_frame_on_tape(tape, a, b, net)).data[0];
}

double frpd(const VideoClip& a, const VideoClip& b, const PerceptualNet& net) {
    check_same_dims(a, b, "frpd");
    double acc = 0.0;
    for (std::size_t t = 0; t < a.t; ++t) {
        acc += frpd_frame(frame_at(a, t), frame_at(b, t), net);
    }
    return acc / static_cast<double>(a.t);
}

double ms_ssim_frame(const RealArray& a, const RealArray& b, std::size_t scales) {
    if (a.shape != b.shape || a.rank() != 3) {
        throw std::invalid_argument("ms_ssim: frames must share (H,W,C) dims");
    }
    if (scales < 1) throw std::invalid_argument("ms_ssim: scales must be >= 1");
    const std::size_t min_dim = std::min(a.shape[0], a.shape[1]);
    if (min_dim >> (scales - 1) < 2) {
        throw std::invalid_argument("ms_ssim: frame too small for " + std::to_string(scales) +
                                    " scales");
    }
    RealArray fa = a;
    RealArray fb = b;
    double product = 1.0;
    for (std::size_t s = 0; s < scales; ++s) {
        if (s > 0) {
            fa = pool_frame(fa);
            fb = pool_frame(fb);
        }
        product *= ssim_window_mean(fa, fb, s + 1 == scales);
    }
    return product;
}

double ms_ssim(const VideoClip& a, const VideoClip& b, std::size_t scales) {
    check_same_dims(a, b, "ms_ssim");
    double acc = 0.0;
    for (std::size_t t = 0; t < a.t; ++t) {
        acc += ms_ssim_frame(frame_at(a, t), frame_at(b, t), scales);
    }
    return acc / static_cast<double>(a.t);
}

double bg_combine(double d_perceptual, double ms_ssim_value, double d_l1) {
    return 0.5 * d_perceptual + 0.3 * (1.0 - ms_ssim_value) + 0.2 * d_l1;
}

double bg_distance(const VideoClip& src, const VideoClip& edit, const RealArray& bg_mask,
                   const PerceptualNet& net) {
    check_same_dims(src, edit, "bg_distance");
    if (bg_mask.shape != std::vector<std::size_t>{src.h, src.w}) {
        throw std::invalid_argument("bg_distance: mask must be (H,W)");
    }
    double mask_sum = 0.0;
    for (double v : bg_mask.data) {
        if (v != 0.0 && v != 1.0) {
            throw std::invalid_argument("bg_distance: mask must be binary");
        }
        mask_sum += v;
    }
    if (mask_sum == 0.0) throw std::invalid_argument("bg_distance: empty background mask");

    VideoClip src_masked = src;
    VideoClip edit_masked = edit;
    double l1 = 0.0;
    const std::size_t fsz = src.frame_size();
    for (std::size_t t = 0; t < src.t; ++t) {
        for (std::size_t y = 0; y < src.h; ++y) {
            for (std::size_t x = 0; x < src.w; ++x) {
                const double m = bg_mask.data[y * src.w + x];
                for (std::size_t ch = 0; ch < src.c; ++ch) {
                    const std::size_t i = t * fsz + (y * src.w + x) * src.c + ch;
                    src_masked.frames.data[i] *= m;
                    edit_masked.frames.data[i] *= m;
                    l1 += m * std::fabs(src.frames.data[i] - edit.frames.data[i]);
                }
            }
        }
    }
    l1 /= mask_sum * static_cast<double>(src.t * src.c);
    return bg_combine(frpd(src_masked, edit_masked, net),
                      ms_ssim(src_masked, edit_masked, 3), l1);
}

DriftReport global_drift(const VideoClip& clip) {
    if (clip.t < 2) throw std::invalid_argument("global_drift: need at least 2 frames");
    DriftReport report;
    double mag = 0.0;
    for (std::size_t t = 0; t + 1 < clip.t; ++t) {
        const BestShift best = best_shift(frame_at(clip, t), frame_at(clip, t + 1));
        report.shifts.emplace_back(best.dx, best.dy);
        mag += std::sqrt(static_cast<double>(best.dx * best.dx + best.dy * best.dy));
    }
    report.mean_magnitude = mag / static_cast<double>(clip.t - 1);
    return report;
}

double motion_flatness(const VideoClip& clip) {
    if (clip.t < 3) throw std::invalid_argument("motion_flatness: need at least 3 frames");
    std::vector<double> energy;
    for (std::size_t t = 0; t + 1 < clip.t; ++t) {
        energy.push_back(best_shift(frame_at(clip, t), frame_at(clip, t + 1)).mse);
    }
    double mean = 0.0;
    for (double e : energy) mean += e;
    mean /= static_cast<double>(energy.size());
    if (mean == 0.0) return 1.0;
    double var = 0.0;
    for (double e : energy) var += (e - mean) * (e - mean);
    var /= static_cast<double>(energy.size());
    const double cv = std::sqrt(var) / mean;
    return 1.0 / (1.0 + cv);
}

double vlm_score(double ea, double mq, double sp, double vq) {
    check_score_range(ea, "EA");
    check_score_range(mq, "MQ");
    check_score_range(sp, "SP");
    check_score_range(vq, "VQ");
    return 0.35 * ea + 0.25 * mq + 0.20 * sp + 0.20 * vq;
}

double modality_score(double align, double motion, double natural, double preserve,
                      double visual, double local) {
    check_score_range(align, "align");
    check_score_range(motion, "motion");
    check_score_range(natural, "natural");
    check_score_range(preserve, "preserve");
    check_score_range(visual, "visual");
    check_score_range(local, "local");
    return 0.25 * align + 0.25 * motion + 0.20 * natural + 0.15 * preserve + 0.10 * visual +
           0.05 * local;
}

std::vector<SurveyStats> survey_aggregate(const std::vector<SurveyResponse>& responses) {
    std::set<std::pair<std::string, std::string>> rank_seen;  // (rater|scenario|rank)
    std::set<std::string> row_seen;
    std::set<std::string> methods;
    std::map<std::string, std::set<std::string>> scenario_raters;

    for (const SurveyResponse& r : responses) {
        if (r.rank < 0 || r.rank > 3) {
            throw std::invalid_argument("survey: rank must be 0..3, got " +
                                        std::to_string(r.rank));
        }
        const std::string row_key = r.rater + "\x1f" + r.scenario + "\x1f" + r.method;
        if (!row_seen.insert(row_key).second) {
            throw std::invalid_argument("survey: duplicate response for rater '" + r.rater +
                                        "', scenario '" + r.scenario + "', method '" + r.method +
                                        "'");
        }
        if (r.rank > 0) {
            const auto key = std::make_pair(r.rater + "\x1f" + r.scenario,
                                            std::to_string(r.rank));
            if (!rank_seen.insert(key).second) {
                throw std::invalid_argument("survey: rater '" + r.rater + "' used rank " +
                                            std::to_string(r.rank) + " twice in scenario '" +
                                            r.scenario + "'");
            }
        }
        methods.insert(r.method);
        scenario_raters[r.scenario].insert(r.rater);
    }

    std::vector<SurveyStats> out;
    for (const auto& [scenario, raters] : scenario_raters) {
        for (const std::string& method : methods) {
            SurveyStats stats;
            stats.method = method;
            stats.scenario = scenario;
            stats.raters = raters.size();
            double wins = 0.0, top3 = 0.0, points = 0.0, achieved = 0.0;
            for (const SurveyResponse& r : responses) {
                if (r.scenario != scenario || r.method != method) continue;
                if (r.rank == 1) wins += 1.0;
                if (r.rank >= 1 && r.rank <= 3) {
                    top3 += 1.0;
                    points += static_cast<double>(4 - r.rank);
                }
                if (r.achieved) achieved += 1.0;
            }
            const double n = static_cast<double>(raters.size());
            stats.win = wins / n;
            stats.top3 = top3 / n;
            stats.avg = points / n;
            stats.achieved = achieved / n;
            out.push_back(stats);
        }
    }
    return out;
}

std::vector<double> minmax_scale_0_10(const std::vector<double>& values) {
    if (values.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(values.size(), 0.0);
    if (hi == lo) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = 10.0 * (values[i] - lo) / (hi - lo);
    }
    return out;
}

}  // namespace condtune::metrics
