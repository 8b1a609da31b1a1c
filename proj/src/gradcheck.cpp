// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "condtune/critic.hpp"
#include "condtune/genmodel.hpp"
#include "condtune/metrics.hpp"
#include "condtune/optim.hpp"
#include "condtune/rng.hpp"
#include "condtune/tuner.hpp"

namespace condtune::gradcheck {

using numcore::RealArray;
using numcore::Tape;
using numcore::Value;

namespace {

constexpr double kStep = 1e-5;

using GraphFn = std::function<Value(Tape&, const std::vector<Value>&)>;

double max_rel_err(const std::vector<RealArray>& analytic, const std::vector<RealArray>& fd) {
    double worst = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        for (std::size_t i = 0; i < analytic[k].size(); ++i) {
            const double a = analytic[k].data[i];
            const double b = fd[k].data[i];
            const double denom = std::max({std::fabs(a), std::fabs(b), 1e-6});
            worst = std::max(worst, std::fabs(a - b) / denom);
        }
    }
    return worst;
}

PathResult check_path(const std::string& name, const std::vector<RealArray>& leaves,
                      const GraphFn& graph, double tolerance, const std::string& corrupt) {
    Tape tape;
    std::vector<Value> vals(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) vals[i] = tape.input(leaves[i]);
    const Value root = graph(tape, vals);
    tape.backward(root);
    std::vector<RealArray> analytic(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) analytic[i] = tape.grad(vals[i]);
    if (name == corrupt) {
        for (RealArray& g : analytic) {
            for (double& v : g.data) v *= 1.01;
        }
    }

    auto loss_fn = [&](const std::vector<RealArray>& probe) {
        Tape t;
        std::vector<Value> pv(probe.size());
        for (std::size_t i = 0; i < probe.size(); ++i) pv[i] = t.input(probe[i]);
        return t.value(graph(t, pv)).data[0];
    };
    const std::vector<RealArray> fd = numcore::finite_diff_grad(loss_fn, leaves, kStep);

    PathResult r;
    r.path = name;
    r.max_rel_err = max_rel_err(analytic, fd);
    r.pass = r.max_rel_err < tolerance;
    return r;
}

RealArray away_from(double kink, double margin, std::vector<std::size_t> shape,
                    std::uint64_t seed, std::uint64_t stream) {
    RealArray a = numcore::uniform_array(std::move(shape), seed, stream, margin, 0.8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double side = numcore::uniform01(seed, stream + 1000, i) < 0.5 ? -1.0 : 1.0;
        a.data[i] = kink + side * a.data[i];
    }
    return a;
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, const std::string& corrupt) {
    GradCheckReport report;
    auto add = [&](const std::string& name, const std::vector<RealArray>& leaves,
                   const GraphFn& graph) {
        report.paths.push_back(check_path(name, leaves, graph, report.tolerance, corrupt));
        report.pass = report.pass && report.paths.back().pass;
    };

    const RealArray a = numcore::normal_array({3, 4}, seed, 900, 0.5);
    const RealArray b = numcore::normal_array({3, 4}, seed, 901, 0.5);
    const RealArray m = numcore::normal_array({4, 2}, seed, 902, 0.5);
    const RealArray pos = numcore::uniform_array({3, 4}, seed, 903, 0.5, 2.0);

    add("op:add", {a, b}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(t.add(v[0], v[1])));
    });
    add("op:sub", {a, b}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(t.sub(v[0], v[1])));
    });
    add("op:mul", {a, b}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.mul(v[0], v[1]));
    });
    add("op:scale_add_const", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(t.add_const(t.scale(v[0], 1.7), 0.3)));
    });
    add("op:matmul", {a, m}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(t.matmul(v[0], v[1])));
    });
    add("op:tanh", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.tanh(v[0]));
    });
    add("op:sigmoid", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.sigmoid(v[0]));
    });
    add("op:exp", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.exp(v[0]));
    });
    add("op:log", {pos}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.log(v[0]));
    });
    add("op:square", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(v[0]));
    });
    add("op:max_const", {away_from(0.3, 0.05, {3, 4}, seed, 904)},
        [](Tape& t, const std::vector<Value>& v) {
            return t.sum(t.square(t.max_const(v[0], 0.3)));
        });
    add("op:mean", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.mean(t.square(v[0]));
    });
    add("op:slice_concat", {a}, [](Tape& t, const std::vector<Value>& v) {
        const Value parts = t.concat0({t.slice0(v[0], 0, 2), t.slice0(v[0], 1, 3)});
        return t.sum(t.square(parts));
    });
    add("op:broadcast0", {numcore::normal_array({1, 4}, seed, 905, 0.5), b},
        [](Tape& t, const std::vector<Value>& v) {
            return t.sum(t.mul(t.broadcast0(v[0], 3), v[1]));
        });
    add("op:reshape", {a}, [](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.square(t.reshape(v[0], {2, 6})));
    });

    const RealArray img = numcore::uniform_array({5, 5, 2}, seed, 906, 0.1, 0.9);
    const RealArray cw = numcore::normal_array({3, 3, 3, 2}, seed, 907, 0.3);
    const RealArray cb = numcore::normal_array({3}, seed, 908, 0.1);
    add("op:conv2d", {img}, [&](Tape& t, const std::vector<Value>& v) {
        return t.sum(t.tanh(t.conv2d(v[0], cw, cb)));
    });
    add("op:avg_pool2", {numcore::uniform_array({6, 6, 2}, seed, 909, 0.1, 0.9)},
        [](Tape& t, const std::vector<Value>& v) {
            return t.sum(t.square(t.avg_pool2(v[0])));
        });

    genmodel::GenDims dims;
    dims.t = 9;
    dims.h = 8;
    dims.w = 8;
    dims.c = 3;
    const genmodel::FrozenGenerator gen =
        genmodel::build_generator(static_cast<long>(seed % 1000 + 1), dims, 10);
    media::EditTask task;
    task.scenario = "gradcheck";
    task.source.t = dims.t;
    task.source.h = dims.h;
    task.source.w = dims.w;
    task.source.c = dims.c;
    task.source.fps = 25.0;
    task.source.frames = numcore::uniform_array({dims.t, dims.h, dims.w, dims.c}, seed, 910,
                                                 0.1, 0.9);
    task.preserved_frames = 2;
    task.prompt_id = 5;

    const genmodel::ConditioningState s0 = genmodel::initial_state(gen, task);
    RealArray alpha = s0.alpha;
    const RealArray na = numcore::normal_array(alpha.shape, seed, 911, 0.05);
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha.data[i] += na.data[i];
    const RealArray delta_v = numcore::normal_array(s0.delta_v.shape, seed, 912, 0.05);

    add("render", {alpha, delta_v}, [&](Tape& t, const std::vector<Value>& v) {
        return t.mean(t.square(genmodel::render_on_tape(t, gen, task, v[0], v[1], gen.steps)));
    });

    const critic::MotionCritic crit = critic::build_critic(static_cast<long>(seed % 1000 + 1),
                                                           dims.frame_size());
    const critic::MotionTemplate tmpl = critic::template_for_prompt(crit, task.prompt_id);
    const RealArray rows =
        numcore::uniform_array({dims.t, dims.frame_size()}, seed, 913, 0.1, 0.9);
    const std::vector<std::size_t> idx = critic::sample_uniform(dims.t, 5);
    add("critic_temporal", {rows}, [&](Tape& t, const std::vector<Value>& v) {
        return critic::p_yes_on_tape(t, v[0], idx, crit, tmpl, critic::CriticVariant::Temporal);
    });
    add("critic_framewise", {rows}, [&](Tape& t, const std::vector<Value>& v) {
        return critic::p_yes_on_tape(t, v[0], idx, crit, tmpl, critic::CriticVariant::Framewise);
    });

    const metrics::PerceptualNet pnet =
        metrics::build_perceptual(metrics::kDefaultPerceptualSeed, 3);
    add("frpd_frame",
        {numcore::uniform_array({8, 8, 3}, seed, 914, 0.1, 0.9),
         numcore::uniform_array({8, 8, 3}, seed, 915, 0.1, 0.9)},
        [&](Tape& t, const std::vector<Value>& v) {
            return metrics::frpd_frame_on_tape(t, v[0], v[1], pnet);
        });

    tuner::TuningConfig cfg;
    cfg.k_grad = gen.steps;
    cfg.n_frames = 5;
    const tuner::TuneContext ctx{&gen, &crit, &pnet};
    add("total_loss", {alpha, delta_v}, [&](Tape& t, const std::vector<Value>& v) {
        return tuner::total_loss_from_leaves(t, ctx, task, v[0], v[1], cfg).total;
    });

    return report;
}

std::string gradcheck_text(const GradCheckReport& report) {
    std::string out;
    for (const PathResult& p : report.paths) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " max_rel_err=%.3e ", p.max_rel_err);
        out += p.path;
        out += buf;
        out += p.pass ? "PASS" : "FAIL";
        out += '\n';
    }
    out += report.pass ? "gradcheck: PASS\n" : "gradcheck: FAIL\n";
    return out;
}

}  // namespace condtune::gradcheck
