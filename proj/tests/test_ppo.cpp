// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "condtune/ppo.hpp"
#include "condtune/rng.hpp"

using namespace condtune;
using namespace condtune::ppo;

namespace {

genmodel::GenDims tiny_dims() {
    genmodel::GenDims d;
    d.t = 9;
    d.h = 8;
    d.w = 8;
    d.c = 3;
    return d;
}

media::EditTask make_task(const genmodel::GenDims& d, std::uint64_t seed, std::size_t k,
                          long prompt_id) {
    media::EditTask task;
    task.scenario = "seeded_" + std::to_string(seed);
    task.source.t = d.t;
    task.source.h = d.h;
    task.source.w = d.w;
    task.source.c = d.c;
    task.source.fps = 25.0;
    task.source.frames = numcore::uniform_array({d.t, d.h, d.w, d.c}, seed, 0, 0.1, 0.9);
    task.preserved_frames = k;
    task.prompt_id = prompt_id;
    return task;
}

bool bits_equal(const RealArray& a, const RealArray& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) == 0;
}

struct Fixture {
    genmodel::FrozenGenerator gen;
    critic::MotionCritic critic_model;
    metrics::PerceptualNet pnet;
    media::EditTask task;

    Fixture()
        : gen(genmodel::build_generator(11, tiny_dims(), 10)),
          critic_model(critic::build_critic(11, tiny_dims().frame_size())),
          pnet(metrics::build_perceptual(metrics::kDefaultPerceptualSeed, 3)),
          task(make_task(tiny_dims(), 400, 2, 5)) {}

    tuner::TuneContext ctx() const { return {&gen, &critic_model, &pnet}; }
};

tuner::TuningConfig quick_config() {
    tuner::TuningConfig cfg;
    cfg.max_iters = 6;
    cfg.patience = 6;
    cfg.k_grad = 4;
    cfg.n_frames = 5;
    cfg.seed = 77;
    return cfg;
}

GaussianPolicy small_policy() {
    PpoConfig pcfg;
    return make_policy(RealArray({2, 3}, 0.0), RealArray({2, 2}, 0.0), pcfg);
}

}  // namespace

TEST_CASE("action sampling is counter-deterministic") {
    const GaussianPolicy p = small_policy();
    const Rollout r1 = sample_action(p, 9, 0);
    const Rollout r2 = sample_action(p, 9, 0);
    const Rollout r3 = sample_action(p, 9, 1);
    CHECK(bits_equal(r1.action_alpha, r2.action_alpha));
    CHECK(bits_equal(r1.action_dv, r2.action_dv));
    CHECK(r1.log_prob == r2.log_prob);
    CHECK_FALSE(bits_equal(r1.action_alpha, r3.action_alpha));
}

TEST_CASE("vanishing std collapses the action onto the mean") {
    GaussianPolicy p = small_policy();
    for (double& v : p.mean_alpha.data) v = 0.4;
    for (double& v : p.log_std_alpha.data) v = -800.0;
    for (double& v : p.log_std_dv.data) v = -800.0;
    const Rollout r = sample_action(p, 9, 3);
    CHECK(bits_equal(r.action_alpha, p.mean_alpha));
    CHECK(bits_equal(r.action_dv, p.mean_dv));
}

TEST_CASE("log-probability of the mean action has the closed form") {
    GaussianPolicy p = small_policy();
    for (std::size_t i = 0; i < p.log_std_alpha.size(); ++i) {
        p.log_std_alpha.data[i] = -3.0 + 0.1 * static_cast<double>(i);
    }
    double expect = 0.0;
    for (double ls : p.log_std_alpha.data) expect += -ls - 0.5 * std::log(2.0 * 3.14159265358979323846);
    for (double ls : p.log_std_dv.data) expect += -ls - 0.5 * std::log(2.0 * 3.14159265358979323846);
    CHECK(log_prob(p, p.mean_alpha, p.mean_dv) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(log_prob(p, RealArray({1, 1}, 0.0), p.mean_dv), std::invalid_argument);
}

TEST_CASE("ratio clipping") {
    CHECK(clipped_ratio(2.0, 0.2) == 1.2);
    CHECK(clipped_ratio(0.3, 0.2) == 0.8);
    CHECK(clipped_ratio(1.05, 0.2) == 1.05);
    CHECK(surrogate(2.0, 1.0, 0.2) == 1.2);
    CHECK(surrogate(2.0, -1.0, 0.2) == -2.0);
    CHECK(surrogate(1.0, 0.5, 0.2) == 0.5);
}

TEST_CASE("zero advantages leave the policy unchanged") {
    GaussianPolicy p = small_policy();
    const GaussianPolicy before = p;
    std::vector<Rollout> rollouts;
    for (std::size_t k = 0; k < 4; ++k) {
        Rollout r = sample_action(p, 13, k);
        r.advantage = 0.0;
        rollouts.push_back(r);
    }
    ppo_update(p, rollouts, 0.2, 0.05);
    CHECK(bits_equal(p.mean_alpha, before.mean_alpha));
    CHECK(bits_equal(p.mean_dv, before.mean_dv));
    CHECK(bits_equal(p.log_std_alpha, before.log_std_alpha));
    CHECK(bits_equal(p.log_std_dv, before.log_std_dv));
    CHECK_THROWS_AS(ppo_update(p, {}, 0.2, 0.05), std::invalid_argument);
}

TEST_CASE("a positive-advantage rollout pulls the mean toward its action") {
    GaussianPolicy p = small_policy();
    const GaussianPolicy before = p;
    Rollout r = sample_action(p, 21, 0);
    r.advantage = 0.5;
    ppo_update(p, {r}, 0.2, 0.01);
    for (std::size_t i = 0; i < p.mean_alpha.size(); ++i) {
        const double toward = r.action_alpha.data[i] - before.mean_alpha.data[i];
        const double moved = p.mean_alpha.data[i] - before.mean_alpha.data[i];
        CHECK(moved * toward > 0.0);
    }
}

TEST_CASE("with a fresh rollout and no clip the update is vanilla policy gradient") {
    GaussianPolicy p = small_policy();
    const GaussianPolicy before = p;
    Rollout r = sample_action(p, 34, 0);
    r.advantage = -0.3;
    ppo_update(p, {r}, 1e18, 0.02);

    auto vanilla = [&](const RealArray& mean, const RealArray& log_std, const RealArray& action,
                       std::size_t i, double& dmean, double& dls) {
        const double s = std::exp(log_std.data[i]);
        const double z = (action.data[i] - mean.data[i]) / s;
        dmean = 0.02 * r.advantage * z / s;
        dls = 0.02 * r.advantage * (z * z - 1.0);
    };
    for (std::size_t i = 0; i < p.mean_alpha.size(); ++i) {
        double dm = 0.0, dl = 0.0;
        vanilla(before.mean_alpha, before.log_std_alpha, r.action_alpha, i, dm, dl);
        CHECK(p.mean_alpha.data[i] == doctest::Approx(before.mean_alpha.data[i] + dm).epsilon(1e-14));
        CHECK(p.log_std_alpha.data[i] ==
              doctest::Approx(before.log_std_alpha.data[i] + dl).epsilon(1e-14));
    }
}

TEST_CASE("reward is the negated shared objective to the last bit") {
    const Fixture fx;
    const tuner::TuningConfig cfg = quick_config();
    genmodel::ConditioningState s = genmodel::initial_state(fx.gen, fx.task);
    s.alpha.data[7] += 0.2;
    s.delta_v.data[3] = -0.1;
    CHECK(reward(fx.ctx(), fx.task, s, cfg) == -tuner::total_loss(fx.ctx(), fx.task, s, cfg).total);
}

TEST_CASE("budget accounting is exact") {
    const Fixture fx;
    const tuner::TuningConfig cfg = quick_config();
    const PpoConfig pcfg;

    CHECK_THROWS_AS(ppo_tune(fx.ctx(), fx.task, 0, cfg, pcfg), std::invalid_argument);

    const PpoResult one = ppo_tune(fx.ctx(), fx.task, 1, cfg, pcfg);
    CHECK(one.critic_calls == 1);
    CHECK(one.result.trace.size() == 1);
    CHECK(one.rewards.size() == 1);

    const PpoResult seven = ppo_tune(fx.ctx(), fx.task, 7, cfg, pcfg);
    CHECK(seven.critic_calls == 7);
    CHECK(seven.result.trace.size() == 7);
    CHECK(seven.rewards.size() == 7);
}

TEST_CASE("ppo runs are bit-deterministic") {
    const Fixture fx;
    const tuner::TuningConfig cfg = quick_config();
    const PpoConfig pcfg;
    const PpoResult r1 = ppo_tune(fx.ctx(), fx.task, 9, cfg, pcfg);
    const PpoResult r2 = ppo_tune(fx.ctx(), fx.task, 9, cfg, pcfg);
    CHECK(r1.rewards == r2.rewards);
    CHECK(bits_equal(r1.result.best.alpha, r2.result.best.alpha));
    CHECK(bits_equal(r1.result.final_clip.frames, r2.result.final_clip.frames));
    CHECK(tuner::trace_csv_text(r1.result, &r1.rewards) ==
          tuner::trace_csv_text(r2.result, &r2.rewards));
}

TEST_CASE("best-reward bookkeeping") {
    const Fixture fx;
    const tuner::TuningConfig cfg = quick_config();
    const PpoConfig pcfg;
    const PpoResult r = ppo_tune(fx.ctx(), fx.task, 9, cfg, pcfg);

    const double best = *std::max_element(r.rewards.begin(), r.rewards.end());
    double best_total = r.result.trace[0].total;
    for (const auto& lb : r.result.trace) best_total = std::min(best_total, lb.total);
    CHECK(best == -best_total);
    CHECK(reward(fx.ctx(), fx.task, r.result.best, cfg) == best);
    CHECK(bits_equal(r.result.final_clip.frames,
                     genmodel::generate(fx.gen, fx.task, r.result.best, cfg.k_grad).frames));

    const std::string csv = tuner::trace_csv_text(r.result, &r.rewards);
    CHECK(csv.rfind("iter,l_vlm,l_latent,l_lpips,l_temp,total,lr,reward\n", 0) == 0);
}
