// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "condtune/metrics.hpp"
#include "condtune/rng.hpp"

using namespace condtune;
using namespace condtune::metrics;

namespace {

media::VideoClip make_clip(std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed) {
    media::VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.c = 3;
    clip.fps = 25.0;
    clip.frames = numcore::uniform_array({t, h, w, 3}, seed, 0);
    return clip;
}

media::VideoClip shifted_sequence(std::size_t t, std::size_t h, std::size_t w, int dx, int dy,
                                  std::uint64_t seed) {
    media::VideoClip clip = make_clip(t, h, w, seed);
    const std::size_t fsz = clip.frame_size();
    for (std::size_t f = 1; f < t; ++f) {
        for (std::size_t y = 0; y < h; ++y) {
            const std::size_t sy = (y + h - static_cast<std::size_t>((dy % static_cast<int>(h) +
                                                                      static_cast<int>(h)) %
                                                                     static_cast<int>(h))) %
                                   h;
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t sx =
                    (x + w - static_cast<std::size_t>((dx % static_cast<int>(w) +
                                                       static_cast<int>(w)) %
                                                      static_cast<int>(w))) %
                    w;
                for (std::size_t c = 0; c < 3; ++c) {
                    clip.frames.data[f * fsz + (y * w + x) * 3 + c] =
                        clip.frames.data[(f - 1) * fsz + (sy * w + sx) * 3 + c];
                }
            }
        }
    }
    return clip;
}

}  // namespace

TEST_CASE("perceptual distance is a pseudometric") {
    const PerceptualNet net = build_perceptual(kDefaultPerceptualSeed, 3);
    const media::VideoClip x = make_clip(9, 8, 8, 80);
    const media::VideoClip y = make_clip(9, 8, 8, 81);
    CHECK(frpd(x, x, net) == 0.0);
    CHECK(frpd(x, y, net) == frpd(y, x, net));
    CHECK(frpd(x, y, net) > 0.0);
}

TEST_CASE("perceptual distance grows along a linear blend") {
    const PerceptualNet net = build_perceptual(kDefaultPerceptualSeed, 3);
    const media::VideoClip x = make_clip(9, 8, 8, 82);
    const media::VideoClip y = make_clip(9, 8, 8, 83);
    double prev = 0.0;
    for (int i = 1; i <= 5; ++i) {
        const double t = static_cast<double>(i) / 5.0;
        media::VideoClip blend = x;
        for (std::size_t j = 0; j < blend.frames.size(); ++j) {
            blend.frames.data[j] = (1.0 - t) * x.frames.data[j] + t * y.frames.data[j];
        }
        const double d = frpd(x, blend, net);
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("perceptual distance validates dims") {
    const PerceptualNet net = build_perceptual(kDefaultPerceptualSeed, 3);
    CHECK_THROWS_AS(frpd(make_clip(9, 8, 8, 84), make_clip(9, 4, 4, 84), net),
                    std::invalid_argument);
    CHECK_THROWS_AS(frpd_frame(numcore::RealArray({2, 2, 3}, 0.5),
                               numcore::RealArray({2, 2, 3}, 0.5), net),
                    std::invalid_argument);
}

TEST_CASE("multi-scale structural similarity") {
    const media::VideoClip x = make_clip(9, 16, 16, 85);
    SUBCASE("identical clips score exactly 1") {
        CHECK(ms_ssim(x, x, 3) == 1.0);
    }
    SUBCASE("inverted high-contrast pair scores low") {
        media::VideoClip inv = x;
        for (double& v : inv.frames.data) v = 1.0 - v;
        CHECK(ms_ssim(x, inv, 3) < 0.5);
    }
    SUBCASE("bounded in [0,1] on seeded pairs") {
        const media::VideoClip y = make_clip(9, 16, 16, 86);
        const double s = ms_ssim(x, y, 3);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    SUBCASE("frame too small for the scale count") {
        CHECK_THROWS_AS(ms_ssim_frame(numcore::RealArray({4, 4, 3}, 0.5),
                                      numcore::RealArray({4, 4, 3}, 0.5), 3),
                        std::invalid_argument);
        CHECK_NOTHROW(ms_ssim_frame(numcore::RealArray({16, 16, 3}, 0.5),
                                    numcore::RealArray({16, 16, 3}, 0.5), 3));
    }
}

TEST_CASE("background distance weights and properties") {
    CHECK(bg_combine(1.0, 0.0, 1.0) == 1.0);
    CHECK(bg_combine(0.2, 0.9, 0.1) == doctest::Approx(0.15).epsilon(1e-12));

    const PerceptualNet net = build_perceptual(kDefaultPerceptualSeed, 3);
    const media::VideoClip x = make_clip(9, 16, 16, 87);
    const RealArray all_bg({16, 16}, 1.0);
    CHECK(bg_distance(x, x, all_bg, net) == 0.0);

    const media::VideoClip y = make_clip(9, 16, 16, 88);
    CHECK(bg_distance(x, y, all_bg, net) > 0.0);
    CHECK(bg_distance(x, y, all_bg, net) ==
          doctest::Approx(bg_distance(y, x, all_bg, net)).epsilon(1e-12));

    CHECK_THROWS_AS(bg_distance(x, y, RealArray({16, 16}, 0.0), net), std::invalid_argument);
    CHECK_THROWS_AS(bg_distance(x, y, RealArray({16, 16}, 0.5), net), std::invalid_argument);
    CHECK_THROWS_AS(bg_distance(x, y, RealArray({4, 4}, 1.0), net), std::invalid_argument);
}

TEST_CASE("global drift recovers constructed shifts") {
    SUBCASE("static clip has zero drift") {
        media::VideoClip still = make_clip(9, 8, 8, 89);
        const std::size_t fsz = still.frame_size();
        for (std::size_t f = 1; f < still.t; ++f) {
            for (std::size_t i = 0; i < fsz; ++i) {
                still.frames.data[f * fsz + i] = still.frames.data[i];
            }
        }
        const DriftReport r = global_drift(still);
        for (const auto& [dx, dy] : r.shifts) {
            CHECK(dx == 0);
            CHECK(dy == 0);
        }
        CHECK(r.mean_magnitude == 0.0);
    }
    SUBCASE("pure translation is recovered exactly") {
        const DriftReport r = global_drift(shifted_sequence(9, 8, 8, 2, 0, 90));
        for (const auto& [dx, dy] : r.shifts) {
            CHECK(dx == 2);
            CHECK(dy == 0);
        }
        CHECK(r.mean_magnitude == 2.0);
    }
    SUBCASE("vertical translation is recovered too") {
        const DriftReport r = global_drift(shifted_sequence(9, 8, 8, 0, -3, 91));
        for (const auto& [dx, dy] : r.shifts) {
            CHECK(dx == 0);
            CHECK(dy == -3);
        }
    }
}

TEST_CASE("motion flatness") {
    media::VideoClip still = make_clip(9, 8, 8, 92);
    const std::size_t fsz = still.frame_size();
    for (std::size_t f = 1; f < still.t; ++f) {
        for (std::size_t i = 0; i < fsz; ++i) {
            still.frames.data[f * fsz + i] = still.frames.data[i];
        }
    }
    CHECK(motion_flatness(still) == 1.0);

    SUBCASE("constant alternating motion is perfectly flat") {
        media::VideoClip pulse = still;
        for (std::size_t f = 1; f < pulse.t; f += 2) {
            for (std::size_t i = 0; i < fsz; ++i) {
                pulse.frames.data[f * fsz + i] =
                    std::min(1.0, pulse.frames.data[f * fsz + i] + 0.3);
            }
        }
        CHECK(motion_flatness(pulse) == 1.0);
    }
    SUBCASE("a single impulse is far from flat") {
        media::VideoClip impulse = still;
        for (std::size_t i = 0; i < fsz; ++i) {
            impulse.frames.data[4 * fsz + i] =
                std::min(1.0, impulse.frames.data[4 * fsz + i] + 0.5);
        }
        CHECK(motion_flatness(impulse) < 0.5);
    }
}

TEST_CASE("weighted edit score formula") {
    CHECK(vlm_score(7.42, 6.48, 7.49, 7.23) == doctest::Approx(7.16).epsilon(0.0015));
    CHECK(vlm_score(2.46, 2.17, 7.35, 6.67) == doctest::Approx(4.21).epsilon(0.0015));
    CHECK(vlm_score(10, 10, 10, 10) == 10.0);
    CHECK(vlm_score(0, 0, 0, 0) == 0.0);
    CHECK(vlm_score(5, 4, 4, 4) > vlm_score(4, 4, 4, 4));
    CHECK(vlm_score(4, 5, 4, 4) > vlm_score(4, 4, 4, 4));
    CHECK(vlm_score(4, 4, 5, 4) > vlm_score(4, 4, 4, 4));
    CHECK(vlm_score(4, 4, 4, 5) > vlm_score(4, 4, 4, 4));
    CHECK_THROWS_AS(vlm_score(-1, 5, 5, 5), std::invalid_argument);
    CHECK_THROWS_AS(vlm_score(5, 11, 5, 5), std::invalid_argument);
}

TEST_CASE("weighted modality score formula") {
    CHECK(modality_score(10, 10, 10, 10, 10, 10) == 10.0);
    CHECK(modality_score(0, 0, 0, 0, 0, 0) == 0.0);
    CHECK(modality_score(8, 6, 7, 9, 7, 10) == doctest::Approx(7.45).epsilon(1e-12));
    CHECK(modality_score(5, 5, 6, 5, 5, 5) > modality_score(5, 5, 5, 5, 5, 5));
    CHECK_THROWS_AS(modality_score(8, 6, 7, 9, 7, 12), std::invalid_argument);
}

TEST_CASE("survey aggregation golden row") {
    std::vector<SurveyResponse> responses;
    const std::vector<std::string> methods = {"ours", "alt_a", "alt_b", "alt_c"};
    for (int rater = 0; rater < 21; ++rater) {
        const std::string name = "r" + std::to_string(rater);
        responses.push_back({name, "scene_a", "ours", 1, true});
        responses.push_back({name, "scene_a", "alt_a", 2, false});
        responses.push_back({name, "scene_a", "alt_b", 3, false});
        responses.push_back({name, "scene_a", "alt_c", 0, false});
    }
    const std::vector<SurveyStats> stats = survey_aggregate(responses);
    bool found_ours = false, found_unranked = false;
    for (const SurveyStats& s : stats) {
        CHECK(s.win <= s.top3);
        CHECK(s.avg <= 3.0 * s.top3 + 1e-12);
        if (s.method == "ours") {
            found_ours = true;
            CHECK(s.win == 1.0);
            CHECK(s.top3 == 1.0);
            CHECK(s.avg == 3.0);
            CHECK(s.achieved == 1.0);
            CHECK(s.raters == 21);
        }
        if (s.method == "alt_c") {
            found_unranked = true;
            CHECK(s.win == 0.0);
            CHECK(s.top3 == 0.0);
            CHECK(s.avg == 0.0);
        }
    }
    CHECK(found_ours);
    CHECK(found_unranked);
}

TEST_CASE("survey aggregation brute-force count") {
    // 21 raters: 13 rank m1 first, 8 rank m2 first; seconds swapped.
    std::vector<SurveyResponse> responses;
    for (int rater = 0; rater < 21; ++rater) {
        const std::string name = "r" + std::to_string(rater);
        const bool m1_first = rater < 13;
        responses.push_back({name, "s", "m1", m1_first ? 1 : 2, rater % 2 == 0});
        responses.push_back({name, "s", "m2", m1_first ? 2 : 1, false});
    }
    for (const SurveyStats& s : survey_aggregate(responses)) {
        if (s.method == "m1") {
            CHECK(s.win == doctest::Approx(13.0 / 21.0).epsilon(1e-12));
            CHECK(s.top3 == 1.0);
            CHECK(s.avg == doctest::Approx((13.0 * 3 + 8.0 * 2) / 21.0).epsilon(1e-12));
            CHECK(s.achieved == doctest::Approx(11.0 / 21.0).epsilon(1e-12));
        }
        if (s.method == "m2") {
            CHECK(s.win == doctest::Approx(8.0 / 21.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("survey validation") {
    SUBCASE("duplicate rank per rater and scenario") {
        std::vector<SurveyResponse> bad = {{"r0", "s", "m1", 1, false},
                                           {"r0", "s", "m2", 1, false}};
        CHECK_THROWS_WITH_AS(survey_aggregate(bad), doctest::Contains("rank 1 twice"),
                             std::invalid_argument);
    }
    SUBCASE("duplicate method row per rater and scenario") {
        std::vector<SurveyResponse> bad = {{"r0", "s", "m1", 1, false},
                                           {"r0", "s", "m1", 2, false}};
        CHECK_THROWS_WITH_AS(survey_aggregate(bad), doctest::Contains("duplicate response"),
                             std::invalid_argument);
    }
    SUBCASE("rank out of range") {
        std::vector<SurveyResponse> bad = {{"r0", "s", "m1", 4, false}};
        CHECK_THROWS_AS(survey_aggregate(bad), std::invalid_argument);
    }
}

TEST_CASE("per-scenario min-max scaling") {
    const std::vector<double> scaled = minmax_scale_0_10({2.0, 4.0, 3.0});
    CHECK(scaled[0] == 0.0);
    CHECK(scaled[1] == 10.0);
    CHECK(scaled[2] == 5.0);
    for (double v : minmax_scale_0_10({1.5, 1.5, 1.5})) CHECK(v == 0.0);
    CHECK(minmax_scale_0_10({}).empty());
}
