// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "condtune/array.hpp"

namespace condtune::media {

using numcore::RealArray;

/// Clip of T frames at H x W x C, values in [0,1]. The generator's temporal
/// constraint (T-1) mod 8 == 0 is enforced at every construction site.
struct VideoClip {
    std::size_t t = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t c = 0;
    double fps = 0.0;
    RealArray frames;  // shape (T, H, W, C)

    std::size_t frame_size() const { return h * w * c; }
    void validate() const;
};

/// One edit request: a source clip, the conditioning seeds, and the retake
/// split point K (frames [0,K) are preserved verbatim).
struct EditTask {
    std::string scenario;
    VideoClip source;
    std::size_t preserved_frames = 0;
    long prompt_id = 0;
    std::optional<long> audio_seed;
    std::optional<RealArray> audio_latent;
    std::string comment;
    std::map<std::string, std::string> overrides;
};

struct TaskManifest {
    std::vector<EditTask> tasks;
};

bool validate_temporal(std::size_t t);

/// Retake start time in seconds: K / fps.
double retake_start(std::size_t preserved_frames, double fps);

VideoClip read_clip(const std::string& path);
void write_clip(const VideoClip& clip, const std::string& path);

/// ".alat" audio-latent container: rank-2 array (L_a, D_a).
RealArray read_latent(const std::string& path);
void write_latent(const RealArray& latent, const std::string& path);

/// Manifests are UTF-8 key=value lines; blank lines separate tasks; '#'
/// starts a comment line. Recognized keys: scenario, clip, k, prompt_id,
/// audio_seed, audio, comment, plus tuning overrides (lambda_alpha, lambda_v,
/// lambda_lpips, lambda_temp, eps, lr0, max_iters, patience, k_grad,
/// schedule, n_frames, seed). Paths are resolved relative to the manifest.
TaskManifest load_task_manifest(const std::string& path);

const std::vector<std::string>& tuning_override_keys();

}  // namespace condtune::media
