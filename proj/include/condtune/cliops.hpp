// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "condtune/media.hpp"
#include "condtune/tuner.hpp"

namespace condtune::cliops {

/// Parsed command-line state shared by all subcommands. Unset optionals fall
/// back to the defaults (and the seed to CONDTUNE_SEED, then 0).
struct CliOptions {
    std::string manifest;
    std::string out_dir;
    std::string results_dir;
    std::string survey;
    std::optional<std::uint64_t> seed;
    std::optional<double> lr;
    std::optional<double> lambda_alpha;
    std::optional<double> lambda_v;
    std::optional<double> lambda_lpips;
    std::optional<double> lambda_temp;
    std::optional<long> iters;
    std::optional<long> patience;
    std::optional<long> n_frames;
    std::optional<long> k_grad;
    std::optional<std::string> schedule;
    std::optional<std::string> variant;
    std::size_t budget = 0;
    std::size_t workers = 1;
    std::string corrupt;  // gradcheck fault-injection fixture

    std::size_t synth_tasks = 3;
    std::size_t synth_frames = 9;
    std::size_t synth_height = 8;
    std::size_t synth_width = 8;
};

/// --seed, else CONDTUNE_SEED, else 0.
std::uint64_t resolve_seed(const CliOptions& opts);

/// Defaults, overridden by CLI flags, overridden by per-task manifest keys.
tuner::TuningConfig resolve_config(const CliOptions& opts, const media::EditTask& task);

int cmd_tune(const CliOptions& opts);
int cmd_compare(const CliOptions& opts);
int cmd_eval(const CliOptions& opts);
int cmd_gradcheck(const CliOptions& opts);
int cmd_synth(const CliOptions& opts);

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailure = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitGradcheckFailure = 3;

}  // namespace condtune::cliops
