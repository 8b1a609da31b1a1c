// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace condtune::gradcheck {

struct PathResult {
    std::string path;
    double max_rel_err = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    double tolerance = 1e-4;
    std::vector<PathResult> paths;
    bool pass = true;
};

/// Central finite differences (h = 1e-5) against the tape gradients for
/// every primitive and every composite differentiable path at tiny dims.
/// `corrupt` names a path whose analytic gradient is deliberately skewed;
/// the report must then fail on exactly that line (test fixture).
GradCheckReport run_gradcheck(std::uint64_t seed, const std::string& corrupt = "");

/// One line per path: "<path> max_rel_err=<err> PASS|FAIL".
std::string gradcheck_text(const GradCheckReport& report);

}  // namespace condtune::gradcheck
