// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "condtune/cliops.hpp"

namespace cliops = condtune::cliops;

int main(int argc, char** argv) {
    CLI::App app{"test-time conditioning tuning for motion-centric video editing"};
    app.require_subcommand(1);

    cliops::CliOptions opts;
    std::uint64_t seed = 0;
    double lr = 0.0, la = 0.0, lv = 0.0, ll = 0.0, lt = 0.0;
    long iters = 0, patience = 0, n_frames = 0, k_grad = 0;
    std::string schedule, variant;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "run seed (else CONDTUNE_SEED, else 0)");
    };
    auto add_tuning = [&](CLI::App* sub) {
        sub->add_option("--manifest", opts.manifest, "task manifest file")->required();
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--lr", lr, "initial learning rate");
        sub->add_option("--iters", iters, "optimization iteration budget");
        sub->add_option("--patience", patience, "early-stop patience");
        sub->add_option("--lambda-alpha", la, "audio latent anchor weight");
        sub->add_option("--lambda-v", lv, "text residual anchor weight");
        sub->add_option("--lambda-lpips", ll, "perceptual preservation weight");
        sub->add_option("--lambda-temp", lt, "temporal preservation weight");
        sub->add_option("--schedule", schedule, "critic frame schedule")
            ->check(CLI::IsMember({"uniform", "midpoint"}));
        sub->add_option("--n-frames", n_frames, "frames scored by the critic");
        sub->add_option("--k-grad", k_grad, "backprop depth in generator steps");
        sub->add_option("--variant", variant, "critic variant")
            ->check(CLI::IsMember({"temporal", "framewise"}));
        sub->add_option("--workers", opts.workers, "parallel task workers");
        add_seed(sub);
    };

    CLI::App* tune = app.add_subcommand("tune", "optimize conditioning per task");
    add_tuning(tune);
    CLI::App* compare =
        app.add_subcommand("compare", "gradient tuner vs PPO at matched critic budgets");
    add_tuning(compare);
    compare->add_option("--budget", opts.budget, "critic-call budget per method")->required();
    CLI::App* eval_cmd = app.add_subcommand("eval", "score tuned outputs and plot traces");
    eval_cmd->add_option("--results", opts.results_dir, "directory of tune outputs")
        ->required();
    eval_cmd->add_option("--out", opts.out_dir, "output directory");
    eval_cmd->add_option("--survey", opts.survey, "rater survey CSV");
    add_seed(eval_cmd);
    CLI::App* grad =
        app.add_subcommand("gradcheck", "finite-difference audit of every gradient path");
    grad->add_option("--out", opts.out_dir, "optional report directory");
    grad->add_option("--corrupt", opts.corrupt,
                     "skew one path's analytic gradient (test fixture)");
    add_seed(grad);
    CLI::App* synth = app.add_subcommand("synth", "generate a toy clip corpus and manifest");
    synth->add_option("--out", opts.out_dir, "output directory")->required();
    synth->add_option("--tasks", opts.synth_tasks, "number of tasks");
    synth->add_option("--frames", opts.synth_frames, "frames per clip");
    synth->add_option("--height", opts.synth_height, "frame height");
    synth->add_option("--width", opts.synth_width, "frame width");
    add_seed(synth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cliops::kExitOk : cliops::kExitInvalidInput;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub == tune || sub == compare) {
        if (sub->count("--lr")) opts.lr = lr;
        if (sub->count("--iters")) opts.iters = iters;
        if (sub->count("--patience")) opts.patience = patience;
        if (sub->count("--lambda-alpha")) opts.lambda_alpha = la;
        if (sub->count("--lambda-v")) opts.lambda_v = lv;
        if (sub->count("--lambda-lpips")) opts.lambda_lpips = ll;
        if (sub->count("--lambda-temp")) opts.lambda_temp = lt;
        if (sub->count("--schedule")) opts.schedule = schedule;
        if (sub->count("--n-frames")) opts.n_frames = n_frames;
        if (sub->count("--k-grad")) opts.k_grad = k_grad;
        if (sub->count("--variant")) opts.variant = variant;
    }

    try {
        if (sub == tune) return cliops::cmd_tune(opts);
        if (sub == compare) return cliops::cmd_compare(opts);
        if (sub == eval_cmd) return cliops::cmd_eval(opts);
        if (sub == grad) return cliops::cmd_gradcheck(opts);
        return cliops::cmd_synth(opts);
    } catch (const std::exception& e) {
        std::cerr << argv[0] << ": " << e.what() << "\n";
        return cliops::kExitInvalidInput;
    }
}
