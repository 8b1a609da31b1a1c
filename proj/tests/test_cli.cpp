// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "condtune/cliops.hpp"
#include "condtune/gradcheck.hpp"
#include "condtune/report.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace condtune;
namespace fs = std::filesystem;

namespace {

fs::path make_scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("condtune_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

cliops::CliOptions quick_tune_opts(const fs::path& scratch) {
    cliops::CliOptions opts;
    opts.manifest = (scratch / "corpus" / "manifest.txt").string();
    opts.out_dir = (scratch / "runs").string();
    opts.seed = 4;
    opts.iters = 3;
    opts.patience = 3;
    opts.k_grad = 3;
    opts.n_frames = 4;
    return opts;
}

void make_corpus(const fs::path& scratch, std::size_t tasks = 2) {
    cliops::CliOptions opts;
    opts.out_dir = (scratch / "corpus").string();
    opts.seed = 4;
    opts.synth_tasks = tasks;
    REQUIRE(cliops::cmd_synth(opts) == cliops::kExitOk);
}

std::vector<std::string> sorted_files(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

// Minimal well-formedness check: the tag stack must balance and attribute
// values must not smuggle raw angle brackets past the escaper.
bool xml_well_formed(const std::string& text) {
    if (text.rfind("<?xml", 0) != 0) return false;
    std::vector<std::string> stack;
    std::size_t pos = 0;
    while ((pos = text.find('<', pos)) != std::string::npos) {
        const std::size_t end = text.find('>', pos);
        if (end == std::string::npos) return false;
        std::string tag = text.substr(pos + 1, end - pos - 1);
        pos = end + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        const bool closing = tag[0] == '/';
        const bool selfclosing = tag.back() == '/';
        if (closing) tag = tag.substr(1);
        const std::string name = tag.substr(0, tag.find_first_of(" \t/"));
        if (name.empty()) return false;
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!selfclosing) {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

}  // namespace

TEST_CASE("seed resolution order: flag, then environment, then zero") {
    cliops::CliOptions opts;
    unsetenv("CONDTUNE_SEED");
    CHECK(cliops::resolve_seed(opts) == 0);

    setenv("CONDTUNE_SEED", "77", 1);
    CHECK(cliops::resolve_seed(opts) == 77);

    opts.seed = 9;
    CHECK(cliops::resolve_seed(opts) == 9);

    opts.seed.reset();
    setenv("CONDTUNE_SEED", "notanumber", 1);
    CHECK_THROWS_AS(cliops::resolve_seed(opts), std::invalid_argument);
    unsetenv("CONDTUNE_SEED");
}

TEST_CASE("config resolution: defaults, then flags, then manifest overrides") {
    unsetenv("CONDTUNE_SEED");
    media::EditTask task;

    cliops::CliOptions opts;
    tuner::TuningConfig cfg = cliops::resolve_config(opts, task);
    CHECK(cfg.lr0 == 5e-3);
    CHECK(cfg.lambda_alpha == 0.01);
    CHECK(cfg.lambda_v == 0.001);
    CHECK(cfg.max_iters == 30);
    CHECK(cfg.patience == 15);
    CHECK(cfg.k_grad == 8);
    CHECK(cfg.seed == 0);

    opts.lr = 0.5;
    opts.iters = 7;
    opts.schedule = "midpoint";
    opts.variant = "framewise";
    cfg = cliops::resolve_config(opts, task);
    CHECK(cfg.lr0 == 0.5);
    CHECK(cfg.max_iters == 7);
    CHECK(cfg.schedule == critic::Schedule::Midpoint);
    CHECK(cfg.variant == critic::CriticVariant::Framewise);

    task.overrides["lr0"] = "0.25";
    task.overrides["schedule"] = "uniform";
    task.overrides["seed"] = "12";
    cfg = cliops::resolve_config(opts, task);
    CHECK(cfg.lr0 == 0.25);
    CHECK(cfg.schedule == critic::Schedule::Uniform);
    CHECK(cfg.seed == 12);

    SUBCASE("invalid values are rejected") {
        media::EditTask bad;
        bad.overrides["schedule"] = "sometimes";
        CHECK_THROWS_AS(cliops::resolve_config(cliops::CliOptions{}, bad),
                        std::invalid_argument);
        bad.overrides.clear();
        bad.overrides["lr0"] = "fast";
        CHECK_THROWS_AS(cliops::resolve_config(cliops::CliOptions{}, bad),
                        std::invalid_argument);
        cliops::CliOptions inconsistent;
        inconsistent.iters = 2;
        inconsistent.patience = 5;
        CHECK_THROWS_AS(cliops::resolve_config(inconsistent, media::EditTask{}),
                        std::invalid_argument);
        cliops::CliOptions negative;
        negative.iters = -1;
        CHECK_THROWS_AS(cliops::resolve_config(negative, media::EditTask{}),
                        std::invalid_argument);
    }
}

TEST_CASE("synth then tune roundtrip produces the full artifact set") {
    const fs::path scratch = make_scratch("roundtrip");
    make_corpus(scratch);
    const cliops::CliOptions opts = quick_tune_opts(scratch);
    REQUIRE(cliops::cmd_tune(opts) == cliops::kExitOk);

    const fs::path runs = scratch / "runs";
    for (const char* name :
         {"summary.csv", "run_record.json", "timings.csv", "task_0.tres",
          "task_0_alpha.alat", "task_0_delta_v.alat", "task_0_final.vclip",
          "task_0_baseline.vclip", "task_1.tres", "task_1_final.vclip"}) {
        CAPTURE(name);
        CHECK(fs::is_regular_file(runs / name));
    }

    const std::string summary = report::read_text_file((runs / "summary.csv").string());
    CHECK(summary.rfind("scenario,iterations,stop_reason,initial_total,best_total,"
                        "p_yes_baseline,p_yes_tuned,status\n",
                        0) == 0);
    CHECK(summary.find("task_0,3,budget") != std::string::npos);
    CHECK(summary.find(",ok\n") != std::string::npos);
    // Timings live in their own file so the summary stays byte-reproducible.
    CHECK(summary.find("seconds") == std::string::npos);
    const std::string timings = report::read_text_file((runs / "timings.csv").string());
    CHECK(timings.rfind("label,seconds\n", 0) == 0);

    const nlohmann::json record =
        nlohmann::json::parse(report::read_text_file((runs / "run_record.json").string()));
    CHECK(record["command"] == "tune");
    CHECK(record["config"]["seed"] == "4");
    CHECK(record["config"]["manifest"] == opts.manifest);
    CHECK(record["seeds"]["global"] == 4);
    REQUIRE(record["outputs"].is_array());
    bool saw_trace = false;
    for (const auto& out : record["outputs"]) {
        const std::string path = out.get<std::string>();
        CHECK(fs::is_regular_file(path));
        const std::string checksum = record["checksums"][path].get<std::string>();
        CHECK(checksum == report::file_checksum(path));
        if (path.find("task_0.tres") != std::string::npos) saw_trace = true;
    }
    CHECK(saw_trace);
}

TEST_CASE("repeat runs are byte-identical, independent of worker count") {
    const fs::path scratch = make_scratch("repeat");
    make_corpus(scratch, 3);

    cliops::CliOptions a = quick_tune_opts(scratch);
    a.out_dir = (scratch / "a").string();
    cliops::CliOptions b = a;
    b.out_dir = (scratch / "b").string();
    b.workers = 3;
    REQUIRE(cliops::cmd_tune(a) == cliops::kExitOk);
    REQUIRE(cliops::cmd_tune(b) == cliops::kExitOk);

    const auto names = sorted_files(scratch / "a");
    CHECK(names == sorted_files(scratch / "b"));
    for (const std::string& name : names) {
        if (name == "run_record.json" || name == "timings.csv") continue;
        CAPTURE(name);
        CHECK(report::read_text_file((scratch / "a" / name).string()) ==
              report::read_text_file((scratch / "b" / name).string()));
    }
}

TEST_CASE("manifest overrides flow into per-task tuning") {
    const fs::path scratch = make_scratch("overrides");
    make_corpus(scratch, 1);
    std::string manifest =
        report::read_text_file((scratch / "corpus" / "manifest.txt").string());
    manifest += "max_iters=1\npatience=1\n";
    report::write_text_file((scratch / "corpus" / "manifest.txt").string(), manifest);

    const cliops::CliOptions opts = quick_tune_opts(scratch);
    REQUIRE(cliops::cmd_tune(opts) == cliops::kExitOk);
    const std::string summary =
        report::read_text_file((scratch / "runs" / "summary.csv").string());
    CHECK(summary.find("task_0,1,") != std::string::npos);
}

TEST_CASE("a failing task is isolated and reported without sinking the batch") {
    const fs::path scratch = make_scratch("failure");
    make_corpus(scratch, 2);
    // An absurd learning rate overflows the latent anchor after one step, so
    // the tuner aborts on a non-finite total. The sibling task still runs.
    std::string manifest =
        report::read_text_file((scratch / "corpus" / "manifest.txt").string());
    const std::string marker = "scenario=task_0\n";
    const std::size_t pos = manifest.find(marker);
    REQUIRE(pos != std::string::npos);
    manifest.insert(pos + marker.size(), "lr0=1e300\n");
    report::write_text_file((scratch / "corpus" / "manifest.txt").string(), manifest);

    const cliops::CliOptions opts = quick_tune_opts(scratch);
    CHECK(cliops::cmd_tune(opts) == cliops::kExitTaskFailure);
    const std::string summary =
        report::read_text_file((scratch / "runs" / "summary.csv").string());
    CHECK(summary.find("task_0") != std::string::npos);
    CHECK(summary.find(",failed\n") != std::string::npos);
    CHECK(summary.find(",ok\n") != std::string::npos);
    CHECK(fs::is_regular_file(scratch / "runs" / "task_1_final.vclip"));
}

TEST_CASE("empty manifest succeeds and writes only the run record and timings") {
    const fs::path scratch = make_scratch("empty");
    report::write_text_file((scratch / "manifest.txt").string(), "# nothing to do\n");
    cliops::CliOptions opts;
    opts.manifest = (scratch / "manifest.txt").string();
    opts.out_dir = (scratch / "runs").string();
    CHECK(cliops::cmd_tune(opts) == cliops::kExitOk);
    CHECK(sorted_files(scratch / "runs") ==
          std::vector<std::string>{"run_record.json", "timings.csv"});
}

TEST_CASE("missing or malformed inputs exit with the invalid-input code") {
    const fs::path scratch = make_scratch("badinput");
    cliops::CliOptions opts;
    opts.manifest = (scratch / "absent.txt").string();
    opts.out_dir = (scratch / "runs").string();
    CHECK(cliops::cmd_tune(opts) == cliops::kExitInvalidInput);

    report::write_text_file((scratch / "bad.txt").string(), "scenario=x\n");
    opts.manifest = (scratch / "bad.txt").string();
    CHECK(cliops::cmd_tune(opts) == cliops::kExitInvalidInput);

    cliops::CliOptions cmp;
    cmp.manifest = (scratch / "bad.txt").string();
    cmp.budget = 0;
    CHECK(cliops::cmd_compare(cmp) == cliops::kExitInvalidInput);

    cliops::CliOptions ev;
    ev.results_dir = (scratch / "nope").string();
    CHECK(cliops::cmd_eval(ev) == cliops::kExitInvalidInput);

    fs::create_directories(scratch / "hollow");
    ev.results_dir = (scratch / "hollow").string();
    ev.out_dir = (scratch / "scored").string();
    CHECK(cliops::cmd_eval(ev) == cliops::kExitInvalidInput);
}

TEST_CASE("compare enforces matched critic budgets and reports a winner") {
    const fs::path scratch = make_scratch("compare");
    make_corpus(scratch, 1);
    cliops::CliOptions opts = quick_tune_opts(scratch);
    opts.out_dir = (scratch / "cmp").string();
    opts.budget = 4;
    REQUIRE(cliops::cmd_compare(opts) == cliops::kExitOk);

    const std::string csv =
        report::read_text_file((scratch / "cmp" / "compare.csv").string());
    CHECK(csv.rfind("scenario,budget,grad_calls,ppo_calls,", 0) == 0);
    CHECK(csv.find("task_0,4,4,4,") != std::string::npos);
    CHECK(fs::is_regular_file(scratch / "cmp" / "task_0_grad.tres"));
    const std::string ppo_trace =
        report::read_text_file((scratch / "cmp" / "task_0_ppo.tres").string());
    CHECK(ppo_trace.find(",reward") != std::string::npos);
    CHECK(std::count(ppo_trace.begin(), ppo_trace.end(), '\n') == 5);
}

TEST_CASE("eval scores clip pairs, aggregates, and renders well-formed SVG plots") {
    const fs::path scratch = make_scratch("eval");
    make_corpus(scratch);
    REQUIRE(cliops::cmd_tune(quick_tune_opts(scratch)) == cliops::kExitOk);

    cliops::CliOptions ev;
    ev.results_dir = (scratch / "runs").string();
    ev.out_dir = (scratch / "scored").string();
    REQUIRE(cliops::cmd_eval(ev) == cliops::kExitOk);

    const std::string scores =
        report::read_text_file((scratch / "scored" / "scores.csv").string());
    CHECK(scores.rfind("scenario,frpd,ms_ssim,d_bg,drift,flatness\n", 0) == 0);
    CHECK(scores.find("task_0,") != std::string::npos);
    CHECK(scores.find("task_1,") != std::string::npos);
    const std::string agg =
        report::read_text_file((scratch / "scored" / "aggregate.csv").string());
    for (const char* metric : {"frpd", "ms_ssim", "d_bg", "drift", "flatness"}) {
        CAPTURE(metric);
        CHECK(agg.find(std::string(metric) + ",") != std::string::npos);
    }

    for (const char* name : {"task_0_trace.svg", "task_1_trace.svg"}) {
        CAPTURE(name);
        const std::string svg = report::read_text_file((scratch / "scored" / name).string());
        CHECK(xml_well_formed(svg));
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("total") != std::string::npos);
    }

    SUBCASE("rerunning eval is byte-identical") {
        cliops::CliOptions again = ev;
        again.out_dir = (scratch / "scored2").string();
        REQUIRE(cliops::cmd_eval(again) == cliops::kExitOk);
        for (const char* name : {"scores.csv", "aggregate.csv", "task_0_trace.svg"}) {
            CHECK(report::read_text_file((scratch / "scored" / name).string()) ==
                  report::read_text_file((scratch / "scored2" / name).string()));
        }
    }
}

TEST_CASE("eval aggregates an optional survey and names a missing one") {
    const fs::path scratch = make_scratch("survey");
    make_corpus(scratch, 1);
    REQUIRE(cliops::cmd_tune(quick_tune_opts(scratch)) == cliops::kExitOk);

    cliops::CliOptions ev;
    ev.results_dir = (scratch / "runs").string();
    ev.out_dir = (scratch / "scored").string();
    ev.survey = (scratch / "absent.csv").string();
    CHECK(cliops::cmd_eval(ev) == cliops::kExitInvalidInput);

    report::write_text_file((scratch / "survey.csv").string(),
                            "rater,scenario,method,rank,achieved\n"
                            "r1,task_0,ours,1,1\n"
                            "r1,task_0,baseline,2,0\n"
                            "r2,task_0,ours,1,1\n"
                            "r2,task_0,baseline,2,1\n");
    ev.survey = (scratch / "survey.csv").string();
    REQUIRE(cliops::cmd_eval(ev) == cliops::kExitOk);
    const std::string survey =
        report::read_text_file((scratch / "scored" / "survey.csv").string());
    CHECK(survey.rfind("scenario,method,raters,win,top3,avg,achieved\n", 0) == 0);
    CHECK(survey.find("task_0,ours,2,1,1,3,1\n") != std::string::npos);
    CHECK(survey.find("task_0,baseline,2,0,1,2,0.5\n") != std::string::npos);
}

TEST_CASE("gradcheck command passes clean and flags an injected fault by name") {
    const fs::path scratch = make_scratch("gradcheck");
    cliops::CliOptions opts;
    opts.seed = 3;
    opts.out_dir = (scratch / "report").string();
    CHECK(cliops::cmd_gradcheck(opts) == cliops::kExitOk);
    const std::string text =
        report::read_text_file((scratch / "report" / "gradcheck.txt").string());
    CHECK(text.find("total_loss max_rel_err=") != std::string::npos);
    CHECK(text.find("gradcheck: PASS") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);

    opts.corrupt = "frpd_frame";
    opts.out_dir = (scratch / "corrupt").string();
    CHECK(cliops::cmd_gradcheck(opts) == cliops::kExitGradcheckFailure);
    const std::string bad =
        report::read_text_file((scratch / "corrupt" / "gradcheck.txt").string());
    CHECK(bad.find("gradcheck: FAIL") != std::string::npos);
    const std::size_t line = bad.find("frpd_frame max_rel_err=");
    REQUIRE(line != std::string::npos);
    CHECK(bad.substr(line, bad.find('\n', line) - line).find("FAIL") != std::string::npos);
}

TEST_CASE("synth rejects frame counts the generator cannot host") {
    const fs::path scratch = make_scratch("synthbad");
    cliops::CliOptions opts;
    opts.out_dir = (scratch / "corpus").string();
    opts.synth_frames = 10;
    CHECK(cliops::cmd_synth(opts) == cliops::kExitInvalidInput);
    opts.synth_frames = 17;
    CHECK(cliops::cmd_synth(opts) == cliops::kExitOk);
}
