// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/cliops.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "condtune/critic.hpp"
#include "condtune/genmodel.hpp"
#include "condtune/gradcheck.hpp"
#include "condtune/metrics.hpp"
#include "condtune/ppo.hpp"
#include "condtune/report.hpp"
#include "condtune/rng.hpp"

namespace condtune::cliops {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sanitize_stem(const std::string& name) {
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    if (out.empty()) out = "task";
    return out;
}

std::vector<std::string> unique_stems(const std::vector<media::EditTask>& tasks) {
    std::vector<std::string> stems;
    std::set<std::string> used;
    for (const media::EditTask& t : tasks) {
        std::string s = sanitize_stem(t.scenario);
        std::string candidate = s;
        std::size_t n = 1;
        while (!used.insert(candidate).second) {
            candidate = s + "_" + std::to_string(n++);
        }
        stems.push_back(candidate);
    }
    return stems;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw std::invalid_argument("override " + key + ": bad number '" + value + "'");
    }
    return v;
}

long parse_long(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') {
        throw std::invalid_argument("override " + key + ": bad integer '" + value + "'");
    }
    return v;
}

std::size_t parse_size(const std::string& key, long v) {
    if (v < 0) throw std::invalid_argument("override " + key + ": must be non-negative");
    return static_cast<std::size_t>(v);
}

critic::Schedule parse_schedule(const std::string& s) {
    if (s == "uniform") return critic::Schedule::Uniform;
    if (s == "midpoint") return critic::Schedule::Midpoint;
    throw std::invalid_argument("schedule must be 'uniform' or 'midpoint', got '" + s + "'");
}

critic::CriticVariant parse_variant(const std::string& s) {
    if (s == "temporal") return critic::CriticVariant::Temporal;
    if (s == "framewise") return critic::CriticVariant::Framewise;
    throw std::invalid_argument("variant must be 'temporal' or 'framewise', got '" + s + "'");
}

struct TaskModels {
    genmodel::FrozenGenerator gen;
    critic::MotionCritic crit;
    metrics::PerceptualNet pnet;
};

TaskModels build_models(const media::EditTask& task, const tuner::TuningConfig& cfg) {
    genmodel::GenDims dims;
    dims.t = task.source.t;
    dims.h = task.source.h;
    dims.w = task.source.w;
    dims.c = task.source.c;
    TaskModels m{genmodel::build_generator(static_cast<long>(cfg.seed), dims, 30),
                 critic::build_critic(static_cast<long>(cfg.seed), dims.frame_size()),
                 metrics::build_perceptual(metrics::kDefaultPerceptualSeed, task.source.c)};
    return m;
}

template <typename Fn>
void run_pool(std::size_t n_tasks, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n_tasks == 0 ? 1 : n_tasks));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                fn(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

std::map<std::string, std::string> config_snapshot(const CliOptions& opts) {
    std::map<std::string, std::string> snap;
    snap["manifest"] = opts.manifest;
    snap["out"] = opts.out_dir;
    snap["seed"] = std::to_string(resolve_seed(opts));
    snap["workers"] = std::to_string(opts.workers);
    if (opts.budget > 0) snap["budget"] = std::to_string(opts.budget);
    if (opts.lr) snap["lr"] = fmt17(*opts.lr);
    if (opts.lambda_alpha) snap["lambda_alpha"] = fmt17(*opts.lambda_alpha);
    if (opts.lambda_v) snap["lambda_v"] = fmt17(*opts.lambda_v);
    if (opts.lambda_lpips) snap["lambda_lpips"] = fmt17(*opts.lambda_lpips);
    if (opts.lambda_temp) snap["lambda_temp"] = fmt17(*opts.lambda_temp);
    if (opts.iters) snap["iters"] = std::to_string(*opts.iters);
    if (opts.patience) snap["patience"] = std::to_string(*opts.patience);
    if (opts.n_frames) snap["n_frames"] = std::to_string(*opts.n_frames);
    if (opts.k_grad) snap["k_grad"] = std::to_string(*opts.k_grad);
    if (opts.schedule) snap["schedule"] = *opts.schedule;
    if (opts.variant) snap["variant"] = *opts.variant;
    if (!opts.results_dir.empty()) snap["results"] = opts.results_dir;
    if (!opts.survey.empty()) snap["survey"] = opts.survey;
    return snap;
}

std::string stop_reason_name(tuner::StopReason r) {
    return r == tuner::StopReason::Budget ? "budget" : "patience";
}

double best_total_of(const tuner::TuneResult& res) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lb : res.trace) best = std::min(best, lb.total);
    return best;
}

struct ParsedTrace {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> by_column;
};

ParsedTrace parse_trace_csv(const std::string& text, const std::string& origin) {
    ParsedTrace out;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t fpos = 0;
        for (;;) {
            const std::size_t comma = line.find(',', fpos);
            fields.push_back(line.substr(fpos, comma - fpos));
            if (comma == std::string::npos) break;
            fpos = comma + 1;
        }
        if (header) {
            out.columns = fields;
            out.by_column.resize(fields.size());
            header = false;
            continue;
        }
        if (fields.size() != out.columns.size()) {
            throw std::invalid_argument(origin + ": ragged CSV row");
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            out.by_column[i].push_back(parse_double(out.columns[i], fields[i]));
        }
    }
    if (out.columns.empty()) throw std::invalid_argument(origin + ": empty trace file");
    return out;
}

std::size_t feasible_ssim_scales(std::size_t h, std::size_t w) {
    std::size_t s = 1;
    while (s < 3 && (std::min(h, w) >> s) >= 2) ++s;
    return s;
}

media::VideoClip synth_clip(std::uint64_t seed, std::size_t t, std::size_t h, std::size_t w) {
    media::VideoClip clip;
    clip.t = t;
    clip.h = h;
    clip.w = w;
    clip.c = 3;
    clip.fps = 25.0;
    clip.frames = numcore::uniform_array({t, h, w, 3}, seed, 1, 0.25, 0.6);
    const std::size_t fsz = clip.frame_size();
    // Static backdrop plus a blob marching along the diagonal: enough motion
    // signal for drift search and the critic to latch onto.
    for (std::size_t f = 1; f < t; ++f) {
        for (std::size_t i = 0; i < fsz; ++i) {
            clip.frames.data[f * fsz + i] = clip.frames.data[i];
        }
    }
    for (std::size_t f = 0; f < t; ++f) {
        const std::size_t by = (2 * f) % h;
        const std::size_t bx = (3 * f) % w;
        for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
                const std::size_t y = (by + dy) % h;
                const std::size_t x = (bx + dx) % w;
                for (std::size_t c = 0; c < 3; ++c) {
                    clip.frames.data[f * fsz + (y * w + x) * 3 + c] = 0.92;
                }
            }
        }
    }
    return clip;
}

struct OutcomeBase {
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> files;
};

void report_failures(const std::vector<media::EditTask>& tasks,
                     const std::vector<OutcomeBase*>& outcomes) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!outcomes[i]->ok) {
            std::cerr << "task " << tasks[i].scenario << " failed: " << outcomes[i]->error
                      << "\n";
        }
    }
}

}  // namespace

std::uint64_t resolve_seed(const CliOptions& opts) {
    if (opts.seed) return *opts.seed;
    const char* env = std::getenv("CONDTUNE_SEED");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw std::invalid_argument(std::string("CONDTUNE_SEED is not an integer: '") + env +
                                    "'");
    }
    return static_cast<std::uint64_t>(v);
}

tuner::TuningConfig resolve_config(const CliOptions& opts, const media::EditTask& task) {
    tuner::TuningConfig cfg;
    bool patience_pinned = false;
    cfg.seed = resolve_seed(opts);
    if (opts.lr) cfg.lr0 = *opts.lr;
    if (opts.lambda_alpha) cfg.lambda_alpha = *opts.lambda_alpha;
    if (opts.lambda_v) cfg.lambda_v = *opts.lambda_v;
    if (opts.lambda_lpips) cfg.lambda_lpips = *opts.lambda_lpips;
    if (opts.lambda_temp) cfg.lambda_temp = *opts.lambda_temp;
    if (opts.iters) cfg.max_iters = parse_size("iters", *opts.iters);
    if (opts.patience) {
        cfg.patience = parse_size("patience", *opts.patience);
        patience_pinned = true;
    }
    if (opts.n_frames) cfg.n_frames = parse_size("n_frames", *opts.n_frames);
    if (opts.k_grad) cfg.k_grad = parse_size("k_grad", *opts.k_grad);
    if (opts.schedule) cfg.schedule = parse_schedule(*opts.schedule);
    if (opts.variant) cfg.variant = parse_variant(*opts.variant);

    for (const auto& [key, value] : task.overrides) {
        if (key == "lambda_alpha") cfg.lambda_alpha = parse_double(key, value);
        else if (key == "lambda_v") cfg.lambda_v = parse_double(key, value);
        else if (key == "lambda_lpips") cfg.lambda_lpips = parse_double(key, value);
        else if (key == "lambda_temp") cfg.lambda_temp = parse_double(key, value);
        else if (key == "eps") cfg.eps = parse_double(key, value);
        else if (key == "lr0") cfg.lr0 = parse_double(key, value);
        else if (key == "max_iters") cfg.max_iters = parse_size(key, parse_long(key, value));
        else if (key == "patience") {
            cfg.patience = parse_size(key, parse_long(key, value));
            patience_pinned = true;
        }
        else if (key == "k_grad") cfg.k_grad = parse_size(key, parse_long(key, value));
        else if (key == "schedule") cfg.schedule = parse_schedule(value);
        else if (key == "n_frames") cfg.n_frames = parse_size(key, parse_long(key, value));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
        else throw std::invalid_argument("unknown override key: " + key);
    }
    // A default patience larger than an explicit iteration budget is not a
    // user contradiction; only pinned values are held to the invariant.
    if (!patience_pinned) cfg.patience = std::min(cfg.patience, cfg.max_iters);
    tuner::validate_config(cfg);
    return cfg;
}

int cmd_tune(const CliOptions& opts) {
    media::TaskManifest manifest;
    try {
        manifest = media::load_task_manifest(opts.manifest);
        fs::create_directories(opts.out_dir.empty() ? "." : opts.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "tune: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    const fs::path out = opts.out_dir.empty() ? "." : opts.out_dir;
    const std::vector<std::string> stems = unique_stems(manifest.tasks);

    struct Outcome : OutcomeBase {
        std::size_t iterations = 0;
        std::string stop_reason;
        std::string initial_total, best_total, p_base, p_tuned;
    };
    std::vector<Outcome> outcomes(manifest.tasks.size());

    run_pool(manifest.tasks.size(), opts.workers, [&](std::size_t i) {
        Outcome& oc = outcomes[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const media::EditTask& task = manifest.tasks[i];
            const tuner::TuningConfig cfg = resolve_config(opts, task);
            oc.seed = cfg.seed;
            const TaskModels m = build_models(task, cfg);
            const tuner::TuneContext ctx{&m.gen, &m.crit, &m.pnet};
            const tuner::TuneResult res = tuner::tune(ctx, task, cfg);

            const critic::MotionTemplate tmpl =
                critic::template_for_prompt(m.crit, task.prompt_id);
            const double p_base = critic::score_clip(res.baseline_clip, m.crit, tmpl,
                                                     cfg.schedule, cfg.n_frames, cfg.variant)
                                      .p_yes;
            const double p_tuned = critic::score_clip(res.final_clip, m.crit, tmpl,
                                                      cfg.schedule, cfg.n_frames, cfg.variant)
                                       .p_yes;

            const std::string stem = (out / stems[i]).string();
            tuner::write_trace_csv(stem + ".tres", res);
            media::write_latent(res.best.alpha, stem + "_alpha.alat");
            media::write_latent(res.best.delta_v, stem + "_delta_v.alat");
            media::write_clip(res.final_clip, stem + "_final.vclip");
            media::write_clip(res.baseline_clip, stem + "_baseline.vclip");
            oc.files = {stem + ".tres", stem + "_alpha.alat", stem + "_delta_v.alat",
                        stem + "_final.vclip", stem + "_baseline.vclip"};

            oc.iterations = res.trace.size();
            oc.stop_reason = stop_reason_name(res.stop_reason);
            if (!res.trace.empty()) {
                oc.initial_total = fmt17(res.trace.front().total);
                oc.best_total = fmt17(best_total_of(res));
            }
            oc.p_base = fmt17(p_base);
            oc.p_tuned = fmt17(p_tuned);
            oc.ok = true;
        } catch (const std::exception& e) {
            oc.error = e.what();
        }
        oc.seconds = now_seconds(t0);
    });

    report::RunRecord record;
    record.command = "tune";
    record.config = config_snapshot(opts);
    record.seeds["global"] = resolve_seed(opts);
    std::vector<report::TimingRow> timings;
    bool any_failed = false;

    if (!manifest.tasks.empty()) {
        std::string summary = "scenario,iterations,stop_reason,initial_total,best_total,"
                              "p_yes_baseline,p_yes_tuned,status\n";
        for (std::size_t i = 0; i < manifest.tasks.size(); ++i) {
            const Outcome& oc = outcomes[i];
            any_failed = any_failed || !oc.ok;
            record.seeds["task." + stems[i]] = oc.seed;
            for (const std::string& f : oc.files) record.outputs.push_back(f);
            timings.push_back({stems[i], oc.seconds});
            summary += manifest.tasks[i].scenario;
            summary += ',' + std::to_string(oc.iterations);
            summary += ',' + oc.stop_reason;
            summary += ',' + oc.initial_total + ',' + oc.best_total;
            summary += ',' + oc.p_base + ',' + oc.p_tuned;
            summary += oc.ok ? ",ok\n" : ",failed\n";
        }
        const std::string summary_path = (out / "summary.csv").string();
        report::write_text_file(summary_path, summary);
        record.outputs.push_back(summary_path);
        std::vector<OutcomeBase*> bases;
        for (Outcome& oc : outcomes) bases.push_back(&oc);
        report_failures(manifest.tasks, bases);
    }

    record.timings_path = (out / "timings.csv").string();
    report::write_text_file(record.timings_path, report::timings_csv(timings));
    report::write_run_record((out / "run_record.json").string(), record);
    return any_failed ? kExitTaskFailure : kExitOk;
}

int cmd_compare(const CliOptions& opts) {
    if (opts.budget == 0) {
        std::cerr << "compare: --budget must be a positive critic-call count\n";
        return kExitInvalidInput;
    }
    media::TaskManifest manifest;
    try {
        manifest = media::load_task_manifest(opts.manifest);
        fs::create_directories(opts.out_dir.empty() ? "." : opts.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "compare: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    const fs::path out = opts.out_dir.empty() ? "." : opts.out_dir;
    const std::vector<std::string> stems = unique_stems(manifest.tasks);

    struct Outcome : OutcomeBase {
        std::size_t grad_calls = 0, ppo_calls = 0;
        std::string grad_best, ppo_best, winner;
    };
    std::vector<Outcome> outcomes(manifest.tasks.size());

    run_pool(manifest.tasks.size(), opts.workers, [&](std::size_t i) {
        Outcome& oc = outcomes[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const media::EditTask& task = manifest.tasks[i];
            tuner::TuningConfig cfg = resolve_config(opts, task);
            cfg.max_iters = opts.budget;
            cfg.patience = std::min(cfg.patience, cfg.max_iters);
            oc.seed = cfg.seed;
            const TaskModels m = build_models(task, cfg);
            const tuner::TuneContext ctx{&m.gen, &m.crit, &m.pnet};

            const tuner::TuneResult grad = tuner::tune(ctx, task, cfg);
            oc.grad_calls = grad.trace.size();
            const ppo::PpoConfig pcfg;
            const ppo::PpoResult po = ppo::ppo_tune(ctx, task, oc.grad_calls, cfg, pcfg);
            oc.ppo_calls = po.critic_calls;
            if (oc.ppo_calls != oc.grad_calls) {
                throw std::runtime_error("budget accounting mismatch");
            }

            const double gb = best_total_of(grad);
            const double pb = best_total_of(po.result);
            oc.grad_best = fmt17(gb);
            oc.ppo_best = fmt17(pb);
            oc.winner = gb < pb ? "grad" : (pb < gb ? "ppo" : "tie");

            const std::string stem = (out / stems[i]).string();
            tuner::write_trace_csv(stem + "_grad.tres", grad);
            tuner::write_trace_csv(stem + "_ppo.tres", po.result, &po.rewards);
            oc.files = {stem + "_grad.tres", stem + "_ppo.tres"};
            oc.ok = true;
        } catch (const std::exception& e) {
            oc.error = e.what();
        }
        oc.seconds = now_seconds(t0);
    });

    report::RunRecord record;
    record.command = "compare";
    record.config = config_snapshot(opts);
    record.seeds["global"] = resolve_seed(opts);
    std::vector<report::TimingRow> timings;
    bool any_failed = false;

    if (!manifest.tasks.empty()) {
        std::string csv = "scenario,budget,grad_calls,ppo_calls,grad_best_total,"
                          "ppo_best_total,winner,status\n";
        for (std::size_t i = 0; i < manifest.tasks.size(); ++i) {
            const Outcome& oc = outcomes[i];
            any_failed = any_failed || !oc.ok;
            record.seeds["task." + stems[i]] = oc.seed;
            for (const std::string& f : oc.files) record.outputs.push_back(f);
            timings.push_back({stems[i], oc.seconds});
            csv += manifest.tasks[i].scenario;
            csv += ',' + std::to_string(opts.budget);
            csv += ',' + std::to_string(oc.grad_calls) + ',' + std::to_string(oc.ppo_calls);
            csv += ',' + oc.grad_best + ',' + oc.ppo_best + ',' + oc.winner;
            csv += oc.ok ? ",ok\n" : ",failed\n";
        }
        const std::string path = (out / "compare.csv").string();
        report::write_text_file(path, csv);
        record.outputs.push_back(path);
        std::vector<OutcomeBase*> bases;
        for (Outcome& oc : outcomes) bases.push_back(&oc);
        report_failures(manifest.tasks, bases);
    }

    record.timings_path = (out / "timings.csv").string();
    report::write_text_file(record.timings_path, report::timings_csv(timings));
    report::write_run_record((out / "run_record.json").string(), record);
    return any_failed ? kExitTaskFailure : kExitOk;
}

int cmd_eval(const CliOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path results = opts.results_dir;
    if (opts.results_dir.empty() || !fs::is_directory(results)) {
        std::cerr << "eval: results directory not found: '" << opts.results_dir << "'\n";
        return kExitInvalidInput;
    }
    std::vector<std::string> trace_stems;
    for (const auto& entry : fs::directory_iterator(results)) {
        if (entry.path().extension() == ".tres") {
            trace_stems.push_back(entry.path().stem().string());
        }
    }
    std::sort(trace_stems.begin(), trace_stems.end());
    if (trace_stems.empty()) {
        std::cerr << "eval: no .tres trace files found in " << opts.results_dir << "\n";
        return kExitInvalidInput;
    }
    if (!opts.survey.empty() && !fs::is_regular_file(opts.survey)) {
        std::cerr << "eval: survey file not found: " << opts.survey << "\n";
        return kExitInvalidInput;
    }

    const fs::path out = opts.out_dir.empty() ? "." : opts.out_dir;
    report::RunRecord record;
    record.command = "eval";
    record.config = config_snapshot(opts);
    record.seeds["global"] = resolve_seed(opts);

    try {
        fs::create_directories(out);
        for (const std::string& stem : trace_stems) {
            const std::string path = (results / (stem + ".tres")).string();
            const ParsedTrace trace = parse_trace_csv(report::read_text_file(path), path);
            std::vector<report::Series> series;
            for (const char* want : {"l_vlm", "l_latent", "l_lpips", "l_temp", "total"}) {
                for (std::size_t c = 0; c < trace.columns.size(); ++c) {
                    if (trace.columns[c] == want) {
                        series.push_back({want, trace.by_column[c]});
                    }
                }
            }
            const std::string svg_path = (out / (stem + "_trace.svg")).string();
            report::write_text_file(svg_path,
                                    report::svg_line_plot(stem + " loss trace", series));
            record.outputs.push_back(svg_path);
        }

        const metrics::PerceptualNet pnet =
            metrics::build_perceptual(metrics::kDefaultPerceptualSeed, 3);
        std::string scores = "scenario,frpd,ms_ssim,d_bg,drift,flatness\n";
        std::vector<std::vector<double>> cols(5);
        std::size_t scored = 0;
        for (const std::string& stem : trace_stems) {
            const fs::path final_p = results / (stem + "_final.vclip");
            const fs::path base_p = results / (stem + "_baseline.vclip");
            if (!fs::is_regular_file(final_p) || !fs::is_regular_file(base_p)) continue;
            const media::VideoClip final_clip = media::read_clip(final_p.string());
            const media::VideoClip base_clip = media::read_clip(base_p.string());
            const numcore::RealArray mask({final_clip.h, final_clip.w}, 1.0);
            const double row[5] = {
                metrics::frpd(final_clip, base_clip, pnet),
                metrics::ms_ssim(final_clip, base_clip,
                                 feasible_ssim_scales(final_clip.h, final_clip.w)),
                metrics::bg_distance(base_clip, final_clip, mask, pnet),
                metrics::global_drift(final_clip).mean_magnitude,
                metrics::motion_flatness(final_clip)};
            scores += stem;
            for (std::size_t c = 0; c < 5; ++c) {
                scores += ',' + fmt17(row[c]);
                cols[c].push_back(row[c]);
            }
            scores += '\n';
            ++scored;
        }
        const std::string scores_path = (out / "scores.csv").string();
        report::write_text_file(scores_path, scores);
        record.outputs.push_back(scores_path);

        std::string agg = "metric,mean,min,max\n";
        const char* names[5] = {"frpd", "ms_ssim", "d_bg", "drift", "flatness"};
        for (std::size_t c = 0; c < 5 && scored > 0; ++c) {
            double sum = 0.0, lo = cols[c][0], hi = cols[c][0];
            for (double v : cols[c]) {
                sum += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            agg += std::string(names[c]) + ',' + fmt17(sum / static_cast<double>(scored)) +
                   ',' + fmt17(lo) + ',' + fmt17(hi) + '\n';
        }
        const std::string agg_path = (out / "aggregate.csv").string();
        report::write_text_file(agg_path, agg);
        record.outputs.push_back(agg_path);

        if (!opts.survey.empty()) {
            const std::string text = report::read_text_file(opts.survey);
            std::vector<metrics::SurveyResponse> responses;
            std::size_t pos = 0;
            bool header = true;
            while (pos < text.size()) {
                std::size_t eol = text.find('\n', pos);
                if (eol == std::string::npos) eol = text.size();
                std::string line = text.substr(pos, eol - pos);
                pos = eol + 1;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || line[0] == '#') continue;
                if (header) {
                    if (line != "rater,scenario,method,rank,achieved") {
                        throw std::invalid_argument(
                            "survey header must be rater,scenario,method,rank,achieved");
                    }
                    header = false;
                    continue;
                }
                std::vector<std::string> f;
                std::size_t fpos = 0;
                for (;;) {
                    const std::size_t comma = line.find(',', fpos);
                    f.push_back(line.substr(fpos, comma - fpos));
                    if (comma == std::string::npos) break;
                    fpos = comma + 1;
                }
                if (f.size() != 5) throw std::invalid_argument("survey row needs 5 fields");
                metrics::SurveyResponse r;
                r.rater = f[0];
                r.scenario = f[1];
                r.method = f[2];
                r.rank = static_cast<int>(parse_long("rank", f[3]));
                r.achieved = parse_long("achieved", f[4]) != 0;
                responses.push_back(std::move(r));
            }
            std::string survey_csv = "scenario,method,raters,win,top3,avg,achieved\n";
            for (const metrics::SurveyStats& s : metrics::survey_aggregate(responses)) {
                survey_csv += s.scenario + ',' + s.method + ',' + std::to_string(s.raters) +
                              ',' + fmt17(s.win) + ',' + fmt17(s.top3) + ',' + fmt17(s.avg) +
                              ',' + fmt17(s.achieved) + '\n';
            }
            const std::string survey_path = (out / "survey.csv").string();
            report::write_text_file(survey_path, survey_csv);
            record.outputs.push_back(survey_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "eval: " << e.what() << "\n";
        return kExitInvalidInput;
    }

    record.timings_path = (out / "timings.csv").string();
    report::write_text_file(record.timings_path,
                            report::timings_csv({{"eval", now_seconds(t0)}}));
    report::write_run_record((out / "run_record.json").string(), record);
    return kExitOk;
}

int cmd_gradcheck(const CliOptions& opts) {
    std::uint64_t seed = 0;
    try {
        seed = resolve_seed(opts);
    } catch (const std::exception& e) {
        std::cerr << "gradcheck: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    const gradcheck::GradCheckReport rep = gradcheck::run_gradcheck(seed, opts.corrupt);
    const std::string text = gradcheck::gradcheck_text(rep);
    std::cout << text;
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        report::write_text_file((fs::path(opts.out_dir) / "gradcheck.txt").string(), text);
    }
    return rep.pass ? kExitOk : kExitGradcheckFailure;
}

int cmd_synth(const CliOptions& opts) {
    if (opts.out_dir.empty()) {
        std::cerr << "synth: --out directory is required\n";
        return kExitInvalidInput;
    }
    if (opts.synth_frames < 2 || (opts.synth_frames - 1) % 8 != 0) {
        std::cerr << "synth: frame count must satisfy (T-1) % 8 == 0\n";
        return kExitInvalidInput;
    }
    const std::uint64_t seed = resolve_seed(opts);
    const fs::path out = opts.out_dir;
    fs::create_directories(out);

    report::RunRecord record;
    record.command = "synth";
    record.config = config_snapshot(opts);
    record.seeds["global"] = seed;

    std::string manifest = "# generated toy manifest\n";
    for (std::size_t i = 0; i < opts.synth_tasks; ++i) {
        const media::VideoClip clip =
            synth_clip(seed + i, opts.synth_frames, opts.synth_height, opts.synth_width);
        const std::string clip_name = "clip_" + std::to_string(i) + ".vclip";
        media::write_clip(clip, (out / clip_name).string());
        record.outputs.push_back((out / clip_name).string());
        manifest += "\nscenario=task_" + std::to_string(i) + "\n";
        manifest += "clip=" + clip_name + "\n";
        manifest += "k=2\n";
        manifest += "prompt_id=" + std::to_string(i + 1) + "\n";
        if (i % 2 == 1) manifest += "audio_seed=" + std::to_string(7 + i) + "\n";
    }
    const std::string manifest_path = (out / "manifest.txt").string();
    report::write_text_file(manifest_path, manifest);
    record.outputs.push_back(manifest_path);

    record.timings_path = (out / "timings.csv").string();
    report::write_text_file(record.timings_path, report::timings_csv({}));
    report::write_run_record((out / "run_record.json").string(), record);
    return kExitOk;
}

}  // namespace condtune::cliops
