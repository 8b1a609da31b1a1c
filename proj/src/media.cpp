// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/media.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace condtune::media {

namespace {

constexpr char kClipMagic[5] = {'V', 'C', 'L', 'P', '1'};
constexpr char kLatentMagic[5] = {'A', 'L', 'A', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error(path + ": truncated header");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw std::runtime_error(path + ": truncated payload");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void check_magic(std::istream& is, const char (&magic)[5], const std::string& path) {
    char got[5];
    if (!is.read(got, 5) || std::memcmp(got, magic, 5) != 0) {
        throw std::runtime_error(path + ": bad magic, expected " + std::string(magic, 5));
    }
}

void expect_eof(std::istream& is, const std::string& path) {
    char extra;
    if (is.read(&extra, 1)) {
        throw std::runtime_error(path + ": trailing data after payload");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty()) {
        throw std::runtime_error("manifest: key '" + key + "' needs an integer, got '" + value +
                                 "'");
    }
    return v;
}

}  // namespace

void VideoClip::validate() const {
    if (t == 0 || h == 0 || w == 0 || c == 0) {
        throw std::runtime_error("clip: zero dimension in " +
                                 numcore::shape_to_string({t, h, w, c}));
    }
    if (!validate_temporal(t)) {
        const std::size_t lower = ((t - 1) / 8) * 8 + 1;
        throw std::runtime_error("clip: frame count " + std::to_string(t) +
                                 " violates (T-1) mod 8 == 0; nearest valid counts are " +
                                 std::to_string(lower) + " and " + std::to_string(lower + 8));
    }
    if (fps <= 0.0) throw std::runtime_error("clip: fps must be positive");
    if (frames.shape != std::vector<std::size_t>{t, h, w, c}) {
        throw std::runtime_error("clip: frame array shape " +
                                 numcore::shape_to_string(frames.shape) + " does not match " +
                                 numcore::shape_to_string({t, h, w, c}));
    }
    for (double v : frames.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::runtime_error("clip: value " + std::to_string(v) + " outside [0,1]");
        }
    }
}

bool validate_temporal(std::size_t t) { return t >= 1 && (t - 1) % 8 == 0; }

double retake_start(std::size_t preserved_frames, double fps) {
    if (preserved_frames < 1) throw std::invalid_argument("retake_start: K must be >= 1");
    if (fps <= 0.0) throw std::invalid_argument("retake_start: fps must be positive");
    return static_cast<double>(preserved_frames) / fps;
}

VideoClip read_clip(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error(path + ": cannot open");
    check_magic(is, kClipMagic, path);
    VideoClip clip;
    clip.t = get_u32(is, path);
    clip.h = get_u32(is, path);
    clip.w = get_u32(is, path);
    clip.c = get_u32(is, path);
    const std::uint32_t reserved = get_u32(is, path);
    if (reserved != 0) {
        throw std::runtime_error(path + ": reserved header field must be 0, got " +
                                 std::to_string(reserved));
    }
    clip.fps = get_f64(is, path);
    clip.frames = RealArray({clip.t, clip.h, clip.w, clip.c});
    for (double& v : clip.frames.data) v = get_f64(is, path);
    expect_eof(is, path);
    clip.validate();
    return clip;
}

void write_clip(const VideoClip& clip, const std::string& path) {
    clip.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error(path + ": cannot open for writing");
    os.write(kClipMagic, 5);
    put_u32(os, static_cast<std::uint32_t>(clip.t));
    put_u32(os, static_cast<std::uint32_t>(clip.h));
    put_u32(os, static_cast<std::uint32_t>(clip.w));
    put_u32(os, static_cast<std::uint32_t>(clip.c));
    put_u32(os, 0);
    put_f64(os, clip.fps);
    for (double v : clip.frames.data) put_f64(os, v);
    if (!os) throw std::runtime_error(path + ": write failed");
}

RealArray read_latent(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error(path + ": cannot open");
    check_magic(is, kLatentMagic, path);
    const std::uint32_t rows = get_u32(is, path);
    const std::uint32_t cols = get_u32(is, path);
    if (rows == 0 || cols == 0) throw std::runtime_error(path + ": zero latent dimension");
    RealArray latent({rows, cols});
    for (double& v : latent.data) v = get_f64(is, path);
    expect_eof(is, path);
    if (!latent.all_finite()) throw std::runtime_error(path + ": non-finite latent values");
    return latent;
}

void write_latent(const RealArray& latent, const std::string& path) {
    if (latent.rank() != 2) {
        throw std::invalid_argument("write_latent: latent must be rank 2, got " +
                                    numcore::shape_to_string(latent.shape));
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error(path + ": cannot open for writing");
    os.write(kLatentMagic, 5);
    put_u32(os, static_cast<std::uint32_t>(latent.shape[0]));
    put_u32(os, static_cast<std::uint32_t>(latent.shape[1]));
    for (double v : latent.data) put_f64(os, v);
    if (!os) throw std::runtime_error(path + ": write failed");
}

const std::vector<std::string>& tuning_override_keys() {
    static const std::vector<std::string> keys = {
        "lambda_alpha", "lambda_v", "lambda_lpips", "lambda_temp", "eps",     "lr0",
        "max_iters",    "patience", "k_grad",       "schedule",    "n_frames", "seed"};
    return keys;
}

TaskManifest load_task_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error(path + ": cannot open manifest");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    TaskManifest manifest;
    std::set<std::string> seen_names;
    std::map<std::string, std::string> record;
    std::string line;
    const auto& override_keys = tuning_override_keys();

    auto flush_record = [&]() {
        if (record.empty()) return;
        for (const char* required : {"scenario", "clip", "k", "prompt_id"}) {
            if (!record.count(required)) {
                throw std::runtime_error(path + ": task record missing key '" +
                                         std::string(required) + "'");
            }
        }
        EditTask task;
        task.scenario = record.at("scenario");
        if (!seen_names.insert(task.scenario).second) {
            throw std::runtime_error(path + ": duplicate scenario name '" + task.scenario + "'");
        }
        const std::string clip_path = (base / record.at("clip")).string();
        if (!std::filesystem::exists(clip_path)) {
            throw std::runtime_error(path + ": clip file not found: " + clip_path);
        }
        task.source = read_clip(clip_path);
        const long k = parse_long("k", record.at("k"));
        if (k < 1 || static_cast<std::size_t>(k) >= task.source.t) {
            throw std::runtime_error(path + ": k=" + std::to_string(k) + " outside [1," +
                                     std::to_string(task.source.t - 1) + "] for scenario '" +
                                     task.scenario + "'");
        }
        task.preserved_frames = static_cast<std::size_t>(k);
        task.prompt_id = parse_long("prompt_id", record.at("prompt_id"));
        if (task.prompt_id < 0) {
            throw std::runtime_error(path + ": prompt_id must be non-negative");
        }
        if (record.count("audio_seed")) {
            task.audio_seed = parse_long("audio_seed", record.at("audio_seed"));
        }
        if (record.count("audio")) {
            const std::string latent_path = (base / record.at("audio")).string();
            if (!std::filesystem::exists(latent_path)) {
                throw std::runtime_error(path + ": audio latent file not found: " + latent_path);
            }
            task.audio_latent = read_latent(latent_path);
        }
        if (record.count("comment")) task.comment = record.at("comment");
        for (const auto& [key, value] : record) {
            if (key == "scenario" || key == "clip" || key == "k" || key == "prompt_id" ||
                key == "audio_seed" || key == "audio" || key == "comment") {
                continue;
            }
            if (std::find(override_keys.begin(), override_keys.end(), key) ==
                override_keys.end()) {
                throw std::runtime_error(path + ": unknown manifest key '" + key + "'");
            }
            task.overrides[key] = value;
        }
        manifest.tasks.push_back(std::move(task));
        record.clear();
    };

    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty()) {
            flush_record();
            continue;
        }
        if (trimmed[0] == '#') continue;
        const std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ": malformed line (no '='): " + line);
        }
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        if (record.count(key)) {
            throw std::runtime_error(path + ": duplicate key '" + key + "' in one record");
        }
        record[key] = value;
    }
    flush_record();
    return manifest;
}

}  // namespace condtune::media
