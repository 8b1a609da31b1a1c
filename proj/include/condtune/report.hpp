// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace condtune::report {

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string fnv1a64_hex(const std::string& bytes);
std::string file_checksum(const std::string& path);

/// Everything needed to re-execute a run: the command, the resolved config,
/// the seeds, and the artifacts it wrote. Timings go to a separate file so
/// the record and the CSVs stay byte-identical across reruns.
struct RunRecord {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> checksums;
    std::string timings_path;
};

/// Fills checksums for every listed output, then serializes deterministically.
std::string run_record_json(RunRecord record);
void write_run_record(const std::string& path, RunRecord record);

struct Series {
    std::string name;
    std::vector<double> values;
};

/// Minimal deterministic SVG line plot (one polyline per series, legend,
/// axis box); output is well-formed XML.
std::string svg_line_plot(const std::string& title, const std::vector<Series>& series);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

struct TimingRow {
    std::string label;
    double seconds = 0.0;
};

std::string timings_csv(const std::vector<TimingRow>& rows);

}  // namespace condtune::report
