// Copyright (C) 2026 condtune authors
// SPDX-License-Identifier: Apache-2.0

#include "condtune/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace condtune::report {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

std::string file_checksum(const std::string& path) {
    return fnv1a64_hex(read_text_file(path));
}

std::string run_record_json(RunRecord record) {
    for (const std::string& out : record.outputs) {
        if (record.checksums.find(out) == record.checksums.end()) {
            record.checksums[out] = file_checksum(out);
        }
    }
    nlohmann::json j;
    j["command"] = record.command;
    j["config"] = record.config;
    j["seeds"] = record.seeds;
    j["outputs"] = record.outputs;
    j["checksums"] = record.checksums;
    j["timings_path"] = record.timings_path;
    return j.dump(2) + "\n";
}

void write_run_record(const std::string& path, RunRecord record) {
    write_text_file(path, run_record_json(std::move(record)));
}

std::string svg_line_plot(const std::string& title, const std::vector<Series>& series) {
    constexpr double width = 640.0, height = 400.0;
    constexpr double left = 60.0, right = 620.0, top = 40.0, bottom = 360.0;

    double lo = 0.0, hi = 1.0;
    bool seen = false;
    std::size_t max_n = 0;
    for (const Series& s : series) {
        max_n = std::max(max_n, s.values.size());
        for (double v : s.values) {
            if (!std::isfinite(v)) continue;
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (!seen) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi == lo) hi = lo + 1.0;

    static const char* kColors[] = {"#1b6ca8", "#c0392b", "#1e8449", "#7d3c98", "#b7950b",
                                    "#34495e"};
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n"
        << "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"14\">"
        << xml_escape(title) << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << (right - left)
        << "\" height=\"" << (bottom - top) << "\" fill=\"none\" stroke=\"#444444\"/>\n"
        << "<text x=\"" << left << "\" y=\"" << (top - 4) << "\" font-family=\"monospace\" "
        << "font-size=\"10\">" << fmt_double(hi) << "</text>\n"
        << "<text x=\"" << left << "\" y=\"" << (bottom + 14) << "\" font-family=\"monospace\" "
        << "font-size=\"10\">" << fmt_double(lo) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kColors[si % 6];
        if (!s.values.empty()) {
            std::ostringstream pts;
            for (std::size_t i = 0; i < s.values.size(); ++i) {
                const double fx = s.values.size() == 1
                                      ? 0.5
                                      : static_cast<double>(i) /
                                            static_cast<double>(s.values.size() - 1);
                const double fy = (s.values[i] - lo) / (hi - lo);
                if (i > 0) pts << ' ';
                pts << fmt_double(left + fx * (right - left)) << ','
                    << fmt_double(bottom - fy * (bottom - top));
            }
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
                << "points=\"" << pts.str() << "\"/>\n";
        }
        const double ly = top + 14.0 + 14.0 * static_cast<double>(si);
        out << "<rect x=\"" << (right - 150) << "\" y=\"" << (ly - 8)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
            << "<text x=\"" << (right - 135) << "\" y=\"" << ly
            << "\" font-family=\"monospace\" font-size=\"11\">" << xml_escape(s.name)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string timings_csv(const std::vector<TimingRow>& rows) {
    std::string out = "label,seconds\n";
    for (const TimingRow& r : rows) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.6f", r.seconds);
        out += r.label;
        out += ',';
        out += buf;
        out += '\n';
    }
    return out;
}

}  // namespace condtune::report
