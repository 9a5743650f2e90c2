#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"

namespace ideatopics {

enum class ScatterStage { unclustered, clustered, no_outliers };

inline ScatterStage parse_scatter_stage(const std::string& s) {
    if (s == "unclustered") return ScatterStage::unclustered;
    if (s == "clustered") return ScatterStage::clustered;
    if (s == "no-outliers" || s == "no_outliers") return ScatterStage::no_outliers;
    throw ArgumentError("unknown plot stage: " + s);
}

inline constexpr int kSvgWidth = 800;
inline constexpr int kSvgHeight = 600;
inline constexpr const char* kOutlierColor = "#9e9e9e";
inline constexpr const char* kPointColor = "#1f77b4";
inline constexpr std::array<const char*, 12> kClusterPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#17becf", "#bcbd22", "#393b79", "#637939", "#843c39",
};

namespace detail {

struct AxisFit {
    double lo;
    double hi;
    double map(double v, double pixels) const { return (v - lo) / (hi - lo) * pixels; }
};

inline AxisFit fit_axis(const Matrix& coords, std::size_t col) {
    double lo = coords(0, col);
    double hi = lo;
    for (std::size_t i = 1; i < coords.rows(); ++i) {
        lo = std::min(lo, coords(i, col));
        hi = std::max(hi, coords(i, col));
    }
    const double span = hi - lo;
    if (span == 0.0) return {lo - 1.0, hi + 1.0};
    return {lo - 0.05 * span, hi + 0.05 * span};
}

}  // namespace detail

// Scatter of 2-D coordinates on a fixed 800x600 canvas. Axes are fitted to
// all points with a 5% margin so the three stages line up. Output depends
// only on the inputs.
inline std::string render_scatter_svg(const Matrix& coords, std::span<const int> labels, ScatterStage stage) {
    if (coords.rows() == 0) throw ArgumentError("scatter plot needs at least one point");
    if (coords.cols() != 2) throw ArgumentError("scatter plot needs 2-D coordinates");
    if (stage != ScatterStage::unclustered && labels.size() != coords.rows())
        throw ArgumentError("one label per point required");

    const auto fx = detail::fit_axis(coords, 0);
    const auto fy = detail::fit_axis(coords, 1);
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  kSvgWidth, kSvgHeight, kSvgWidth, kSvgHeight);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const char* color = kPointColor;
        if (stage != ScatterStage::unclustered) {
            const int label = labels[i];
            if (label < 0 && stage == ScatterStage::no_outliers) continue;
            color = label < 0 ? kOutlierColor : kClusterPalette[static_cast<std::size_t>(label) % kClusterPalette.size()];
        }
        const double px = fx.map(coords(i, 0), kSvgWidth);
        const double py = kSvgHeight - fy.map(coords(i, 1), kSvgHeight);
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", px, py, color);
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

inline void emit_scatter_svg(const Matrix& coords, std::span<const int> labels, ScatterStage stage,
                             const std::filesystem::path& path) {
    const auto svg = render_scatter_svg(coords, labels, stage);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << svg;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace ideatopics
