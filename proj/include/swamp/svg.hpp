#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace swamp {

// Minimal hand-emitted SVG: line plots (log-y) and binary/gray heatmap
// panels. No timestamps, so re-runs are byte-identical.

inline double yraw_guard(double y) { return std::max(-300.0, std::min(300.0, y)); }

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x, y;
    bool markers = false;
};

inline std::string svg_line_plot(const std::vector<SvgSeries>& series, const std::string& title,
                                 const std::string& xlabel, const std::string& ylabel,
                                 bool log_y = true) {
    const double W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double yv = s.y[i];
            if (log_y && yv <= 0) continue;
            if (log_y) yv = std::log10(yv);
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, yv);
            ymax = std::max(ymax, yv);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) {
        const double yv = log_y ? std::log10(y) : y;
        return H - mb - (yv - ymin) / (ymax - ymin) * (H - mt - mb);
    };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << xv << "</text>\n";
        const double yraw = ymin + (ymax - ymin) * i / 5.0;
        const double yv = log_y ? std::pow(10.0, yraw_guard(yraw)) : yraw;
        out << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb - (H - mt - mb) * i / 5.0 + 4
            << "\" text-anchor=\"end\" font-size=\"11\">";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", yv);
        out << buf << "</text>\n";
    }
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    out << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 "
        << H / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    double ly = mt + 8;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && s.y[i] <= 0) continue;
            out << px(s.x[i]) << "," << py(s.y[i]) << " ";
        }
        out << "\"/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (log_y && s.y[i] <= 0) continue;
                out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                    << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
            }
        out << "<rect x=\"" << W - mr - 150 << "\" y=\"" << ly - 8
            << "\" width=\"14\" height=\"4\" fill=\"" << s.color << "\"/>\n";
        out << "<text x=\"" << W - mr - 132 << "\" y=\"" << ly - 2 << "\" font-size=\"12\">"
            << s.label << "</text>\n";
        ly += 18;
    }
    out << "</svg>\n";
    return out.str();
}

// Panel of gray heatmaps (values clipped to [0,1], 0 = black, 1 = white).
inline std::string svg_heatmap_panel(const std::vector<SignalField>& fields,
                                     const std::vector<std::string>& titles) {
    const int cols = static_cast<int>(fields.size());
    const double cell = 220, pad = 14, th = 26;
    const double W = cols * (cell + pad) + pad, H = cell + th + 2 * pad;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int f = 0; f < cols; ++f) {
        const long N = fields[f].shape.side;
        const double x0 = pad + f * (cell + pad), y0 = pad + th;
        out << "<text x=\"" << x0 + cell / 2 << "\" y=\"" << pad + 14
            << "\" text-anchor=\"middle\" font-size=\"13\">" << titles[f] << "</text>\n";
        const double px = cell / static_cast<double>(N);
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < N; ++j) {
                double v = fields[f].values[i * N + j];
                v = std::max(0.0, std::min(1.0, v));
                const int g = static_cast<int>(std::lround(v * 255));
                out << "<rect x=\"" << x0 + j * px << "\" y=\"" << y0 + i * px << "\" width=\""
                    << px << "\" height=\"" << px << "\" fill=\"rgb(" << g << "," << g << "," << g
                    << ")\"/>\n";
            }
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace swamp
