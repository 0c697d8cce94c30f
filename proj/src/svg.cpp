#include "mapexp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mapexp {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else
            o += c;
    }
    return o;
}

struct Frame {
    double x0, x1, y0, y1;
    double L = 70, R = 20, T = 40, B = 50;
    int w, h;
    double px(double x) const { return L + (x - x0) / (x1 - x0) * (w - L - R); }
    double py(double y) const { return h - B - (y - y0) / (y1 - y0) * (h - T - B); }
};

void pad(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
        return;
    }
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
}

std::string header(const PlotSpec& s, const Frame& f) {
    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(s.width) + "\" height=\"" +
                    std::to_string(s.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + fmt("%.1f", s.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(s.title) + "</text>\n";
    o += "<rect x=\"" + fmt("%.1f", f.L) + "\" y=\"" + fmt("%.1f", f.T) + "\" width=\"" +
         fmt("%.1f", f.w - f.L - f.R) + "\" height=\"" + fmt("%.1f", f.h - f.T - f.B) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / 4.0, y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        o += "<text x=\"" + fmt("%.1f", f.px(x)) + "\" y=\"" + fmt("%.1f", f.h - f.B + 16) +
             "\" text-anchor=\"middle\">" + fmt("%.4g", x) + "</text>\n";
        o += "<text x=\"" + fmt("%.1f", f.L - 6) + "\" y=\"" + fmt("%.1f", f.py(y) + 4) +
             "\" text-anchor=\"end\">" + fmt("%.4g", y) + "</text>\n";
    }
    o += "<text x=\"" + fmt("%.1f", (f.L + f.w - f.R) / 2) + "\" y=\"" + fmt("%.1f", f.h - 12.0) +
         "\" text-anchor=\"middle\">" + escape(s.xlabel) + "</text>\n";
    o += "<text x=\"16\" y=\"" + fmt("%.1f", (f.T + f.h - f.B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt("%.1f", (f.T + f.h - f.B) / 2) + ")\">" + escape(s.ylabel) + "</text>\n";
    return o;
}

}  // namespace

std::string svg_lines(const PlotSpec& s, const std::vector<Series>& series) {
    double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
    for (const auto& ser : series)
        for (auto [x, y] : ser) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    pad(y0, y1);
    if (!(x1 > x0)) x1 = x0 + 1;
    const Frame f{x0, x1, y0, y1, 70, 20, 40, 50, s.width, s.height};
    std::string o = header(s, f);
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                o += std::string("<polyline fill=\"none\" stroke-width=\"1\" stroke=\"") + kPalette[k % 10] +
                     "\" points=\"" + pts + "\"/>\n";
            pts.clear();
        };
        for (auto [x, y] : series[k]) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                flush();
                continue;
            }
            pts += fmt("%.2f", f.px(x)) + "," + fmt("%.2f", f.py(y)) + " ";
        }
        flush();
    }
    return o + "</svg>\n";
}

std::string svg_histogram(const PlotSpec& s, const std::vector<double>& edges, const std::vector<std::size_t>& counts) {
    double top = 0;
    for (auto c : counts) top = std::max(top, static_cast<double>(c));
    double x0 = edges.empty() ? 0.0 : edges.front(), x1 = edges.empty() ? 1.0 : edges.back();
    if (!(x1 > x0)) x1 = x0 + 1;
    const Frame f{x0, x1, 0.0, top > 0 ? top * 1.05 : 1.0, 70, 20, 40, 50, s.width, s.height};
    std::string o = header(s, f);
    for (std::size_t i = 0; i < counts.size() && i + 1 < edges.size(); ++i) {
        const double a = f.px(edges[i]), b = f.px(edges[i + 1]), y = f.py(static_cast<double>(counts[i]));
        o += "<rect x=\"" + fmt("%.2f", a) + "\" y=\"" + fmt("%.2f", y) + "\" width=\"" + fmt("%.2f", std::max(b - a, 0.0)) +
             "\" height=\"" + fmt("%.2f", f.py(0.0) - y) + "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
    }
    return o + "</svg>\n";
}

}  // namespace mapexp
