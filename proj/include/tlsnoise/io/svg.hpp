#pragma once

// Minimal static SVG line/scatter plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace tlsnoise::io {

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
    bool points = false; ///< markers instead of a polyline
    std::string color = "#1f77b4";
};

struct Plot {
    std::string title;
    std::string x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<PlotSeries> series;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double map(double v) const { return log ? std::log10(v) : v; }
    double unit(double v) const { return (map(v) - lo) / (hi - lo); }
};

inline Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* d : data)
        for (double v : *d) {
            if (!std::isfinite(v) || (log && v <= 0.0)) continue;
            const double m = log ? std::log10(v) : v;
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
        const double pad = log ? 0.5 : std::max(1e-12, std::abs(lo) * 0.1 + 1e-12);
        lo -= pad;
        hi += pad;
    }
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, log};
}

inline std::vector<double> ticks(const Axis& a) {
    std::vector<double> t;
    if (a.log) {
        const int step = std::max(1, static_cast<int>(std::ceil((a.hi - a.lo) / 8.0)));
        for (int e = static_cast<int>(a.lo); e <= static_cast<int>(a.hi); e += step) t.push_back(std::pow(10.0, e));
        return t;
    }
    const double raw = (a.hi - a.lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-9 * step; v += step)
        t.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
    return t;
}

} // namespace detail

inline std::string render_svg(const Plot& plot) {
    constexpr double W = 640, H = 420, L = 80, R = 20, T = 40, B = 60;
    std::vector<const std::vector<double>*> xs, ys;
    for (const auto& s : plot.series) {
        xs.push_back(&s.x);
        ys.push_back(&s.y);
    }
    const auto ax = detail::make_axis(xs, plot.log_x);
    const auto ay = detail::make_axis(ys, plot.log_y);
    auto px = [&](double v) { return L + ax.unit(v) * (W - L - R); };
    auto py = [&](double v) { return H - B - ay.unit(v) * (H - T - B); };
    using detail::fmt;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\" "
                    "font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + detail::escape_xml(plot.title) + "</text>\n";
    s += "<rect x=\"80\" y=\"40\" width=\"540\" height=\"320\" fill=\"none\" stroke=\"black\"/>\n";
    const char* tick_fmt = "%.3g";
    for (double t : detail::ticks(ax)) {
        const double x = px(t);
        s += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"360\" x2=\"" + fmt("%.2f", x) + "\" y2=\"365\" stroke=\"black\"/>";
        s += "<text x=\"" + fmt("%.2f", x) + "\" y=\"378\" text-anchor=\"middle\">" + fmt(tick_fmt, t) + "</text>\n";
    }
    for (double t : detail::ticks(ay)) {
        const double y = py(t);
        s += "<line x1=\"75\" y1=\"" + fmt("%.2f", y) + "\" x2=\"80\" y2=\"" + fmt("%.2f", y) + "\" stroke=\"black\"/>";
        s += "<text x=\"72\" y=\"" + fmt("%.2f", y + 4) + "\" text-anchor=\"end\">" + fmt(tick_fmt, t) + "</text>\n";
    }
    s += "<text x=\"350\" y=\"405\" text-anchor=\"middle\">" + detail::escape_xml(plot.x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"200\" text-anchor=\"middle\" transform=\"rotate(-90 16 200)\">" +
         detail::escape_xml(plot.y_label) + "</text>\n";

    double legend_y = 56;
    for (const auto& ser : plot.series) {
        const std::size_t n = std::min(ser.x.size(), ser.y.size());
        if (ser.points) {
            for (std::size_t i = 0; i < n; ++i) {
                if ((plot.log_x && ser.x[i] <= 0) || (plot.log_y && ser.y[i] <= 0)) continue;
                s += "<circle cx=\"" + fmt("%.2f", px(ser.x[i])) + "\" cy=\"" + fmt("%.2f", py(ser.y[i])) +
                     "\" r=\"2\" fill=\"" + ser.color + "\"/>\n";
            }
        } else {
            s += "<polyline fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1.5\" points=\"";
            bool first = true;
            for (std::size_t i = 0; i < n; ++i) {
                if ((plot.log_x && ser.x[i] <= 0) || (plot.log_y && ser.y[i] <= 0)) continue;
                if (!first) s += ' ';
                s += fmt("%.2f", px(ser.x[i])) + "," + fmt("%.2f", py(ser.y[i]));
                first = false;
            }
            s += "\"/>\n";
        }
        if (!ser.name.empty()) {
            s += "<rect x=\"500\" y=\"" + fmt("%.2f", legend_y - 8) + "\" width=\"10\" height=\"10\" fill=\"" + ser.color +
                 "\"/><text x=\"515\" y=\"" + fmt("%.2f", legend_y + 1) + "\">" + detail::escape_xml(ser.name) +
                 "</text>\n";
            legend_y += 16;
        }
    }
    s += "</svg>\n";
    return s;
}

} // namespace tlsnoise::io
