#include "repsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "repsim/error.hpp"
#include "repsim/table.hpp"

namespace repsim {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) { return format_double(v); }

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series, bool log_x) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw InvalidInputError("plot series length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
            xmin = std::min(xmin, xv);
            xmax = std::max(xmax, xv);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmin <= xmax)) throw InvalidInputError("plot has no data points");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    // A little vertical headroom.
    const double ypad = (ymax - ymin) * 0.05;
    ymin -= ypad;
    ymax += ypad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double v) {
        const double t = log_x ? std::log10(v) : v;
        return kMarginLeft + (t - xmin) / (xmax - xmin) * plot_w;
    };
    auto sy = [&](double v) {
        return kMarginTop + (ymax - v) / (ymax - ymin) * plot_h;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
           "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
           fmt(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(title) + "</text>\n";

    // Axes box and ticks.
    svg += "<rect x=\"" + fmt(kMarginLeft) + "\" y=\"" + fmt(kMarginTop) + "\" width=\"" +
           fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double fx = xmin + (xmax - xmin) * t / kTicks;
        const double fy = ymin + (ymax - ymin) * t / kTicks;
        const double px = kMarginLeft + plot_w * t / kTicks;
        const double py = kMarginTop + plot_h - plot_h * t / kTicks;
        const double x_value = log_x ? std::pow(10.0, fx) : fx;
        svg += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(kMarginTop + plot_h) + "\" x2=\"" +
               fmt(px) + "\" y2=\"" + fmt(kMarginTop + plot_h + 5) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(kMarginTop + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt(std::round(x_value * 1000.0) / 1000.0) + "</text>\n";
        svg += "<line x1=\"" + fmt(kMarginLeft - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" +
               fmt(kMarginLeft) + "\" y2=\"" + fmt(py) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(kMarginLeft - 9) + "\" y=\"" + fmt(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt(std::round(fy * 1000.0) / 1000.0) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(kMarginLeft + plot_w / 2) + "\" y=\"" +
           fmt(kHeight - 14) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" + escape_xml(x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(kMarginTop + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " + fmt(kMarginTop + plot_h / 2) + ")\">" +
           escape_xml(y_label) + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) points += ' ';
            points += fmt(sx(s.x[i])) + "," + fmt(sy(s.y[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg += "<circle cx=\"" + fmt(sx(s.x[i])) + "\" cy=\"" + fmt(sy(s.y[i])) +
                   "\" r=\"2.4\" fill=\"" + std::string(color) + "\"/>\n";
        }
        const double ly = kMarginTop + 14.0 + 18.0 * static_cast<double>(si);
        svg += "<line x1=\"" + fmt(kWidth - kMarginRight + 12) + "\" y1=\"" + fmt(ly - 4) +
               "\" x2=\"" + fmt(kWidth - kMarginRight + 34) + "\" y2=\"" + fmt(ly - 4) +
               "\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.6\"/>\n";
        svg += "<text x=\"" + fmt(kWidth - kMarginRight + 40) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(s.label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace repsim
