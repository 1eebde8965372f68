#include "bistab/plot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <sstream>

namespace bistab {

namespace {

constexpr double kWidth = 720, kHeight = 480, kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
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

bool map_x(PlotAxes axes, Real t, double& x) {
    if (!(t > 0.0)) return false;
    if (axes == PlotAxes::log_log) {
        x = std::log10(t);
        return true;
    }
    const Real l = std::log1p(t);
    if (!(l > 0.0)) return false;
    x = std::log10(l);
    return true;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    struct Mapped {
        std::vector<std::pair<double, double>> pts;
    };
    std::vector<Mapped> mapped(spec.series.size());
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (std::size_t s = 0; s < spec.series.size(); ++s) {
        const auto& ser = spec.series[s];
        for (std::size_t i = 0; i < std::min(ser.t.size(), ser.y.size()); ++i) {
            double x = 0.0;
            if (!map_x(spec.axes, ser.t[i], x) || !(ser.y[i] > 0.0) || !std::isfinite(ser.y[i])) continue;
            const double y = std::log10(ser.y[i]);
            mapped[s].pts.emplace_back(x, y);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin < xmax)) xmin = 0.0, xmax = 1.0;
    if (!(ymin < ymax)) ymin = -1.0, ymax = 0.0;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (spec.timestamp) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "<!-- generated " << buf << " -->\n";
    }
    os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(kLeft) << "\" y=\"24\" font-size=\"14\">" << escape(spec.title) << "</text>\n";
    os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    // integer decades as ticks
    for (double d = std::ceil(xmin); d <= xmax; d += std::max(1.0, std::floor((xmax - xmin) / 8.0))) {
        os << "<line x1=\"" << num(px(d)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(d))
           << "\" y2=\"" << num(kTop + ph + 5) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(px(d)) << "\" y=\"" << num(kTop + ph + 18)
           << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
    }
    for (double d = std::ceil(ymin); d <= ymax; d += std::max(1.0, std::floor((ymax - ymin) / 8.0))) {
        os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(d)) << "\" x2=\"" << num(kLeft)
           << "\" y2=\"" << num(py(d)) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(d) + 4)
           << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
    }
    const char* xlabel = spec.axes == PlotAxes::log_log ? "t" : "ln(1+t)";
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 16) << "\" text-anchor=\"middle\">"
       << xlabel << " (log scale)</text>\n";
    os << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" transform=\"rotate(-90 16 " << num(kTop + ph / 2)
       << ")\" text-anchor=\"middle\">energy (log scale)</text>\n";

    for (std::size_t s = 0; s < mapped.size(); ++s) {
        const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
        if (mapped[s].pts.size() >= 2) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
            if (spec.series[s].dashed) os << " stroke-dasharray=\"6 4\"";
            os << " points=\"";
            for (std::size_t i = 0; i < mapped[s].pts.size(); ++i)
                os << (i ? " " : "") << num(px(mapped[s].pts[i].first)) << "," << num(py(mapped[s].pts[i].second));
            os << "\"/>\n";
        }
        const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << num(kLeft + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 34)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\""
           << (spec.series[s].dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>"
           << "<text x=\"" << num(kLeft + pw + 40) << "\" y=\"" << num(ly + 4) << "\">"
           << escape(spec.series[s].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace bistab
