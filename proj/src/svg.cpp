#include "aart/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aart/errors.hpp"
#include "aart/textio.hpp"

namespace aart {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMarginLeft = 64.0, kMarginRight = 16.0;
constexpr double kMarginTop = 36.0, kMarginBottom = 44.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string& s) {
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

std::string num(double v) {
    // Two decimals are plenty for pixel coordinates.
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::vector<PlotPanel>& panels) {
    if (panels.empty()) throw ConfigError("svg plot with no panels");
    std::ostringstream out;
    const double total_height = kHeight * double(panels.size());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << total_height << "\" viewBox=\"0 0 " << kWidth << " " << total_height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const PlotPanel& panel = panels[pi];
        const double top = kHeight * double(pi);
        double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
        bool first = true;
        for (const auto& s : panel.series) {
            if (s.x.size() != s.y.size())
                throw ConfigError("svg series '" + s.label + "' has mismatched x/y lengths");
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                double xv = s.x[i];
                if (panel.log_x) {
                    if (!(xv > 0.0)) throw ConfigError("log-x plot needs positive x values");
                    xv = std::log10(xv);
                }
                if (first) {
                    x_min = x_max = xv;
                    y_min = y_max = s.y[i];
                    first = false;
                } else {
                    x_min = std::min(x_min, xv);
                    x_max = std::max(x_max, xv);
                    y_min = std::min(y_min, s.y[i]);
                    y_max = std::max(y_max, s.y[i]);
                }
            }
        }
        if (first) throw ConfigError("svg panel '" + panel.title + "' has no points");
        if (x_max - x_min < 1e-12) {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if (y_max - y_min < 1e-12) {
            y_min -= 0.5;
            y_max += 0.5;
        }

        const double plot_w = kWidth - kMarginLeft - kMarginRight;
        const double plot_h = kHeight - kMarginTop - kMarginBottom;
        auto px = [&](double xv) {
            if (panel.log_x) xv = std::log10(xv);
            return kMarginLeft + (xv - x_min) / (x_max - x_min) * plot_w;
        };
        auto py = [&](double yv) {
            return top + kMarginTop + (y_max - yv) / (y_max - y_min) * plot_h;
        };

        out << "<g>\n";
        out << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(top + kMarginTop)
            << "\" width=\"" << num(plot_w) << "\" height=\"" << num(plot_h)
            << "\" fill=\"none\" stroke=\"#444444\"/>\n";
        out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(top + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
            << escape_xml(panel.title) << "</text>\n";
        out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(top + kHeight - 10)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << escape_xml(panel.x_label) << "</text>\n";
        out << "<text x=\"14\" y=\"" << num(top + kHeight / 2)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
            << "transform=\"rotate(-90 14 " << num(top + kHeight / 2) << ")\">"
            << escape_xml(panel.y_label) << "</text>\n";

        // Axis extremes as tick labels.
        out << "<text x=\"" << num(kMarginLeft) << "\" y=\"" << num(top + kHeight - 26)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(panel.log_x ? std::pow(10.0, x_min) : x_min) << "</text>\n";
        out << "<text x=\"" << num(kMarginLeft + plot_w) << "\" y=\"" << num(top + kHeight - 26)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(panel.log_x ? std::pow(10.0, x_max) : x_max) << "</text>\n";
        out << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(top + kMarginTop + plot_h)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(y_min) << "</text>\n";
        out << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(top + kMarginTop + 8)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(y_max) << "</text>\n";

        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const auto& s = panel.series[si];
            const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i) out << ' ';
                out << num(px(s.x[i])) << ',' << num(py(s.y[i]));
            }
            out << "\"/>\n";
            out << "<text x=\"" << num(kMarginLeft + plot_w - 6) << "\" y=\""
                << num(top + kMarginTop + 14 + 14 * double(si))
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
                << color << "\">" << escape_xml(s.label) << "</text>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
    write_text_file(path, out.str());
}

}  // namespace aart
