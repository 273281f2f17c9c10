#ifndef EPIFIT_SVG_HPP
#define EPIFIT_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace epifit {

/// One plotted curve or point cloud, in data coordinates.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool scatter = false;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string svg_tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace detail

/// Static plot: axes, ticks, labeled series. Layout and number formatting
/// are fixed so identical inputs render byte-identical documents.
inline std::string render_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series,
                              int width = 720, int height = 480) {
    const double left = 72, right = 24, top = 44, bottom = 56;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    }
    y_min = std::min(y_min, 0.0); // counts are nonnegative; anchor the baseline
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    y_max += 0.05 * (y_max - y_min);

    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    const int n_ticks = 5;
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
    for (int i = 0; i <= n_ticks; ++i) {
        const double fx = x_min + (x_max - x_min) * i / n_ticks;
        const double gx = px(fx);
        out << "<line x1=\"" << detail::svg_num(gx) << "\" y1=\"" << detail::svg_num(top)
            << "\" x2=\"" << detail::svg_num(gx) << "\" y2=\""
            << detail::svg_num(top + plot_h) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << detail::svg_num(gx) << "\" y=\""
            << detail::svg_num(top + plot_h + 16) << "\" text-anchor=\"middle\">"
            << detail::svg_tick_label(fx) << "</text>\n";

        const double fy = y_min + (y_max - y_min) * i / n_ticks;
        const double gy = py(fy);
        out << "<line x1=\"" << detail::svg_num(left) << "\" y1=\"" << detail::svg_num(gy)
            << "\" x2=\"" << detail::svg_num(left + plot_w) << "\" y2=\""
            << detail::svg_num(gy) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << detail::svg_num(left - 6) << "\" y=\""
            << detail::svg_num(gy + 4) << "\" text-anchor=\"end\">"
            << detail::svg_tick_label(fy) << "</text>\n";
    }
    out << "</g>\n";

    out << "<rect x=\"" << detail::svg_num(left) << "\" y=\"" << detail::svg_num(top)
        << "\" width=\"" << detail::svg_num(plot_w) << "\" height=\""
        << detail::svg_num(plot_h) << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    for (const PlotSeries& s : series) {
        if (s.scatter) {
            out << "<g fill=\"" << s.color << "\">\n";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out << "<circle cx=\"" << detail::svg_num(px(s.x[i])) << "\" cy=\""
                    << detail::svg_num(py(s.y[i])) << "\" r=\"3\"/>\n";
            out << "</g>\n";
        } else if (!s.x.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i) out << ' ';
                out << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.y[i]));
            }
            out << "\"/>\n";
        }
    }

    double legend_y = top + 14;
    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const PlotSeries& s : series) {
        const double lx = left + plot_w - 150;
        out << "<rect x=\"" << detail::svg_num(lx) << "\" y=\""
            << detail::svg_num(legend_y - 9) << "\" width=\"10\" height=\"10\" fill=\""
            << s.color << "\"/>\n";
        out << "<text x=\"" << detail::svg_num(lx + 16) << "\" y=\""
            << detail::svg_num(legend_y) << "\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    out << "</g>\n";

    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 18 " << height / 2 << ")\">" << y_label
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline void write_svg(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series, int width = 720,
                      int height = 480) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << render_svg(title, x_label, y_label, series, width, height);
}

} // namespace epifit

#endif
