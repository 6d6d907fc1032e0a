#include "gbflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gbflow {

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_y) {
    const double W = 720, H = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 55;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : 0.0) : s.y[i];
            if (log_y && s.y[i] <= 0) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, yv);
            ymax = std::max(ymax, yv);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-300) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-300) ymax = ymin + 1.0;

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto py = [&](double yv) {
        return H - mb - (yv - ymin) / (ymax - ymin) * (H - mt - mb);
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_svg_chart: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << " " << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";

    // Axes and ticks.
    out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    char buf[64];
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5;
        const double yv = ymin + (ymax - ymin) * k / 5;
        std::snprintf(buf, sizeof(buf), "%.3g", xv);
        out << "<text x='" << px(xv) << "' y='" << H - mb + 18
            << "' text-anchor='middle' font-size='11'>" << buf << "</text>\n";
        std::snprintf(buf, sizeof(buf), "%.3g", log_y ? std::pow(10.0, yv) : yv);
        out << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
            << "' text-anchor='end' font-size='11'>" << buf << "</text>\n";
        out << "<line x1='" << ml << "' y1='" << py(yv) << "' x2='" << W - mr << "' y2='"
            << py(yv) << "' stroke='#dddddd'/>\n";
    }
    out << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n";
    out << "<text x='16' y='" << (mt + H - mb) / 2
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
        << (mt + H - mb) / 2 << ")'>" << y_label << (log_y ? " (log scale)" : "")
        << "</text>\n";

    int legend_row = 0;
    for (const auto& s : series) {
        out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : ymin) : s.y[i];
            if (log_y && s.y[i] <= 0) continue;
            out << px(s.x[i]) << "," << py(yv) << " ";
        }
        out << "'/>\n";
        out << "<rect x='" << W - mr - 170 << "' y='" << mt + 14 * legend_row
            << "' width='12' height='3' fill='" << s.color << "'/>\n";
        out << "<text x='" << W - mr - 152 << "' y='" << mt + 14 * legend_row + 5
            << "' font-size='11'>" << s.name << "</text>\n";
        ++legend_row;
    }
    out << "</svg>\n";
}

}  // namespace gbflow
