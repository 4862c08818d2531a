#include "uotflow/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uotflow/ioutil.hpp"

namespace uotflow::svgplot {

namespace {

constexpr double kW = 640, kH = 480, kMargin = 48;

std::string num(double v) { return ioutil::fmt(std::round(v * 100.0) / 100.0); }

void header(std::ostream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
    os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\""
       << " font-size=\"14\">" << title << "</text>\n";
}

void axes(std::ostream& os) {
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
       << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
       << kH - kMargin << "\" stroke=\"black\"/>\n";
}

}  // namespace

void scatter_svg(std::ostream& os, const std::string& title, const std::vector<Series>& series) {
    header(os, title);
    axes(os);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) {
        xmin -= 1;
        xmax += 1;
    }
    if (!(ymin < ymax)) {
        ymin -= 1;
        ymax += 1;
    }
    if (!std::isfinite(xmin)) {
        xmin = ymin = -1;
        xmax = ymax = 1;
    }
    double px = 0.05 * (xmax - xmin), py = 0.05 * (ymax - ymin);
    xmin -= px;
    xmax += px;
    ymin -= py;
    ymax += py;
    auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kW - 2 * kMargin); };
    auto sy = [&](double y) {
        return kH - kMargin - (y - ymin) / (ymax - ymin) * (kH - 2 * kMargin);
    };
    os << "<text x=\"" << kMargin << "\" y=\"" << kH - kMargin + 16
       << "\" font-family=\"monospace\" font-size=\"10\">" << num(xmin) << "</text>\n";
    os << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - kMargin + 16
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">" << num(xmax)
       << "</text>\n";

    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const Series& s : series)
        for (double v : s.value) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    double legend_y = kMargin;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double opacity = 0.8;
            if (i < s.value.size() && vmax > vmin)
                opacity = 0.15 + 0.85 * (s.value[i] - vmin) / (vmax - vmin);
            os << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i]))
               << "\" r=\"2\" fill=\"" << s.color << "\" fill-opacity=\""
               << num(std::round(opacity * 100.0) / 100.0) << "\"/>\n";
        }
        os << "<text x=\"" << kW - kMargin - 4 << "\" y=\"" << legend_y
           << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" fill=\""
           << s.color << "\">" << s.label << "</text>\n";
        legend_y += 14;
    }
    os << "</svg>\n";
}

void bar_svg(std::ostream& os, const std::string& title,
             const std::vector<std::string>& categories, const std::vector<BarGroup>& groups) {
    header(os, title);
    axes(os);
    double vmin = 0.0, vmax = 0.0;
    for (const BarGroup& g : groups)
        for (double v : g.values) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    if (vmax == vmin) vmax = vmin + 1.0;
    const std::size_t nc = categories.size();
    const std::size_t ng = std::max<std::size_t>(groups.size(), 1);
    const double slot = (kW - 2 * kMargin) / static_cast<double>(std::max<std::size_t>(nc, 1));
    const double bw = slot * 0.8 / static_cast<double>(ng);
    auto sy = [&](double v) {
        return kH - kMargin - (v - vmin) / (vmax - vmin) * (kH - 2 * kMargin);
    };
    double base = sy(0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t c = 0; c < nc && c < groups[g].values.size(); ++c) {
            double v = groups[g].values[c];
            double x = kMargin + slot * static_cast<double>(c) + slot * 0.1 +
                       bw * static_cast<double>(g);
            double y0 = sy(std::max(v, 0.0)), y1 = std::max(base, sy(std::min(v, 0.0)));
            os << "<rect x=\"" << num(x) << "\" y=\"" << num(y0) << "\" width=\"" << num(bw)
               << "\" height=\"" << num(std::max(y1 - y0, 0.5)) << "\" fill=\"" << groups[g].color
               << "\"/>\n";
        }
        os << "<text x=\"" << kW - kMargin - 4 << "\" y=\"" << kMargin + 14 * g
           << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" fill=\""
           << groups[g].color << "\">" << groups[g].label << "</text>\n";
    }
    for (std::size_t c = 0; c < nc; ++c) {
        double x = kMargin + slot * (static_cast<double>(c) + 0.5);
        os << "<text x=\"" << num(x) << "\" y=\"" << kH - kMargin + 16
           << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">"
           << categories[c] << "</text>\n";
    }
    os << "<text x=\"" << kMargin - 4 << "\" y=\"" << num(sy(vmax))
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">" << num(vmax)
       << "</text>\n";
    os << "</svg>\n";
}

}  // namespace uotflow::svgplot
