#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "hann/experiments.hpp"

namespace hann::svg {

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace detail

/// Log-log excess-risk curve with per-point error bars and a reference line
/// of the target slope through the first point.
inline std::string rate_plot(const experiments::RateReport& rep) {
    const double width = 640, height = 480, margin = 60;
    double lx_min = 1e300, lx_max = -1e300, ly_min = 1e300, ly_max = -1e300;
    for (const auto& p : rep.points) {
        if (p.mean_excess <= 0) continue;
        lx_min = std::min(lx_min, std::log10(static_cast<double>(p.n)));
        lx_max = std::max(lx_max, std::log10(static_cast<double>(p.n)));
        ly_min = std::min(ly_min, std::log10(p.mean_excess));
        ly_max = std::max(ly_max, std::log10(p.mean_excess));
    }
    if (ly_max - ly_min < 1e-9) {
        ly_min -= 0.5;
        ly_max += 0.5;
    }
    auto sx = [&](double lx) {
        return margin + (lx - lx_min) / (lx_max - lx_min) * (width - 2 * margin);
    };
    auto sy = [&](double ly) {
        return height - margin - (ly - ly_min) / (ly_max - ly_min) * (height - 2 * margin);
    };

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << height - margin << "' stroke='black'/>\n";

    for (const auto& p : rep.points) {
        double lx = std::log10(static_cast<double>(p.n));
        out << "<text x='" << detail::fmt(sx(lx)) << "' y='" << height - margin + 18
            << "' font-size='11' text-anchor='middle'>" << p.n << "</text>\n";
    }
    out << "<text x='" << width / 2 << "' y='" << height - 12
        << "' font-size='13' text-anchor='middle'>training samples n (log)</text>\n";
    out << "<text x='16' y='" << height / 2
        << "' font-size='13' transform='rotate(-90 16 " << height / 2
        << ")' text-anchor='middle'>excess risk (log)</text>\n";

    // reference line with the target slope through the first positive point
    const experiments::RatePoint* first = nullptr;
    for (const auto& p : rep.points)
        if (p.mean_excess > 0) {
            first = &p;
            break;
        }
    if (first) {
        double lx0 = std::log10(static_cast<double>(first->n));
        double ly0 = std::log10(first->mean_excess);
        // a power law has the same slope in log10-log10 as in ln-ln coordinates
        double ly1 = ly0 + rep.target_slope * (lx_max - lx0);
        out << "<line x1='" << detail::fmt(sx(lx0)) << "' y1='" << detail::fmt(sy(ly0))
            << "' x2='" << detail::fmt(sx(lx_max)) << "' y2='" << detail::fmt(sy(ly1))
            << "' stroke='#999999' stroke-dasharray='6,4'/>\n";
    }

    std::string poly;
    for (const auto& p : rep.points) {
        if (p.mean_excess <= 0) continue;
        double x = sx(std::log10(static_cast<double>(p.n)));
        double y = sy(std::log10(p.mean_excess));
        poly += detail::fmt(x) + "," + detail::fmt(y) + " ";
        double lo = p.mean_excess - p.std_error, hi = p.mean_excess + p.std_error;
        if (lo > 0) {
            out << "<line x1='" << detail::fmt(x) << "' y1='" << detail::fmt(sy(std::log10(lo)))
                << "' x2='" << detail::fmt(x) << "' y2='" << detail::fmt(sy(std::log10(hi)))
                << "' stroke='#d62728'/>\n";
        }
        out << "<circle cx='" << detail::fmt(x) << "' cy='" << detail::fmt(y)
            << "' r='3.5' fill='#d62728'/>\n";
    }
    out << "<polyline points='" << poly << "' fill='none' stroke='#d62728' stroke-width='1.5'/>\n";
    out << "<text x='" << width - margin << "' y='" << margin - 14
        << "' font-size='12' text-anchor='end'>slope " << detail::fmt(rep.slope) << " (target "
        << detail::fmt(rep.target_slope) << ")</text>\n";
    out << "</svg>\n";
    return out.str();
}

/// Decision map of a 2-D run: run-length colored grid rows, the hyperplane
/// arrangement as dotted lines, training points, and bold boundaries around
/// highlighted cells.
inline std::string decision_map(const experiments::CellComplexityReport& cells,
                                const geometry::Arrangement& arr, const Matrix& train_points,
                                const std::vector<int>& train_labels) {
    const int res = cells.resolution;
    const double width = 640, height = 640;
    auto px = [&](double x) { return (x - cells.x_min) / (cells.x_max - cells.x_min) * width; };
    auto py = [&](double y) { return height - (y - cells.y_min) / (cells.y_max - cells.y_min) * height; };
    const double cw = width / res, ch = height / res;

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";

    // run-length merged grid rows
    for (int iy = 0; iy < res; ++iy) {
        int ix = 0;
        while (ix < res) {
            std::size_t g = static_cast<std::size_t>(iy) * res + ix;
            int label = cells.grid_labels[g];
            int run = 1;
            while (ix + run < res &&
                   cells.grid_labels[g + static_cast<std::size_t>(run)] == label)
                ++run;
            out << "<rect x='" << detail::fmt(ix * cw) << "' y='"
                << detail::fmt(height - (iy + 1) * ch) << "' width='" << detail::fmt(run * cw)
                << "' height='" << detail::fmt(ch) << "' fill='"
                << (label > 0 ? "#bcd7f0" : "#f6dca8") << "'/>\n";
            ix += run;
        }
    }

    // bold boundaries around highlighted cells
    auto highlighted = [&](int cell_idx) {
        return cells.cells[static_cast<std::size_t>(cell_idx)].highlighted;
    };
    out << "<g stroke='#222222' stroke-width='2.5'>\n";
    for (int iy = 0; iy < res; ++iy)
        for (int ix = 0; ix < res; ++ix) {
            std::size_t g = static_cast<std::size_t>(iy) * res + ix;
            int c = cells.grid_cell[g];
            if (ix + 1 < res) {
                int c2 = cells.grid_cell[g + 1];
                if (c != c2 && (highlighted(c) != highlighted(c2))) {
                    double x = (ix + 1) * cw;
                    out << "<line x1='" << detail::fmt(x) << "' y1='"
                        << detail::fmt(height - iy * ch) << "' x2='" << detail::fmt(x) << "' y2='"
                        << detail::fmt(height - (iy + 1) * ch) << "'/>\n";
                }
            }
            if (iy + 1 < res) {
                int c2 = cells.grid_cell[g + static_cast<std::size_t>(res)];
                if (c != c2 && (highlighted(c) != highlighted(c2))) {
                    double y = height - (iy + 1) * ch;
                    out << "<line x1='" << detail::fmt(ix * cw) << "' y1='" << detail::fmt(y)
                        << "' x2='" << detail::fmt((ix + 1) * cw) << "' y2='" << detail::fmt(y)
                        << "'/>\n";
                }
            }
        }
    out << "</g>\n";

    // arrangement lines, clipped to the box, dotted
    out << "<g stroke='#555555' stroke-dasharray='3,3'>\n";
    for (int j = 0; j < arr.k(); ++j) {
        double w0 = arr.normals(0, static_cast<std::size_t>(j));
        double w1 = arr.normals(1, static_cast<std::size_t>(j));
        double b = arr.offsets[static_cast<std::size_t>(j)];
        // collect intersections with the bbox edges
        std::vector<std::pair<double, double>> pts;
        auto try_x = [&](double x) {
            if (std::abs(w1) < 1e-12) return;
            double y = -(b + w0 * x) / w1;
            if (y >= cells.y_min - 1e-9 && y <= cells.y_max + 1e-9) pts.emplace_back(x, y);
        };
        auto try_y = [&](double y) {
            if (std::abs(w0) < 1e-12) return;
            double x = -(b + w1 * y) / w0;
            if (x >= cells.x_min - 1e-9 && x <= cells.x_max + 1e-9) pts.emplace_back(x, y);
        };
        try_x(cells.x_min);
        try_x(cells.x_max);
        try_y(cells.y_min);
        try_y(cells.y_max);
        if (pts.size() >= 2) {
            out << "<line x1='" << detail::fmt(px(pts[0].first)) << "' y1='"
                << detail::fmt(py(pts[0].second)) << "' x2='" << detail::fmt(px(pts[1].first))
                << "' y2='" << detail::fmt(py(pts[1].second)) << "'/>\n";
        }
    }
    out << "</g>\n";

    for (std::size_t i = 0; i < train_points.rows; ++i) {
        out << "<circle cx='" << detail::fmt(px(train_points(i, 0))) << "' cy='"
            << detail::fmt(py(train_points(i, 1))) << "' r='3' fill='"
            << (train_labels[i] == 1 ? "#1f5fa8" : "#c88a1f")
            << "' stroke='white' stroke-width='0.7'/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace hann::svg
