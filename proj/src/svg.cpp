#include "tailpca/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tailpca::svg {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 608.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 376.0;

const char* kPalette[] = {"#1a6faf", "#d1495b", "#3a7d44", "#8e5ba6", "#c77d1f", "#4f5d75"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
    double scale(double v, double out_lo, double out_hi) const {
        return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
    }
};

Range axis_range(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi))) throw std::invalid_argument("chart data must be finite");
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 1e-300) {
        const double pad = std::max(1.0, std::fabs(hi)) * 0.5;
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

std::string escape(const std::string& s) {
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

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("chart needs at least one series");
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw std::invalid_argument("series " + s.label + " needs matching non-empty x/y");
        for (double v : s.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
        for (double v : s.y) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    const Range xr = axis_range(x_lo, x_hi);
    const Range yr = axis_range(y_lo, y_hi);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << (kWidth / 2) << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << escape(title) << "</text>\n";

    // grid and ticks, five divisions each way
    for (int i = 0; i <= 5; ++i) {
        const double fx = kLeft + (kRight - kLeft) * i / 5.0;
        const double fy = kBottom - (kBottom - kTop) * i / 5.0;
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        out << "<line x1=\"" << fmt(fx) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(fx) << "\" y2=\"" << kBottom
            << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(fy) << "\" x2=\"" << kRight << "\" y2=\"" << fmt(fy)
            << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<text x=\"" << fmt(fx) << "\" y=\"" << (kBottom + 20) << "\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(xv) << "</text>\n";
        out << "<text x=\"" << (kLeft - 8) << "\" y=\"" << fmt(fy + 4) << "\" text-anchor=\"end\" "
               "font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(yv) << "</text>\n";
    }
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\"" << kBottom
        << "\" stroke=\"#333333\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kBottom
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << ((kLeft + kRight) / 2) << "\" y=\"" << (kBottom + 42)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << escape(x_label)
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << ((kTop + kBottom) / 2) << "\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 "
        << ((kTop + kBottom) / 2) << ")\">" << escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) out << ' ';
            out << fmt(xr.scale(series[s].x[i], kLeft, kRight)) << ','
                << fmt(yr.scale(series[s].y[i], kBottom, kTop));
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            out << "<circle cx=\"" << fmt(xr.scale(series[s].x[i], kLeft, kRight)) << "\" cy=\""
                << fmt(yr.scale(series[s].y[i], kBottom, kTop)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = kTop + 16.0 * static_cast<double>(s);
        out << "<line x1=\"" << (kRight - 150) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << (kRight - 126)
            << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << (kRight - 120) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[s].label) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace tailpca::svg
