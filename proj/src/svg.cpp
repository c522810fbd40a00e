#include "entroflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace entroflow {

namespace {

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#3f8f5f", "#8264a8", "#c98a2b", "#4a4a4a"};

struct Scale {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double px0 = 0.0, px1 = 1.0;

    double operator()(double v) const {
        double t = log ? std::log10(v) : v;
        double a = log ? std::log10(lo) : lo;
        double b = log ? std::log10(hi) : hi;
        if (b - a < 1e-300) return 0.5 * (px0 + px1);
        return px0 + (t - a) / (b - a) * (px1 - px0);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void expand(double v, bool log, double& lo, double& hi) {
    if (!std::isfinite(v)) return;
    if (log && v <= 0.0) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_line_chart(const std::vector<SvgSeries>& series, const SvgOptions& opts) {
    const double ml = 70, mr = 20, mt = 40, mb = 50;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            expand(s.x[i], opts.log_x, xlo, xhi);
            expand(s.y[i], opts.log_y, ylo, yhi);
            if (i < s.ylo.size()) expand(s.ylo[i], opts.log_y, ylo, yhi);
            if (i < s.yhi.size()) expand(s.yhi[i], opts.log_y, ylo, yhi);
        }
    if (!std::isfinite(xlo)) {
        xlo = 0.0;
        xhi = 1.0;
    }
    if (!std::isfinite(ylo)) {
        ylo = 0.0;
        yhi = 1.0;
    }
    if (xlo == xhi) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (ylo == yhi) {
        ylo = opts.log_y ? ylo * 0.5 : ylo - 0.5;
        yhi = opts.log_y ? yhi * 2.0 : yhi + 0.5;
    }
    if (!opts.log_y) {
        const double pad = 0.05 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
    }

    Scale sx{xlo, xhi, opts.log_x, ml, opts.width - mr};
    Scale sy{ylo, yhi, opts.log_y, static_cast<double>(opts.height - mb), mt};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
       << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << opts.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << escape(opts.title) << "</text>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << opts.height - mb << "\" x2=\"" << opts.width - mr
       << "\" y2=\"" << opts.height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << opts.height - mb << "\" stroke=\"black\"/>\n";

    // ticks
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double fx = static_cast<double>(i) / nticks;
        const double vx = opts.log_x ? std::pow(10.0, std::log10(xlo) + fx * (std::log10(xhi) - std::log10(xlo)))
                                     : xlo + fx * (xhi - xlo);
        const double px = sx(vx);
        os << "<line x1=\"" << px << "\" y1=\"" << opts.height - mb << "\" x2=\"" << px
           << "\" y2=\"" << opts.height - mb + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px << "\" y=\"" << opts.height - mb + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(vx)
           << "</text>\n";
        const double vy = opts.log_y ? std::pow(10.0, std::log10(ylo) + fx * (std::log10(yhi) - std::log10(ylo)))
                                     : ylo + fx * (yhi - ylo);
        const double py = sy(vy);
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py << "\" x2=\"" << ml << "\" y2=\"" << py
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << py + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(vy)
           << "</text>\n";
    }
    os << "<text x=\"" << (ml + opts.width - mr) / 2 << "\" y=\"" << opts.height - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(opts.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + opts.height - mb) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       << "transform=\"rotate(-90 16 " << (mt + opts.height - mb) / 2 << ")\">"
       << escape(opts.y_label) << "</text>\n";

    int color = 0;
    double legend_y = mt + 6;
    for (const auto& s : series) {
        const char* col = kPalette[color % 6];
        ++color;

        auto usable = [&](double vx, double vy) {
            if (!std::isfinite(vx) || !std::isfinite(vy)) return false;
            if (opts.log_x && vx <= 0.0) return false;
            if (opts.log_y && vy <= 0.0) return false;
            return true;
        };

        if (s.ylo.size() == s.x.size() && s.yhi.size() == s.x.size()) {
            std::ostringstream band;
            bool any = false;
            for (size_t i = 0; i < s.x.size(); ++i)
                if (usable(s.x[i], s.yhi[i])) {
                    band << sx(s.x[i]) << ',' << sy(s.yhi[i]) << ' ';
                    any = true;
                }
            for (size_t i = s.x.size(); i-- > 0;)
                if (usable(s.x[i], s.ylo[i])) band << sx(s.x[i]) << ',' << sy(s.ylo[i]) << ' ';
            if (any)
                os << "<polygon points=\"" << band.str() << "\" fill=\"" << col
                   << "\" opacity=\"0.15\" stroke=\"none\"/>\n";
        }

        std::ostringstream pts;
        for (size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i])) pts << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << col
           << "\" stroke-width=\"1.6\"/>\n";
        for (size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i]))
                os << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i])
                   << "\" r=\"2.4\" fill=\"" << col << "\"/>\n";

        os << "<rect x=\"" << opts.width - mr - 170 << "\" y=\"" << legend_y - 9
           << "\" width=\"12\" height=\"4\" fill=\"" << col << "\"/>\n";
        os << "<text x=\"" << opts.width - mr - 152 << "\" y=\"" << legend_y
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n";
        legend_y += 16;
    }

    os << "</svg>\n";
    return os.str();
}

}  // namespace entroflow
