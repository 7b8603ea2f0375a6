#include "pipeline/exports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/error.hpp"

namespace risknet::pipeline {

namespace {

constexpr double kWidth = 900, kHeight = 360, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f4e79", "#c0504d", "#4f8a3c", "#7f6084"};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
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

void header(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
        << "</text>\n";
}

struct Range {
    double lo, hi;
};

Range padded_range(double lo, double hi) {
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

void axes(std::ostringstream& out, Range y) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y0)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(y1)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = y.lo + (y.hi - y.lo) * i / 4.0;
        const double py = y0 - (y0 - y1) * i / 4.0;
        out << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">" << tick(v)
            << "</text>\n";
        out << "<line x1=\"" << fmt(x0 - 3) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"black\"/>\n";
    }
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::vector<std::string>& periods,
                           const std::vector<ChartSeries>& series) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series)
        for (double v : s.values)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    const Range y = padded_range(lo, hi);
    const std::size_t n = periods.size();
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    auto px = [&](std::size_t t) { return n <= 1 ? 0.5 * (x0 + x1) : x0 + (x1 - x0) * t / static_cast<double>(n - 1); };
    auto py = [&](double v) { return y0 - (y0 - y1) * (v - y.lo) / (y.hi - y.lo); };

    std::ostringstream out;
    header(out, title);
    axes(out, y);
    const std::size_t labels = std::min<std::size_t>(n, 6);
    for (std::size_t i = 0; i < labels; ++i) {
        const std::size_t t = labels == 1 ? 0 : i * (n - 1) / (labels - 1);
        out << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">"
            << escape(periods[t]) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* color = kColors[s % 4];
        std::string d;
        bool pen_down = false;
        std::size_t drawn = 0;
        double sum = 0.0;
        for (std::size_t t = 0; t < ser.values.size() && t < n; ++t) {
            const double v = ser.values[t];
            if (!std::isfinite(v)) {
                pen_down = false;
                continue;
            }
            d += (pen_down ? " L" : " M") + fmt(px(t)) + "," + fmt(py(v));
            pen_down = true;
            sum += v;
            ++drawn;
        }
        if (drawn == 1) {
            for (std::size_t t = 0; t < ser.values.size() && t < n; ++t)
                if (std::isfinite(ser.values[t]))
                    out << "<circle cx=\"" << fmt(px(t)) << "\" cy=\"" << fmt(py(ser.values[t])) << "\" r=\"3\" fill=\""
                        << color << "\"/>\n";
        } else if (drawn > 1) {
            out << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\"/>\n";
        }
        if (ser.mean_line && drawn > 0) {
            const double m = sum / static_cast<double>(drawn);
            out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(py(m)) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(py(m))
                << "\" stroke=\"" << color << "\" stroke-dasharray=\"2,3\"/>\n";
        }
        out << "<text x=\"" << fmt(x1 - 4) << "\" y=\"" << fmt(kTop + 14 * (s + 1)) << "\" text-anchor=\"end\" fill=\""
            << color << "\">" << escape(ser.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
    double hi = 0.0;
    for (double v : values)
        if (std::isfinite(v)) hi = std::max(hi, v);
    const Range y{0.0, hi > 0.0 ? hi * 1.05 : 1.0};
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    const std::size_t n = values.size();
    const double slot = n ? (x1 - x0) / static_cast<double>(n) : 0.0;

    std::ostringstream out;
    header(out, title);
    axes(out, y);
    for (std::size_t i = 0; i < n; ++i) {
        const double cx = x0 + slot * (i + 0.5);
        if (std::isfinite(values[i])) {
            const double h = (y0 - y1) * values[i] / y.hi;
            out << "<rect x=\"" << fmt(cx - 0.35 * slot) << "\" y=\"" << fmt(y0 - h) << "\" width=\"" << fmt(0.7 * slot)
                << "\" height=\"" << fmt(h) << "\" fill=\"" << kColors[0] << "\"/>\n";
        }
        out << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(y0 + 12) << "\" text-anchor=\"end\" transform=\"rotate(-60 "
            << fmt(cx) << " " << fmt(y0 + 12) << ")\">" << escape(i < labels.size() ? labels[i] : "") << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

std::vector<std::filesystem::path> export_plots(const topology::TopologySeries& series,
                                                const std::filesystem::path& dir) {
    if (series.records.empty()) throw DataError("cannot plot an empty topology series");
    std::vector<std::string> periods;
    ChartSeries apl{"APL", {}, true}, maxdeg{"max degree", {}, true}, alpha{"alpha", {}, false},
        pvalue{"pValue", {}, false};
    for (const auto& r : series.records) {
        periods.push_back(r.period);
        const bool ok = r.error.empty();
        apl.values.push_back(ok ? r.apl : std::numeric_limits<double>::quiet_NaN());
        maxdeg.values.push_back(ok ? r.max_degree : std::numeric_limits<double>::quiet_NaN());
        alpha.values.push_back(r.alpha_valid ? r.alpha : std::numeric_limits<double>::quiet_NaN());
        pvalue.values.push_back(r.alpha_valid ? r.pvalue : std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<std::filesystem::path> files{dir / "apl.svg", dir / "max_degree.svg", dir / "alpha.svg",
                                             dir / "pvalue.svg", dir / "bc_mean.svg"};
    write_file(files[0], line_chart_svg("Average path length", periods, {apl}));
    write_file(files[1], line_chart_svg("Maximum degree", periods, {maxdeg}));
    write_file(files[2], line_chart_svg("Power-law exponent", periods, {alpha}));
    write_file(files[3], line_chart_svg("Power-law goodness of fit", periods, {pvalue}));
    write_file(files[4], bar_chart_svg("Mean betweenness centrality", series.assets, series.bc_mean));
    return files;
}

std::vector<std::filesystem::path> export_dot(const std::vector<network::SpanningTree>& trees,
                                              const std::vector<std::string>& periods,
                                              const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& label : periods) {
        const auto it = std::find_if(trees.begin(), trees.end(), [&](const auto& t) { return t.period == label; });
        if (it == trees.end()) throw ConfigError("no tree for period " + label);
        std::string name = label;
        for (char& c : name)
            if (c == ':' || c == ' ') c = '-';
        const auto path = dir / ("mst_" + name + ".dot");
        write_file(path, network::to_dot(*it));
        files.push_back(path);
    }
    return files;
}

}  // namespace risknet::pipeline
