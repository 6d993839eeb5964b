#include "guidelab/plots.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace guidelab::plots {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kMargin = 48;

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

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) {
            const double pad = std::max(std::abs(lo) * 0.1, 0.5);
            lo -= pad;
            hi += pad;
        }
    }
};

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
}

class Frame {
public:
    Frame(const Panel& p, double ox, int width, int height) : log_x_(p.log_x), ox_(ox), w_(width), h_(height) {
        for (const auto& s : p.series) {
            for (double v : s.x) xr_.add(tx(v));
            for (std::size_t i = 0; i < s.y.size(); ++i) {
                const double e = i < s.y_err.size() ? s.y_err[i] : 0.0;
                yr_.add(s.y[i] - e);
                yr_.add(s.y[i] + e);
            }
        }
        xr_.finish();
        yr_.finish();
    }

    double tx(double v) const { return log_x_ ? (v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN()) : v; }
    double px(double v) const { return ox_ + kMargin + (tx(v) - xr_.lo) / (xr_.hi - xr_.lo) * (w_ - 1.5 * kMargin); }
    double py(double v) const { return h_ - kMargin - (v - yr_.lo) / (yr_.hi - yr_.lo) * (h_ - 1.7 * kMargin); }

    const Range& xr() const { return xr_; }
    const Range& yr() const { return yr_; }
    bool log_x() const { return log_x_; }
    double left() const { return ox_ + kMargin; }
    double right() const { return ox_ + w_ - kMargin / 2.0; }
    double top() const { return 0.7 * kMargin; }
    double bottom() const { return h_ - kMargin; }

private:
    bool log_x_;
    double ox_;
    int w_;
    int h_;
    Range xr_;
    Range yr_;
};

void draw_axes(std::string& out, const Panel& p, const Frame& f, double ox, int width, int height) {
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333\"/>\n",
                       f.left(), f.top(), f.right() - f.left(), f.bottom() - f.top());
    for (double v : ticks(f.xr().lo, f.xr().hi)) {
        const double x = f.left() + (v - f.xr().lo) / (f.xr().hi - f.xr().lo) * (f.right() - f.left());
        const std::string label = f.log_x() ? fmt::format("{:g}", std::pow(10.0, v)) : fmt::format("{:g}", v);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#333\"/>\n", x,
                           f.bottom(), f.bottom() + 4);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n", x,
                           f.bottom() + 15, label);
    }
    for (double v : ticks(f.yr().lo, f.yr().hi)) {
        const double y = f.py(v);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#333\"/>\n",
                           f.left() - 4, y, f.left());
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"end\">{:g}</text>\n",
                           f.left() - 6, y + 3, v);
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                       ox + width / 2.0, 0.45 * kMargin, escape(p.title));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                       (f.left() + f.right()) / 2.0, height - 10.0, escape(p.x_label));
    out += fmt::format(
        "<text x=\"{0:.2f}\" y=\"{1:.2f}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {0:.2f} "
        "{1:.2f})\">{2}</text>\n",
        ox + 12.0, (f.top() + f.bottom()) / 2.0, escape(p.y_label));
}

void draw_series(std::string& out, const Panel& p, const Frame& f, const Series& s, const char* color,
                 std::size_t index) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        const double x = f.px(s.x[i]);
        const double y = f.py(s.y[i]);
        if (std::isfinite(x) && std::isfinite(y)) pts.emplace_back(x, y);
    }
    if (p.scatter) {
        for (const auto& [x, y] : pts)
            out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.4\" fill=\"{}\" fill-opacity=\"0.6\"/>\n", x, y,
                               color);
    } else {
        if (!pts.empty()) {
            out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", color);
            for (std::size_t i = 0; i < pts.size(); ++i)
                out += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", pts[i].first, pts[i].second);
            out += "\"/>\n";
        }
        if (p.markers)
            for (const auto& [x, y] : pts)
                out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", x, y, color);
        for (std::size_t i = 0; i < s.y_err.size() && i < s.x.size() && i < s.y.size(); ++i) {
            const double x = f.px(s.x[i]);
            if (!std::isfinite(x) || !(s.y_err[i] > 0)) continue;
            out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\"/>\n", x,
                               f.py(s.y[i] - s.y_err[i]), f.py(s.y[i] + s.y_err[i]), color);
        }
    }
    if (!s.label.empty()) {
        const double y = f.top() + 14.0 * (static_cast<double>(index) + 1);
        out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"3\" fill=\"{}\"/>\n", f.right() - 90,
                           y - 4, color);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">{}</text>\n", f.right() - 76, y,
                           escape(s.label));
    }
}

}  // namespace

std::string render(const std::vector<Panel>& panels, int panel_width, int panel_height) {
    const int total = std::max<int>(1, static_cast<int>(panels.size())) * panel_width;
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        total, panel_height);
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const auto& p = panels[k];
        const double ox = static_cast<double>(k) * panel_width;
        const Frame f(p, ox, panel_width, panel_height);
        draw_axes(out, p, f, ox, panel_width, panel_height);
        for (std::size_t i = 0; i < p.series.size(); ++i)
            draw_series(out, p, f, p.series[i], kPalette[i % std::size(kPalette)], i);
    }
    out += "</svg>\n";
    return out;
}

Series density_series(const std::string& label, const std::vector<Vec>& samples, double lo, double hi, int bins) {
    Series s{label, {}, {}, {}};
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    for (const auto& v : samples) {
        const double x = v.at(0);
        if (x < lo || x >= hi) continue;
        const auto k = std::min<std::size_t>(static_cast<std::size_t>((x - lo) / width), counts.size() - 1);
        counts[k] += 1.0;
    }
    const double norm = samples.empty() ? 0.0 : 1.0 / (static_cast<double>(samples.size()) * width);
    for (int k = 0; k < bins; ++k) {
        s.x.push_back(lo + (k + 0.5) * width);
        s.y.push_back(counts[static_cast<std::size_t>(k)] * norm);
    }
    return s;
}

Series gmm_density_series(const std::string& label, const IsotropicGmm& m, double t, double lo, double hi,
                          int points) {
    Series s{label, {}, {}, {}};
    for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * i / (points - 1);
        const double xv[] = {x};
        s.x.push_back(x);
        s.y.push_back(std::exp(m.noisy_logpdf(t, xv)));
    }
    return s;
}

Series scatter_series(const std::string& label, const std::vector<Vec>& samples) {
    Series s{label, {}, {}, {}};
    for (const auto& v : samples) {
        s.x.push_back(v.at(0));
        s.y.push_back(v.size() > 1 ? v[1] : 0.0);
    }
    return s;
}

}  // namespace guidelab::plots
