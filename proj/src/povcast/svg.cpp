#include "povcast/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace povcast::svg {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
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

// Maps data coordinates into a plotting rectangle (y grows upwards in data space).
struct Frame {
    double left, top, width, height;
    double x0, x1, y0, y1;
    double x(double v) const { return left + (v - x0) / (x1 - x0) * width; }
    double y(double v) const { return top + height - (v - y0) / (y1 - y0) * height; }

    void axes(Canvas& c, int y_ticks, const std::string& y_fmt_suffix = "") const {
        c.line(left, top + height, left + width, top + height, "#000");
        c.line(left, top, left, top + height, "#000");
        for (int k = 0; k <= y_ticks; ++k) {
            const double v = y0 + (y1 - y0) * k / y_ticks;
            c.line(left - 4, y(v), left, y(v), "#000");
            c.text(left - 6, y(v) + 4, num(v) + y_fmt_suffix, 10, "end");
        }
    }
};

} // namespace

Canvas::Canvas(double width, double height) : width_(width), height_(height) {
    rect(0, 0, width, height, "#ffffff");
}

void Canvas::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
             num(h) + "\" fill=\"" + fill + "\"/>\n";
}

void Canvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                  double width, bool dashed) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
             num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"" +
             (dashed ? " stroke-dasharray=\"4 3\"" : "") + "/>\n";
}

void Canvas::circle(double cx, double cy, double r, const std::string& fill, const std::string& stroke) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
             fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void Canvas::text(double x, double y, const std::string& s, double size, const std::string& anchor,
                  double rotate) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\"";
    if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    body_ += ">" + escape(s) + "</text>\n";
}

std::string Canvas::str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
           num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" + body_ +
           "</svg>\n";
}

std::string predictive_histograms(const PredictiveTable& table, const std::string& title) {
    const std::size_t n_ent = table.entity_names.size();
    const std::size_t cols = 4;
    const std::size_t rows = (n_ent + cols - 1) / cols;
    const double cell_w = 220, cell_h = 140;
    Canvas c(cols * cell_w + 20, rows * cell_h + 50);
    c.text(10, 24, title, 14);
    const double max_count = static_cast<double>(std::max<std::size_t>(table.max_count(), 1));
    for (std::size_t i = 0; i < n_ent; ++i) {
        const double ox = 10 + static_cast<double>(i % cols) * cell_w;
        const double oy = 40 + static_cast<double>(i / cols) * cell_h;
        std::int64_t peak = 1;
        for (std::size_t k = 0; k < table.histogram.cols(); ++k) peak = std::max(peak, table.histogram(i, k));
        const Frame f{ox + 40, oy + 18, cell_w - 55, cell_h - 45, -0.5, max_count + 0.5, 0.0,
                      static_cast<double>(peak) / static_cast<double>(std::max<std::size_t>(table.n, 1))};
        c.text(ox + 40, oy + 12, table.entity_names[i], 11);
        f.axes(c, 2);
        const double bar = f.width / (max_count + 1) * 0.8;
        for (std::size_t k = 0; k < table.histogram.cols(); ++k) {
            const double p = static_cast<double>(table.histogram(i, k)) / static_cast<double>(table.n);
            if (p <= 0.0) continue;
            c.rect(f.x(static_cast<double>(k)) - bar / 2, f.y(p), bar, f.y(0.0) - f.y(p), "#4a6fa5");
        }
        for (double k = 0; k <= max_count; k += 5) {
            c.text(f.x(k), f.top + f.height + 12, num(k).substr(0, num(k).find('.')), 9, "middle");
        }
    }
    return c.str();
}

std::string zero_probability_chart(const std::vector<std::string>& names,
                                   const std::vector<double>& p_next,
                                   const std::vector<double>& p_next2,
                                   const std::vector<std::size_t>& order, double err) {
    const double w = 60 + 28.0 * static_cast<double>(order.size()) + 20;
    Canvas c(w, 380);
    const Frame f{60, 20, w - 80, 240, -0.5, static_cast<double>(order.size()) - 0.5, 0.0, 1.0};
    f.axes(c, 4);
    c.text(15, 140, "P(zero)", 11, "middle", -90);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto i = order[r];
        const double x = f.x(static_cast<double>(r));
        c.line(x, f.y(std::min(1.0, p_next[i] + err)), x, f.y(std::max(0.0, p_next[i] - err)), "#000");
        c.circle(x, f.y(p_next[i]), 3.5, "#000", "#000");
        if (i < p_next2.size()) c.circle(x, f.y(p_next2[i]), 4.5, "none", "#1f4fd1");
        c.text(x + 3, f.top + f.height + 10, names[i], 10, "end", -60);
    }
    return c.str();
}

std::string coverage_chart(const CoverageReport& hyper, const CoverageReport& predictive) {
    Canvas c(640, 330);
    const auto panel = [&](const CoverageReport& rep, double left, const std::string& title) {
        const Frame f{left, 30, 240, 240, 0.4, 1.0, 0.4, 1.0};
        f.axes(c, 3);
        c.text(left + 120, 20, title, 12, "middle");
        c.line(f.x(0.4), f.y(0.4), f.x(1.0), f.y(1.0), "#999", 1.0, true);
        for (std::size_t k = 0; k < rep.alphas.size(); ++k) {
            c.circle(f.x(rep.alphas[k]), f.y(std::clamp(rep.coverage(k), 0.4, 1.0)), 3.5, "#000", "#000");
            c.text(f.x(rep.alphas[k]), f.top + f.height + 14, num(rep.alphas[k]), 9, "middle");
        }
        c.text(left + 120, f.top + f.height + 34, "nominal", 11, "middle");
    };
    panel(hyper, 60, "hyperparameters");
    panel(predictive, 370, "predictions");
    return c.str();
}

std::string backtest_chart(const BacktestReport& report) {
    std::vector<std::size_t> order(report.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.rows[a].median < report.rows[b].median;
    });
    double top = 1.0;
    for (const auto& r : report.rows) {
        top = std::max({top, r.interval80.hi, static_cast<double>(r.truth)});
    }
    const double w = 60 + 40.0 * static_cast<double>(order.size()) + 20;
    Canvas c(w, 360);
    const Frame f{60, 20, w - 80, 240, -0.5, static_cast<double>(order.size()) - 0.5, 0.0, top + 1};
    f.axes(c, 4);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& row = report.rows[order[r]];
        const double x = f.x(static_cast<double>(r));
        c.line(x + 4, f.y(row.interval80.lo), x + 4, f.y(row.interval80.hi), "#555", 1.5, true);
        c.line(x - 4, f.y(row.interval50.lo), x - 4, f.y(row.interval50.hi), "#000", 2.0);
        c.circle(x, f.y(static_cast<double>(row.truth)), 3.5, "#c0392b", "#c0392b");
        c.text(x + 3, f.top + f.height + 10, row.entity, 10, "end", -60);
    }
    return c.str();
}

} // namespace povcast::svg
