#pragma once

#include "povcast/analysis.hpp"

#include <string>
#include <vector>

namespace povcast::svg {

/// Append-only SVG document with fixed two-decimal coordinates.
class Canvas {
public:
    Canvas(double width, double height);

    void rect(double x, double y, double w, double h, const std::string& fill);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, bool dashed = false);
    void circle(double cx, double cy, double r, const std::string& fill, const std::string& stroke);
    void text(double x, double y, const std::string& s, double size = 11.0,
              const std::string& anchor = "start", double rotate = 0.0);
    std::string str() const;

private:
    double width_;
    double height_;
    std::string body_;
};

/// Small-multiple bar charts, one per entity.
std::string predictive_histograms(const PredictiveTable& table, const std::string& title);

/// Zero probabilities in the given order, next period as filled dots with
/// +/- err bars and the period after as open circles.
std::string zero_probability_chart(const std::vector<std::string>& names,
                                   const std::vector<double>& p_next,
                                   const std::vector<double>& p_next2,
                                   const std::vector<std::size_t>& order, double err = 0.03);

/// Nominal vs actual coverage, hyperparameters left and predictions right.
std::string coverage_chart(const CoverageReport& hyper, const CoverageReport& predictive);

/// Central 50% (solid) and 80% (dashed) intervals with the actual value as a dot,
/// entities sorted by posterior median.
std::string backtest_chart(const BacktestReport& report);

} // namespace povcast::svg
