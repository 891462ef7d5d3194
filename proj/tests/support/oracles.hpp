#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's own density or CDF code.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

inline double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

/// Reference CDF values at sorted points, accumulated interval by interval from
/// the density, starting at `from` where the CDF is taken to be zero.
inline std::vector<double> cdf_by_quadrature(std::span<const double> sorted,
                                             const std::function<double(double)>& pdf, double from,
                                             double normaliser = 1.0) {
    std::vector<double> out(sorted.size());
    double acc = 0.0;
    double prev = from;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] > prev) {
            acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(pdf, prev, sorted[k], 0, 1e-12);
            prev = sorted[k];
        }
        out[k] = acc / normaliser;
    }
    return out;
}

/// Two-sided Kolmogorov-Smirnov statistic given reference CDF values at the sorted draws.
inline double ks_statistic(std::span<const double> ref_cdf) {
    const double n = static_cast<double>(ref_cdf.size());
    double d = 0.0;
    for (std::size_t k = 0; k < ref_cdf.size(); ++k) {
        const double lo = static_cast<double>(k) / n;
        const double hi = static_cast<double>(k + 1) / n;
        d = std::max({d, ref_cdf[k] - lo, hi - ref_cdf[k]});
    }
    return d;
}

/// Asymptotic KS critical value sqrt(-ln(alpha / 2) / 2) / sqrt(n).
inline double ks_critical(std::size_t n, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Poisson pmf by direct product, no logarithms: lambda^x e^-lambda / x!.
/// Non-integer x uses tgamma for the factorial.
inline double poisson_pmf_direct(double x, double lambda) {
    if (x == 0.0) return std::exp(-lambda);
    if (x == std::floor(x) && x < 170) {
        double p = std::exp(-lambda);
        for (int k = 1; k <= static_cast<int>(x); ++k) p *= lambda / k;
        return p;
    }
    return std::pow(lambda, x) * std::exp(-lambda) / std::tgamma(x + 1.0);
}

/// Product over periods t = 1..d of the windowed-Poisson likelihood factors.
inline double row_likelihood_direct(std::span<const double> row, double lambda, double tau, double beta) {
    double p = 1.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        const double t = static_cast<double>(k + 1);
        if (std::abs(t - beta) < tau) {
            p *= poisson_pmf_direct(row[k], lambda);
        } else if (row[k] != 0.0) {
            return 0.0;
        }
    }
    return p;
}

/// Mean of lambda under the conditional of u = log(lambda) proportional to
/// exp(s u - k e^u) N(u; mu, sigma^2) restricted to [lo, hi].
inline double lambda_conditional_mean(double s, double k, double mu, double sigma, double lo, double hi) {
    // Shift by the mode for stability.
    double mode = mu;
    for (int it = 0; it < 200; ++it) {
        const double g = s - k * std::exp(mode) - (mode - mu) / (sigma * sigma);
        const double h = -k * std::exp(mode) - 1.0 / (sigma * sigma);
        mode -= g / h;
    }
    const auto logf = [&](double u) {
        return s * u - k * std::exp(u) - 0.5 * (u - mu) * (u - mu) / (sigma * sigma);
    };
    const double top = logf(mode);
    const auto f = [&](double u) { return std::exp(logf(u) - top); };
    const double z = integrate(f, lo, hi);
    const double m = integrate([&](double u) { return std::exp(u) * f(u); }, lo, hi);
    return m / z;
}

/// Mean of N(mean, sd^2) restricted to [lo, hi].
inline double truncnorm_mean(double mean, double sd, double lo, double hi) {
    const auto pdf = [&](double x) { return normal_pdf(x, mean, sd); };
    return integrate([&](double x) { return x * pdf(x); }, lo, hi) / integrate(pdf, lo, hi);
}

} // namespace oracle
