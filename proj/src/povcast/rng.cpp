#include "povcast/rng.hpp"

#include "povcast/error.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

namespace povcast {

namespace {

__extension__ using unsigned128 = unsigned __int128;

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

using MathPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

} // namespace

Philox4x64::Block Philox4x64::block(const Block& counter,
                                    const std::array<std::uint64_t, 2>& key) noexcept {
    Block x = counter;
    auto k = key;
    for (int round = 0; round < 10; ++round) {
        const unsigned128 p0 = static_cast<unsigned128>(kMul0) * x[0];
        const unsigned128 p1 = static_cast<unsigned128>(kMul1) * x[2];
        const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const auto lo0 = static_cast<std::uint64_t>(p0);
        const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
        const auto lo1 = static_cast<std::uint64_t>(p1);
        x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return x;
}

Philox4x64::result_type Philox4x64::operator()() noexcept {
    if (pos_ == 4) {
        for (auto& word : counter_) {
            if (++word != 0) break;
        }
        buffer_ = block(counter_, key_);
        pos_ = 0;
    }
    return buffer_[pos_++];
}

double Rng::uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
}

double normal_cdf(double x) {
    return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2, MathPolicy());
}

double normal_ccdf(double x) {
    return 0.5 * boost::math::erfc(x / std::numbers::sqrt2, MathPolicy());
}

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal quantile needs p in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, MathPolicy());
}

double sample_normal(Rng& rng, double mean, double sd) {
    require(sd > 0.0 && std::isfinite(sd), "normal sd must be positive");
    require(std::isfinite(mean), "normal mean must be finite");
    boost::random::normal_distribution<double> dist(mean, sd);
    return dist(rng.engine());
}

namespace {

// Standard normal restricted to [a, b] with a >= 0. Returns the offset z - a,
// which keeps full precision when a is huge.
double upper_tail_offset(Rng& rng, double a, double b) {
    const double qa = normal_ccdf(a);
    if (qa > 1e-300) {
        const double qb = normal_ccdf(b);
        const double p = qb + rng.uniform() * (qa - qb);
        const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, MathPolicy());
        return std::clamp(z - a, 0.0, b - a);
    }
    // Far tail: the density of e = z - a is proportional to exp(-a e) exp(-e^2 / 2).
    // Propose from the truncated exponential, accept with exp(-e^2 / 2).
    const double width = b - a;
    const double mass = -std::expm1(-a * width);
    for (;;) {
        const double e = -std::log1p(-rng.uniform() * mass) / a;
        if (rng.uniform() <= std::exp(-0.5 * e * e)) return std::clamp(e, 0.0, width);
    }
}

} // namespace

double sample_truncnorm(Rng& rng, double mean, double sd, double lo, double hi) {
    require(sd > 0.0 && std::isfinite(sd), "truncated normal sd must be positive");
    require(lo < hi, "truncated normal needs lo < hi");
    require(std::isfinite(mean), "truncated normal mean must be finite");
    const double a = (lo - mean) / sd;
    const double b = (hi - mean) / sd;
    double x;
    if (a >= 0.0) {
        x = lo + sd * upper_tail_offset(rng, a, b);
    } else if (b <= 0.0) {
        x = hi - sd * upper_tail_offset(rng, -b, -a);
    } else {
        const double pa = normal_cdf(a);
        const double pb = normal_cdf(b);
        const double p = pa + rng.uniform() * (pb - pa);
        x = mean + sd * normal_quantile(std::clamp(p, DBL_MIN, 1.0 - DBL_EPSILON / 2));
    }
    return std::clamp(x, lo, hi);
}

std::int64_t sample_poisson(Rng& rng, double rate) {
    require(rate >= 0.0 && std::isfinite(rate), "poisson rate must be finite and non-negative");
    if (rate == 0.0) return 0;
    boost::random::poisson_distribution<std::int64_t, double> dist(rate);
    return dist(rng.engine());
}

double sample_gamma(Rng& rng, double shape, double rate) {
    require(shape > 0.0 && std::isfinite(shape), "gamma shape must be positive");
    require(rate > 0.0 && std::isfinite(rate), "gamma rate must be positive");
    boost::random::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(rng.engine());
}

double sample_invgamma(Rng& rng, double shape, double scale) {
    require(shape > 0.0 && std::isfinite(shape), "inverse gamma shape must be positive");
    require(scale > 0.0 && std::isfinite(scale), "inverse gamma scale must be positive");
    double log_g;
    if (shape >= 1.0) {
        log_g = std::log(sample_gamma(rng, shape, 1.0));
    } else {
        // Gamma(a) = Gamma(a + 1) * U^(1/a), kept in log space so tiny shapes do
        // not underflow to zero.
        const double g1 = sample_gamma(rng, shape + 1.0, 1.0);
        log_g = std::log(g1) + std::log(rng.uniform()) / shape;
    }
    const double log_x = std::log(scale) - log_g;
    return std::exp(std::clamp(log_x, std::log(DBL_MIN), std::log(DBL_MAX)));
}

std::size_t sample_categorical(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (const double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "categorical weights must be finite and non-negative");
        total += w;
    }
    require(total > 0.0, "categorical weights are all zero");
    return sample_categorical(rng, weights, total);
}

std::size_t sample_categorical(Rng& rng, std::span<const double> weights, double total) noexcept {
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        acc += weights[k];
        last_positive = k;
        if (target < acc) return k;
    }
    return last_positive;
}

} // namespace povcast
