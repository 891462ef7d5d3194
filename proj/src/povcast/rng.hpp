#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace povcast {

/// Philox4x64-10 counter-based generator. The key is (seed, stream), so chains
/// seeded with the same seed but different stream ids never overlap. Output
/// order matches numpy.random.Philox(key=[seed, stream]).random_raw().
class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint64_t, 4>;

    explicit Philox4x64(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
        : key_{seed, stream} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    static Block block(const Block& counter, const std::array<std::uint64_t, 2>& key) noexcept;

    std::uint64_t seed() const noexcept { return key_[0]; }
    std::uint64_t stream() const noexcept { return key_[1]; }

    friend bool operator==(const Philox4x64&, const Philox4x64&) = default;

private:
    std::array<std::uint64_t, 2> key_;
    Block counter_{};
    Block buffer_{};
    unsigned pos_ = 4;
};

/// Single-owner random state. Not thread-safe; give every chain its own.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept : engine_(seed, stream) {}

    std::uint64_t next_u64() noexcept { return engine_(); }
    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    double uniform() noexcept;

    Philox4x64& engine() noexcept { return engine_; }

private:
    Philox4x64 engine_;
};

double sample_normal(Rng& rng, double mean, double sd);

/// N(mean, sd^2) conditioned on [lo, hi], drawn by inversion. Far-tail windows
/// fall back to an exact exponential-proposal rejection step.
double sample_truncnorm(Rng& rng, double mean, double sd, double lo, double hi);

std::int64_t sample_poisson(Rng& rng, double rate);

/// X such that 1/X ~ Gamma(shape, rate = scale); equivalently InvGamma with
/// density proportional to x^(-shape-1) exp(-scale / x). Draws beyond the
/// double range saturate at the largest finite value.
double sample_invgamma(Rng& rng, double shape, double scale);

double sample_gamma(Rng& rng, double shape, double rate);

std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

/// Unchecked variant for hot loops: weights must be finite and non-negative and
/// total must be their left-to-right sum, which must be positive.
std::size_t sample_categorical(Rng& rng, std::span<const double> weights, double total) noexcept;

// Standard normal helpers shared with the truncated sampler.
double normal_cdf(double x);
double normal_ccdf(double x);
double normal_quantile(double p);

} // namespace povcast
