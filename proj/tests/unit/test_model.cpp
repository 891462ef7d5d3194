#include <doctest.h>

#include "oracles.hpp"
#include "povcast/data_model.hpp"
#include "povcast/error.hpp"
#include "povcast/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace povcast;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_pmf_direct(double x, double lambda) { return std::log(oracle::poisson_pmf_direct(x, lambda)); }

} // namespace

TEST_CASE("window membership is strict") {
    CHECK(in_window(3, {1.0, 0.5, 3.0}));
    CHECK_FALSE(in_window(3, {1.0, 0.0, 3.0}));
    CHECK_FALSE(in_window(6, {1.0, 2.0, 4.0}));
    CHECK(in_window(5, {1.0, 2.0, 4.0}));
    CHECK(in_window(6, {1.0, 2.0, 4.0}, false));
}

TEST_CASE("count log density") {
    const CharacterLatents on{2.0, 1.0, 1.0};
    CHECK(count_log_density(2.0, on, 1) == doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-14));
    CHECK(count_log_density(2.0, on, 1) == doctest::Approx(-1.3069).epsilon(1e-4));
    const CharacterLatents off{2.0, 0.5, 4.0};
    CHECK(count_log_density(0.0, off, 1) == 0.0);
    CHECK(count_log_density(1.0, off, 1) == -kInf);
    CHECK(count_log_density(0.0, on, 1) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("integer counts match the textbook pmf") {
    for (const double lambda : {0.1, 1.0, 3.67, 15.0, 40.0}) {
        for (int x = 0; x <= 30; ++x) {
            const CharacterLatents lat{lambda, 1.0, 1.0};
            CHECK(std::abs(count_log_density(x, lat, 1) - log_pmf_direct(x, lambda)) < 1e-12);
        }
    }
}

TEST_CASE("row log likelihood examples") {
    const std::vector<double> zeros{0, 0, 0, 0, 0};
    CHECK(row_log_likelihood(zeros, {3.0, 0.2, 2.5}) == 0.0);

    const std::vector<double> first{15, 0, 0, 0, 0};
    const double expected = 15.0 * std::log(15.0) - 15.0 - std::lgamma(16.0);
    CHECK(row_log_likelihood(first, {15.0, 0.9, 1.0}) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(row_log_likelihood(first, {15.0, 0.9, 1.0}) == doctest::Approx(-2.2785).epsilon(1e-4));

    const std::vector<double> late{0, 0, 0, 0, 3};
    CHECK(row_log_likelihood(late, {15.0, 0.9, 1.0}) == -kInf);
}

TEST_CASE("row likelihood matches a direct product on table 1") {
    const auto m = load_matrix(POVCAST_DATA_DIR "/table1.csv");
    const auto s = smooth(m, 3, 4);
    Rng rng(17);
    int finite = 0;
    for (const auto* data : {&s}) {
        for (std::size_t i = 0; i < data->entities(); ++i) {
            const auto row = data->counts.row(i);
            for (int k = 0; k < 50; ++k) {
                const CharacterLatents lat{std::exp(4.0 * rng.uniform() - 1.0), 7.0 * rng.uniform(),
                                           7.0 * rng.uniform()};
                const double direct = oracle::row_likelihood_direct(row, lat.lambda, lat.tau, lat.beta);
                const double ours = std::exp(row_log_likelihood(row, lat));
                if (direct == 0.0) {
                    CHECK(ours == 0.0);
                } else {
                    ++finite;
                    CHECK(std::abs(ours - direct) <= 1e-10 * direct);
                }
            }
        }
    }
    CHECK(finite > 100);
}

TEST_CASE("permuting out-of-window zeros leaves the likelihood unchanged") {
    const CharacterLatents lat{4.0, 1.2, 2.0};
    const std::vector<double> a{3, 2, 1.5, 0, 0};
    std::vector<double> b = a;
    std::swap(b[3], b[4]);
    CHECK(row_log_likelihood(a, lat) == row_log_likelihood(b, lat));
}

TEST_CASE("predictive draws") {
    Rng rng(23);
    for (int k = 0; k < 1000; ++k) CHECK(sample_predictive(rng, {5.0, 1.0, 2.0}, 6) == 0);
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += static_cast<double>(sample_predictive(rng, {9.0, 2.0, 6.0}, 6));
    CHECK(std::abs(sum / n - 9.0) < 0.05);

    Rng a(29), b(29);
    for (int k = 0; k < 100; ++k) {
        CHECK(sample_predictive(a, {1.0, 1.0, 2.0}, 6) == sample_predictive(b, {100.0, 1.0, 2.0}, 6));
    }
}

TEST_CASE("sampled latents respect their bounds") {
    Rng rng(31);
    const Hyperparams h{1.3, 0.75, 2.0, 1.0, 4.0, 1.5};
    for (int k = 0; k < 10000; ++k) {
        const auto lat = sample_latents(rng, h);
        REQUIRE(lat.lambda > 0.0);
        REQUIRE(lat.tau >= 0.0);
        REQUIRE(lat.tau <= 7.0);
        REQUIRE(lat.beta >= 0.0);
        REQUIRE(lat.beta <= 7.0);
    }
}

TEST_CASE("simulate entity") {
    Rng rng(37);
    const Hyperparams wide{std::log(5.0), 1e-9, 7.0, 1e-9, 3.5, 1e-9};
    double sum = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < 10000; ++k) {
        const auto e = simulate_entity(rng, wide);
        REQUIRE(e.counts.size() == 7);
        for (const auto c : e.counts) {
            sum += static_cast<double>(c);
            ++count;
        }
    }
    CHECK(std::abs(sum / static_cast<double>(count) - 5.0) < 0.1);

    const Hyperparams closed{std::log(5.0), 1e-9, 0.0, 1e-9, 3.5, 1e-9};
    for (int k = 0; k < 1000; ++k) {
        for (const auto c : simulate_entity(rng, closed).counts) REQUIRE(c == 0);
    }

    const Hyperparams base{1.3, 0.75, 2.0, 1.0, 4.0, 1.5};
    std::size_t zero_rows = 0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
        const auto e = simulate_entity(rng, base);
        bool zero = true;
        for (int t = 0; t < 5; ++t) zero &= e.counts[t] == 0;
        zero_rows += zero;
    }
    const double frac = static_cast<double>(zero_rows) / n;
    MESSAGE("zero-row fraction over 5 periods at the base hyperparameters: " << frac);
    CHECK(frac > 0.0);
    CHECK(frac < 0.5);
}

TEST_CASE("simulate dataset") {
    const Hyperparams base{1.3, 0.75, 2.0, 1.0, 4.0, 1.5};
    Rng rng(41);
    CHECK_THROWS_AS(simulate_dataset(rng, base, 0, 5, false), ConfigError);

    Rng a(43), b(43);
    const auto x = simulate_dataset(a, base, 24, 5, false);
    const auto y = simulate_dataset(b, base, 24, 5, false);
    CHECK(x.observed == y.observed);
    CHECK(x.future == y.future);
    CHECK(x.observed.entities() == 24);
    CHECK(x.observed.periods() == 5);
    CHECK(x.future.cols() == 2);

    Rng c(47);
    for (int k = 0; k < 20; ++k) {
        const auto d = simulate_dataset(c, base, 24, 5, true);
        CHECK(d.observed.zero_rows().empty());
        CHECK(d.observed.entities() <= 24);
        CHECK(d.simulated == 24);
        CHECK(d.latents.size() == d.observed.entities());
    }
}

TEST_CASE("hyperparameter validation") {
    CHECK_NOTHROW(Hyperparams{1.3, 0.75, 2.0, 1.0, 4.0, 1.5}.validate());
    CHECK_THROWS_AS((Hyperparams{1.3, 0.0, 2.0, 1.0, 4.0, 1.5}.validate()), DomainError);
    CHECK_THROWS_AS((Hyperparams{1.3, 0.75, 2.0, -1.0, 4.0, 1.5}.validate()), DomainError);
    CHECK_THROWS_AS((Hyperparams{NAN, 0.75, 2.0, 1.0, 4.0, 1.5}.validate()), DomainError);
}
