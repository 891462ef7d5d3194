#include <doctest.h>

#include "povcast/analysis.hpp"
#include "povcast/data_model.hpp"
#include "povcast/error.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

using namespace povcast;

namespace {

PosteriorSamples synthetic(const std::vector<std::vector<std::int64_t>>& next_by_draw) {
    PosteriorSamples s;
    s.n = next_by_draw.size();
    const std::size_t n_ent = next_by_draw.empty() ? 0 : next_by_draw[0].size();
    for (std::size_t i = 0; i < n_ent; ++i) s.entity_names.push_back("e" + std::to_string(i + 1));
    s.pred_next = Matrix<std::int64_t>(s.n, n_ent);
    s.pred_next2 = Matrix<std::int64_t>(s.n, n_ent);
    for (std::size_t k = 0; k < s.n; ++k) {
        for (std::size_t i = 0; i < n_ent; ++i) {
            s.pred_next(k, i) = next_by_draw[k][i];
            s.pred_next2(k, i) = next_by_draw[k][i] + 1;
        }
    }
    s.hyper.resize(s.n);
    s.latents.resize(s.n * n_ent);
    return s;
}

ChainConfig quick_chain() {
    ChainConfig c;
    c.iterations = 2100;
    c.burn_in = 100;
    c.thin = 10;
    return c;
}

} // namespace

TEST_CASE("nearest-rank credible interval on 1..100") {
    std::vector<double> d(100);
    std::iota(d.begin(), d.end(), 1.0);
    std::reverse(d.begin(), d.end());
    const auto iv = credible_interval(d, 0.8);
    CHECK(iv.lo == 10.0);
    CHECK(iv.hi == 90.0);
    const auto half = credible_interval(d, 0.5);
    CHECK(half.lo == 25.0);
    CHECK(half.hi == 75.0);
    const auto wide = credible_interval(d, 0.9999);
    CHECK(wide.lo == 1.0);
    CHECK(wide.hi == 100.0);
}

TEST_CASE("credible interval edge cases") {
    const std::vector<double> same(37, 4.0);
    const auto iv = credible_interval(same, 0.9);
    CHECK(iv.lo == 4.0);
    CHECK(iv.hi == 4.0);
    CHECK(iv.contains(4.0));
    CHECK_FALSE(iv.contains(4.5));
    CHECK_THROWS_AS(credible_interval(same, 0.0), DomainError);
    CHECK_THROWS_AS(credible_interval(same, 1.0), DomainError);
    CHECK_THROWS_AS(credible_interval(std::vector<double>{}, 0.5), DomainError);
    const std::vector<std::int64_t> ints{3, 1, 2};
    CHECK(credible_interval(ints, 0.5).lo == 1.0);
}

TEST_CASE("credible intervals are nested in alpha") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> d(1 + static_cast<std::size_t>(rng.uniform() * 500));
        for (auto& x : d) x = sample_normal(rng, 0.0, 1.0);
        double prev_lo = 1e300, prev_hi = -1e300;
        for (double a = 0.05; a < 1.0; a += 0.05) {
            const auto iv = credible_interval(d, a);
            CHECK(iv.lo <= prev_lo);
            CHECK(iv.hi >= prev_hi);
            prev_lo = iv.lo;
            prev_hi = iv.hi;
        }
    }
}

TEST_CASE("nearest rank quantile") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(nearest_rank_quantile(s, 0.5) == 2.0);
    CHECK(nearest_rank_quantile(s, 0.51) == 3.0);
    CHECK(nearest_rank_quantile(s, 0.0) == 1.0);
    CHECK(nearest_rank_quantile(s, 1.0) == 4.0);
}

TEST_CASE("predictive tables are exact tabulations") {
    const auto s = synthetic({{0, 3}, {0, 1}, {2, 1}, {0, 0}});
    const auto t = predictive_table(s, 1);
    CHECK(t.n == 4);
    CHECK(t.max_count() == 3);
    CHECK(t.histogram(0, 0) == 3);
    CHECK(t.histogram(0, 2) == 1);
    CHECK(t.histogram(1, 1) == 2);
    const auto z = zero_probability(s, 1);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(z[i] == static_cast<double>(t.histogram(i, 0)) / static_cast<double>(t.n));
        std::int64_t total = 0;
        for (std::size_t c = 0; c < t.histogram.cols(); ++c) total += t.histogram(i, c);
        CHECK(total == 4);
    }
    CHECK(z[0] == 0.75);
    CHECK(zero_probability(s, 2)[0] == 0.0);
    CHECK_THROWS_AS(predictive_table(s, 3), DomainError);

    const auto rebuilt = predictive_table(s, 1);
    CHECK(rebuilt.histogram == t.histogram);
}

TEST_CASE("zero probability order is descending and stable") {
    const std::vector<double> p{0.2, 0.9, 0.2, 1.0, 0.5};
    const auto order = zero_probability_order(p);
    CHECK(order == std::vector<std::size_t>{3, 1, 4, 0, 2});
}

TEST_CASE("new entity estimate") {
    const auto zeros = synthetic({{0, 0}, {0, 0}});
    const auto est = new_entity_estimate(zeros);
    CHECK(est.estimate == 70.0);
    CHECK(est.mean_existing_total == 0.0);
    const auto some = synthetic({{10, 20}, {30, 0}});
    const auto e2 = new_entity_estimate(some, 70.0, {9, 14, 27, 11});
    CHECK(e2.mean_existing_total == 30.0);
    CHECK(e2.estimate == 40.0);
    CHECK(e2.historical == std::vector<std::int64_t>{9, 14, 27, 11});
}

TEST_CASE("perturbation is small and keeps scales positive") {
    Rng rng(5);
    const Hyperparams base{1.3, 0.75, 2.0, 1.0, 4.0, 1.5};
    for (int k = 0; k < 1000; ++k) {
        const auto h = perturb(rng, base, 0.1, 0.01);
        CHECK(std::abs(h.mu_lambda - 1.3) < 0.6);
        CHECK(h.sigma_lambda / 0.75 == doctest::Approx(1.0).epsilon(0.06));
        CHECK(h.sigma_tau > 0.0);
    }
}

TEST_CASE("calibration study is deterministic and independent of worker count") {
    CalibrationConfig c;
    c.replicates = 3;
    c.chain = quick_chain();
    c.workers = 1;
    const auto a = calibration_study(c);
    c.workers = 3;
    const auto b = calibration_study(c);
    CHECK(a.hyper.hits == b.hyper.hits);
    CHECK(a.predictive.hits == b.predictive.hits);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(a.replicates[r].truth == b.replicates[r].truth);
        CHECK(a.replicates[r].posterior_median == b.replicates[r].posterior_median);
    }
    REQUIRE(a.hyper.alphas.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(a.hyper.totals[k] == 6 * (3 - a.hyper.failed));
        if (k > 0) CHECK(a.hyper.hits[k] >= a.hyper.hits[k - 1]);
    }

    CalibrationConfig one;
    one.replicates = 1;
    one.location_perturbation_sd = 1e-12;
    one.scale_perturbation_sd = 1e-12;
    one.chain = quick_chain();
    const auto x = calibration_study(one);
    const auto y = calibration_study(one);
    CHECK(x.replicates[0].posterior_median == y.replicates[0].posterior_median);
    CHECK(x.replicates[0].truth.mu_lambda == doctest::Approx(1.3).epsilon(1e-9));

    one.replicates = 0;
    CHECK_THROWS_AS(calibration_study(one), ConfigError);
}

TEST_CASE("calibration with zero-row deletion fits fewer rows") {
    CalibrationConfig c;
    c.replicates = 4;
    c.drop_zero_rows = true;
    c.chain = quick_chain();
    const auto r = calibration_study(c);
    for (const auto& rec : r.replicates) {
        if (!rec.ok) continue;
        CHECK(rec.zero_rows == 0);
        CHECK(rec.rows_fitted <= 24);
    }
}

TEST_CASE("backtest slicing and flags") {
    const auto m = load_matrix(POVCAST_DATA_DIR "/table1.csv");
    BacktestConfig c;
    c.rows.resize(9);
    std::iota(c.rows.begin(), c.rows.end(), std::size_t{0});
    c.train_cols = {0, 1};
    c.target_col = 2;
    c.chain = quick_chain();
    const auto r = backtest(m, c);
    CHECK(r.rows.size() == 9);
    CHECK(r.ahead == 1);
    CHECK_FALSE(r.heuristic_only);
    for (const auto& row : r.rows) {
        CHECK(row.interval50.lo >= row.interval80.lo);
        CHECK(row.interval50.hi <= row.interval80.hi);
        CHECK(row.hit80 == row.interval80.contains(static_cast<double>(row.truth)));
    }

    BacktestConfig bad = c;
    bad.target_col = 1;
    CHECK_THROWS_AS(backtest(m, bad), ConfigError);
    bad = c;
    bad.train_cols = {0, 2};
    bad.target_col = 3;
    CHECK_THROWS_AS(backtest(m, bad), ConfigError);
    bad = c;
    bad.target_col = 7;
    CHECK_THROWS_AS(backtest(m, bad), IndexError);

    BacktestConfig wide = c;
    wide.rows.resize(12);
    std::iota(wide.rows.begin(), wide.rows.end(), std::size_t{0});
    wide.train_cols = {0, 1, 2};
    wide.target_col = 3;
    wide.split_cols = {3, 4};
    const auto w = backtest(m, wide);
    CHECK(w.heuristic_only);
    CHECK(w.rows.size() + w.dropped.size() == 12);
}

TEST_CASE("backtest on a copied column covers the copies") {
    const auto m = parse_matrix("n,a,b,c\nA,4,5,5\nB,6,6,6\nC,3,5,5\nD,7,6,6\nE,5,4,4\nF,6,7,7\n");
    BacktestConfig c;
    c.train_cols = {0, 1};
    c.target_col = 2;
    c.chain = quick_chain();
    const auto r = backtest(m, c);
    for (const auto& row : r.rows) CHECK(row.hit80);
}
