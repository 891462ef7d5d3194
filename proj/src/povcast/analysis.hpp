#pragma once

#include "povcast/gibbs.hpp"
#include "povcast/matrix.hpp"
#include "povcast/model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace povcast {

/// Histogram of predicted counts: histogram(i, c) = number of draws where entity i
/// had exactly c counts, for c in [0, max_count].
struct PredictiveTable {
    std::vector<std::string> entity_names;
    std::size_t n = 0;
    int ahead = 1;
    Matrix<std::int64_t> histogram;

    std::size_t max_count() const { return histogram.cols() == 0 ? 0 : histogram.cols() - 1; }
};

/// ahead = 1 tabulates period d + 1, ahead = 2 period d + 2.
PredictiveTable predictive_table(const PosteriorSamples& samples, int ahead);

std::span<const std::int64_t> predictive_draws(const PosteriorSamples& samples, int ahead,
                                               std::size_t entity, std::vector<std::int64_t>& buf);

/// Fraction of draws predicting zero, per entity.
std::vector<double> zero_probability(const PosteriorSamples& samples, int ahead);

struct CredibleInterval {
    double lo;
    double hi;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

// Nearest-rank quantiles on the sorted draws: the endpoints are the
// ceil(n (1 - alpha) / 2)-th and ceil(n (1 + alpha) / 2)-th order statistics,
// ranks clamped to [1, n]. Integer draws therefore give integer endpoints.
CredibleInterval credible_interval(std::span<const double> draws, double alpha);
CredibleInterval credible_interval(std::span<const std::int64_t> draws, double alpha);

/// Nearest-rank quantile, x_(ceil(n p)).
double nearest_rank_quantile(std::span<const double> sorted, double p);

struct CoverageReport {
    std::vector<double> alphas;
    std::vector<std::size_t> hits;
    std::vector<std::size_t> totals;
    std::size_t replicates = 0;
    std::size_t failed = 0;

    double coverage(std::size_t k) const {
        return totals[k] == 0 ? 0.0 : static_cast<double>(hits[k]) / static_cast<double>(totals[k]);
    }
};

struct CalibrationConfig {
    Hyperparams base{1.3, 0.75, 2.0, 1.0, 4.0, 1.5};
    std::size_t replicates = 100;
    std::size_t entities = 24;
    std::size_t observed_periods = 5;
    bool drop_zero_rows = false;
    double location_perturbation_sd = 0.1;
    double scale_perturbation_sd = 0.01;
    std::vector<double> alphas{0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    ChainConfig chain;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct ReplicateRecord {
    std::size_t index = 0;
    bool ok = false;
    std::string error;
    Hyperparams truth;
    std::size_t rows_fitted = 0;
    std::size_t zero_rows = 0;
    // Per alpha: how many of the six hyperparameter intervals covered the truth,
    // and how many entity prediction intervals covered the held-out count.
    std::vector<std::size_t> hyper_hits;
    std::vector<std::size_t> pred_hits;
    std::size_t pred_total = 0;
    std::array<double, 6> posterior_median{};
};

struct CalibrationResult {
    CoverageReport hyper;
    CoverageReport predictive;
    std::vector<ReplicateRecord> replicates;
};

/// Perturbs base, simulates, fits and scores coverage for each replicate.
/// Replicate r draws everything from Rng(seed, r), so results do not depend on
/// the worker count. Failed replicates are recorded and excluded from totals.
CalibrationResult calibration_study(const CalibrationConfig& config,
                                    const std::function<void(const ReplicateRecord&)>& progress = {});

Hyperparams perturb(Rng& rng, const Hyperparams& base, double location_sd, double scale_sd);

struct BacktestRow {
    std::string entity;
    std::int64_t truth = 0;
    double median = 0.0;
    CredibleInterval interval50{};
    CredibleInterval interval80{};
    bool hit50 = false;
    bool hit80 = false;
};

struct BacktestReport {
    std::vector<BacktestRow> rows;
    std::vector<std::string> dropped;
    int ahead = 1;
    std::size_t hits50 = 0;
    std::size_t hits80 = 0;
    bool heuristic_only = false;
};

struct BacktestConfig {
    std::vector<std::size_t> rows;        // 0-based; empty means all
    std::vector<std::size_t> train_cols;  // 0-based, consecutive and ascending
    std::size_t target_col = 0;
    /// Periods known to be an artificial split of one period; a target inside
    /// marks the report as heuristic only.
    std::vector<std::size_t> split_cols;
    ChainConfig chain;
};

/// Fits the row/column slice (zero rows dropped) and scores the central 50% and
/// 80% predictive intervals against the target column. The target must be one or
/// two periods after the last training column.
BacktestReport backtest(const PovMatrix& m, const BacktestConfig& config);

struct NewEntityEstimate {
    double mean_existing_total = 0.0;
    double typical_total = 70.0;
    double estimate = 0.0;
    std::vector<std::int64_t> historical;
};

/// typical_total minus the posterior mean of the summed next-period predictions.
NewEntityEstimate new_entity_estimate(const PosteriorSamples& samples, double typical_total = 70.0,
                                      std::vector<std::int64_t> historical = {});

/// Entity order for the zero-probability report: descending next-period zero
/// probability, ties kept in data order.
std::vector<std::size_t> zero_probability_order(std::span<const double> p_next);

} // namespace povcast
