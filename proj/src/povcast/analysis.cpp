#include "povcast/analysis.hpp"

#include "povcast/data_model.hpp"
#include "povcast/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace povcast {

namespace {

void check_ahead(int ahead) {
    if (ahead != 1 && ahead != 2) throw DomainError("prediction horizon must be 1 or 2 periods ahead");
}

std::size_t nearest_rank(double p, std::size_t n) {
    // The epsilon absorbs round-off in n * p for exact multiples.
    const double r = std::ceil(p * static_cast<double>(n) - 1e-9);
    return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(n)));
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("credible level must lie in (0, 1)");
}

} // namespace

std::span<const std::int64_t> predictive_draws(const PosteriorSamples& samples, int ahead,
                                               std::size_t entity, std::vector<std::int64_t>& buf) {
    check_ahead(ahead);
    const auto& m = ahead == 1 ? samples.pred_next : samples.pred_next2;
    buf.resize(samples.n);
    for (std::size_t k = 0; k < samples.n; ++k) buf[k] = m(k, entity);
    return buf;
}

PredictiveTable predictive_table(const PosteriorSamples& samples, int ahead) {
    check_ahead(ahead);
    const auto& m = ahead == 1 ? samples.pred_next : samples.pred_next2;
    std::int64_t top = 0;
    for (const auto v : m.values()) top = std::max(top, v);
    PredictiveTable table;
    table.entity_names = samples.entity_names;
    table.n = samples.n;
    table.ahead = ahead;
    table.histogram = Matrix<std::int64_t>(samples.entities(), static_cast<std::size_t>(top) + 1);
    for (std::size_t k = 0; k < samples.n; ++k) {
        for (std::size_t i = 0; i < samples.entities(); ++i) {
            ++table.histogram(i, static_cast<std::size_t>(m(k, i)));
        }
    }
    return table;
}

std::vector<double> zero_probability(const PosteriorSamples& samples, int ahead) {
    const auto table = predictive_table(samples, ahead);
    std::vector<double> out(table.entity_names.size(), 0.0);
    if (table.n == 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>(table.histogram(i, 0)) / static_cast<double>(table.n);
    }
    return out;
}

double nearest_rank_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    return sorted[nearest_rank(p, sorted.size()) - 1];
}

CredibleInterval credible_interval(std::span<const double> draws, double alpha) {
    check_alpha(alpha);
    if (draws.empty()) throw DomainError("credible interval of an empty sample");
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    return {nearest_rank_quantile(sorted, 0.5 * (1.0 - alpha)),
            nearest_rank_quantile(sorted, 0.5 * (1.0 + alpha))};
}

CredibleInterval credible_interval(std::span<const std::int64_t> draws, double alpha) {
    std::vector<double> real(draws.begin(), draws.end());
    return credible_interval(real, alpha);
}

Hyperparams perturb(Rng& rng, const Hyperparams& base, double location_sd, double scale_sd) {
    Hyperparams h = base;
    h.mu_lambda += sample_normal(rng, 0.0, location_sd);
    h.sigma_lambda *= std::exp(sample_normal(rng, 0.0, scale_sd));
    h.mu_tau += sample_normal(rng, 0.0, location_sd);
    h.sigma_tau *= std::exp(sample_normal(rng, 0.0, scale_sd));
    h.mu_beta += sample_normal(rng, 0.0, location_sd);
    h.sigma_beta *= std::exp(sample_normal(rng, 0.0, scale_sd));
    return h;
}

namespace {

ReplicateRecord run_replicate(const CalibrationConfig& config, std::size_t index) {
    ReplicateRecord rec;
    rec.index = index;
    rec.hyper_hits.assign(config.alphas.size(), 0);
    rec.pred_hits.assign(config.alphas.size(), 0);
    try {
        Rng rng(config.seed, index);
        rec.truth = perturb(rng, config.base, config.location_perturbation_sd,
                            config.scale_perturbation_sd);
        const auto data = simulate_dataset(rng, rec.truth, config.entities, config.observed_periods,
                                           config.drop_zero_rows, config.chain.model);
        rec.rows_fitted = data.observed.entities();
        rec.zero_rows = data.observed.zero_rows().size();
        if (data.future.cols() == 0) throw ConfigError("no held-out period inside the horizon");
        const auto samples = run_chain(rng, to_real(data.observed), config.chain);

        const auto truth = rec.truth.to_array();
        std::vector<double> draws(samples.n);
        for (std::size_t p = 0; p < 6; ++p) {
            for (std::size_t k = 0; k < samples.n; ++k) draws[k] = samples.hyper[k].to_array()[p];
            std::vector<double> sorted = draws;
            std::sort(sorted.begin(), sorted.end());
            rec.posterior_median[p] = nearest_rank_quantile(sorted, 0.5);
            for (std::size_t a = 0; a < config.alphas.size(); ++a) {
                if (credible_interval(draws, config.alphas[a]).contains(truth[p])) ++rec.hyper_hits[a];
            }
        }
        std::vector<std::int64_t> buf;
        for (std::size_t i = 0; i < samples.entities(); ++i) {
            const auto pred = predictive_draws(samples, 1, i, buf);
            const auto actual = static_cast<double>(data.future(i, 0));
            for (std::size_t a = 0; a < config.alphas.size(); ++a) {
                if (credible_interval(pred, config.alphas[a]).contains(actual)) ++rec.pred_hits[a];
            }
        }
        rec.pred_total = samples.entities();
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

} // namespace

CalibrationResult calibration_study(const CalibrationConfig& config,
                                    const std::function<void(const ReplicateRecord&)>& progress) {
    if (config.replicates == 0) throw ConfigError("need at least one replicate");
    if (config.alphas.empty()) throw ConfigError("need at least one credible level");
    for (const double a : config.alphas) check_alpha(a);
    config.base.validate();
    config.chain.validate();

    CalibrationResult result;
    result.replicates.resize(config.replicates);
    unsigned workers = config.workers != 0 ? config.workers : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(config.replicates));

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    const auto work = [&] {
        for (std::size_t r = next++; r < config.replicates; r = next++) {
            result.replicates[r] = run_replicate(config, r);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(result.replicates[r]);
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    for (auto* report : {&result.hyper, &result.predictive}) {
        report->alphas = config.alphas;
        report->hits.assign(config.alphas.size(), 0);
        report->totals.assign(config.alphas.size(), 0);
        report->replicates = config.replicates;
    }
    for (const auto& rec : result.replicates) {
        if (!rec.ok) {
            ++result.hyper.failed;
            ++result.predictive.failed;
            continue;
        }
        for (std::size_t a = 0; a < config.alphas.size(); ++a) {
            result.hyper.hits[a] += rec.hyper_hits[a];
            result.hyper.totals[a] += 6;
            result.predictive.hits[a] += rec.pred_hits[a];
            result.predictive.totals[a] += rec.pred_total;
        }
    }
    return result;
}

BacktestReport backtest(const PovMatrix& m, const BacktestConfig& config) {
    if (config.train_cols.empty()) throw ConfigError("no training columns");
    for (std::size_t k = 0; k < config.train_cols.size(); ++k) {
        if (config.train_cols[k] >= m.periods()) throw IndexError("training column out of range");
        if (config.train_cols[k] == config.target_col) {
            throw ConfigError("target column is also a training column");
        }
        if (k > 0 && config.train_cols[k] != config.train_cols[k - 1] + 1) {
            throw ConfigError("training columns must be consecutive and ascending");
        }
    }
    if (config.target_col >= m.periods()) throw IndexError("target column out of range");
    const std::size_t last = config.train_cols.back();
    if (config.target_col <= last || config.target_col > last + 2) {
        throw ConfigError("target column must be one or two periods after the training columns");
    }

    std::vector<std::size_t> rows = config.rows;
    if (rows.empty()) {
        rows.resize(m.entities());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    const auto train = submatrix(m, rows, config.train_cols);
    const std::size_t target[] = {config.target_col};
    const auto truth = submatrix(m, rows, target);

    BacktestReport report;
    report.ahead = static_cast<int>(config.target_col - last);
    for (const auto s : config.split_cols) report.heuristic_only |= s == config.target_col;

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < train.entities(); ++i) {
        if (train.is_zero_row(i)) {
            report.dropped.push_back(train.entity_names[i]);
        } else {
            keep.push_back(i);
        }
    }
    if (keep.size() < 2) throw EmptyError("fewer than 2 nonzero rows in the training slice");
    std::vector<std::size_t> all_cols(train.periods());
    std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});
    const auto fit_data = submatrix(train, keep, all_cols);
    const auto samples = run_chain(to_real(fit_data), config.chain);

    std::vector<std::int64_t> buf;
    for (std::size_t r = 0; r < keep.size(); ++r) {
        BacktestRow row;
        row.entity = fit_data.entity_names[r];
        row.truth = truth.counts(keep[r], 0);
        const auto draws = predictive_draws(samples, report.ahead, r, buf);
        std::vector<double> sorted(draws.begin(), draws.end());
        std::sort(sorted.begin(), sorted.end());
        row.median = nearest_rank_quantile(sorted, 0.5);
        row.interval50 = credible_interval(draws, 0.5);
        row.interval80 = credible_interval(draws, 0.8);
        row.hit50 = row.interval50.contains(static_cast<double>(row.truth));
        row.hit80 = row.interval80.contains(static_cast<double>(row.truth));
        report.hits50 += row.hit50 ? 1 : 0;
        report.hits80 += row.hit80 ? 1 : 0;
        report.rows.push_back(row);
    }
    return report;
}

NewEntityEstimate new_entity_estimate(const PosteriorSamples& samples, double typical_total,
                                      std::vector<std::int64_t> historical) {
    NewEntityEstimate est;
    est.typical_total = typical_total;
    est.historical = std::move(historical);
    double total = 0.0;
    for (const auto v : samples.pred_next.values()) total += static_cast<double>(v);
    est.mean_existing_total = samples.n == 0 ? 0.0 : total / static_cast<double>(samples.n);
    est.estimate = typical_total - est.mean_existing_total;
    return est;
}

std::vector<std::size_t> zero_probability_order(std::span<const double> p_next) {
    std::vector<std::size_t> order(p_next.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_next[a] > p_next[b]; });
    return order;
}

} // namespace povcast
