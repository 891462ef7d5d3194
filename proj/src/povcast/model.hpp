#pragma once

#include "povcast/matrix.hpp"
#include "povcast/rng.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace povcast {

/// Population parameters of the three random effects.
struct Hyperparams {
    double mu_lambda = 0.0;
    double sigma_lambda = 1.0;
    double mu_tau = 0.0;
    double sigma_tau = 1.0;
    double mu_beta = 0.0;
    double sigma_beta = 1.0;

    static constexpr std::array<const char*, 6> names{"mu_lambda", "sigma_lambda", "mu_tau",
                                                      "sigma_tau", "mu_beta",      "sigma_beta"};

    std::array<double, 6> to_array() const {
        return {mu_lambda, sigma_lambda, mu_tau, sigma_tau, mu_beta, sigma_beta};
    }
    static Hyperparams from_array(const std::array<double, 6>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }
    /// Throws DomainError unless every sigma is positive and everything is finite.
    void validate() const;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Per-entity latents. The on-stage window is the open interval
/// (beta - tau, beta + tau).
struct CharacterLatents {
    double lambda = 1.0;
    double tau = 0.0;
    double beta = 0.0;

    double window_start() const { return beta - tau; }
    double window_end() const { return beta + tau; }

    friend bool operator==(const CharacterLatents&, const CharacterLatents&) = default;
};

struct ModelConfig {
    /// Last period index; tau and beta are truncated to [0, horizon].
    int horizon = 7;
    bool strict_window = true;
};

/// Periods are 1-based, matching the column order of the data.
bool in_window(double t, const CharacterLatents& latents, bool strict = true);

/// Log density of observing x at period t: x log(lambda) - lambda - lgamma(x + 1)
/// in-window; 0 for x == 0 and -inf for x > 0 out of window.
double count_log_density(double x, const CharacterLatents& latents, int t,
                         const ModelConfig& config = {});

/// Sum of count_log_density over the row, with row[k] observed at period k + 1.
double row_log_likelihood(std::span<const double> row, const CharacterLatents& latents,
                          const ModelConfig& config = {});

std::int64_t sample_predictive(Rng& rng, const CharacterLatents& latents, int t,
                               const ModelConfig& config = {});

CharacterLatents sample_latents(Rng& rng, const Hyperparams& hyper, const ModelConfig& config = {});

struct SimulatedEntity {
    CharacterLatents latents;
    std::vector<std::int64_t> counts;  // periods 1..horizon
};

SimulatedEntity simulate_entity(Rng& rng, const Hyperparams& hyper, const ModelConfig& config = {});

struct SimulatedDataset {
    PovMatrix observed;                     // first observed_periods columns
    Matrix<std::int64_t> future;            // remaining periods up to the horizon
    std::vector<CharacterLatents> latents;  // aligned with observed rows
    std::size_t simulated = 0;              // entities drawn before any row dropping
};

/// Simulates n_entities independent entities over the full horizon and splits
/// the periods into observed and future blocks. With drop_zero_rows, entities
/// with an all-zero observed history are removed.
SimulatedDataset simulate_dataset(Rng& rng, const Hyperparams& hyper, std::size_t n_entities,
                                  std::size_t observed_periods, bool drop_zero_rows,
                                  const ModelConfig& config = {});

} // namespace povcast
