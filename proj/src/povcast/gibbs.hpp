#pragma once

#include "povcast/matrix.hpp"
#include "povcast/model.hpp"
#include "povcast/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace povcast {

struct ChainConfig {
    std::int64_t iterations = 101000;
    std::int64_t burn_in = 1000;
    std::int64_t thin = 100;
    int grid_points = 512;
    /// Upper end of the log-spaced lambda grid. Unset means exp(mu_hat + 8) where
    /// mu_hat is the initial mean of log(lambda).
    std::optional<double> lambda_grid_max;
    /// The lambda grid covers [log(lambda_grid_max) - span, log(lambda_grid_max)].
    double lambda_grid_log_span = 16.0;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    double prior_loc_sd = 1000.0;
    double prior_scale_shape = 0.001;
    double prior_scale_rate = 0.001;
    /// Metropolis correction for the [0, horizon] truncation in the tau and beta
    /// hyperparameter updates. Off: plain conjugate updates.
    bool truncation_correction = false;
    bool random_start = false;
    ModelConfig model;

    void validate() const;
    std::int64_t sample_count() const { return (iterations - burn_in) / thin; }
};

struct LocationScale {
    double location;
    double scale;
};

struct Interval {
    double lo;
    double hi;
};

/// One Gibbs sweep for a normal population with N(0, prior_loc_sd^2) on the
/// location and InvGamma(prior_scale_shape, prior_scale_rate) on the variance:
/// the variance is drawn given current.location, then the location given the new
/// variance. current.scale is only consulted when a truncation interval is
/// supplied: each step is then followed by an independence Metropolis correction
/// for the truncated-normal normaliser. Without it the values are treated as
/// untruncated observations.
LocationScale update_location_scale(Rng& rng, std::span<const double> values,
                                    LocationScale current, double prior_loc_sd,
                                    double prior_scale_shape, double prior_scale_rate,
                                    std::optional<Interval> truncation = std::nullopt);

enum class Coordinate { Lambda = 0, Tau = 1, Beta = 2 };

struct GridSpec {
    int points = 512;
    double log_lambda_lo = -8.0;
    double log_lambda_hi = 8.0;
    ModelConfig model;
};

struct GridDraw {
    CharacterLatents latents;
    int cell;
};

/// Redraws one coordinate from its full conditional, discretised on the grid:
/// lambda on an even grid in log(lambda), tau and beta on an even grid over
/// [0, horizon]. The chosen cell is jittered uniformly.
GridDraw update_latent_grid_cell(Rng& rng, std::span<const double> row,
                                 const CharacterLatents& current, const Hyperparams& hyper,
                                 Coordinate which, const GridSpec& grid);

/// Unnormalised log conditional at each cell midpoint, in grid order.
std::vector<double> grid_log_density(std::span<const double> row, const CharacterLatents& current,
                                     const Hyperparams& hyper, Coordinate which,
                                     const GridSpec& grid);

CharacterLatents update_latent_grid(Rng& rng, std::span<const double> row,
                                    const CharacterLatents& current, const Hyperparams& hyper,
                                    Coordinate which, const GridSpec& grid);

struct ChainDiagnostics {
    /// Per entity, the fraction of iterations whose grid cell repeated the
    /// previous iteration's, for lambda, tau and beta.
    std::vector<std::array<double, 3>> repeat_fraction;
    std::vector<std::string> warnings;
    double lambda_grid_lo = 0.0;
    double lambda_grid_hi = 0.0;
};

struct PosteriorSamples {
    std::vector<std::string> entity_names;
    std::size_t observed_periods = 0;
    std::size_t n = 0;
    std::vector<Hyperparams> hyper;          // n
    std::vector<CharacterLatents> latents;   // n x entities, row-major
    Matrix<std::int64_t> pred_next;          // n x entities, period d + 1
    Matrix<std::int64_t> pred_next2;         // n x entities, period d + 2
    ChainDiagnostics diagnostics;

    std::size_t entities() const noexcept { return entity_names.size(); }
    const CharacterLatents& latent(std::size_t draw, std::size_t entity) const {
        return latents[draw * entities() + entity];
    }
};

struct ChainState {
    Hyperparams hyper;
    std::vector<CharacterLatents> latents;
};

/// Deterministic starting point derived from each row's nonzero span.
ChainState initial_state(const SmoothedMatrix& data, const ModelConfig& model);

PosteriorSamples run_chain(Rng& rng, const SmoothedMatrix& data, const ChainConfig& config);
PosteriorSamples run_chain(const SmoothedMatrix& data, const ChainConfig& config);

} // namespace povcast
