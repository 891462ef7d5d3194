#include "povcast/model.hpp"

#include "povcast/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace povcast {

void Hyperparams::validate() const {
    const auto v = to_array();
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) throw DomainError(std::string(names[k]) + " is not finite");
    }
    if (!(sigma_lambda > 0.0) || !(sigma_tau > 0.0) || !(sigma_beta > 0.0)) {
        throw DomainError("hyperparameter scales must be positive");
    }
}

bool in_window(double t, const CharacterLatents& latents, bool strict) {
    const double dist = std::abs(t - latents.beta);
    return strict ? dist < latents.tau : dist <= latents.tau;
}

double count_log_density(double x, const CharacterLatents& latents, int t,
                         const ModelConfig& config) {
    if (in_window(t, latents, config.strict_window)) {
        return x * std::log(latents.lambda) - latents.lambda - std::lgamma(x + 1.0);
    }
    return x == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
}

double row_log_likelihood(std::span<const double> row, const CharacterLatents& latents,
                          const ModelConfig& config) {
    double total = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        total += count_log_density(row[k], latents, static_cast<int>(k + 1), config);
    }
    return total;
}

std::int64_t sample_predictive(Rng& rng, const CharacterLatents& latents, int t,
                               const ModelConfig& config) {
    if (!in_window(t, latents, config.strict_window)) return 0;
    return sample_poisson(rng, latents.lambda);
}

CharacterLatents sample_latents(Rng& rng, const Hyperparams& hyper, const ModelConfig& config) {
    hyper.validate();
    const double top = static_cast<double>(config.horizon);
    CharacterLatents latents;
    latents.lambda = std::exp(sample_normal(rng, hyper.mu_lambda, hyper.sigma_lambda));
    latents.tau = sample_truncnorm(rng, hyper.mu_tau, hyper.sigma_tau, 0.0, top);
    latents.beta = sample_truncnorm(rng, hyper.mu_beta, hyper.sigma_beta, 0.0, top);
    return latents;
}

SimulatedEntity simulate_entity(Rng& rng, const Hyperparams& hyper, const ModelConfig& config) {
    if (config.horizon < 1) throw ConfigError("horizon must be at least 1");
    SimulatedEntity entity;
    entity.latents = sample_latents(rng, hyper, config);
    entity.counts.reserve(static_cast<std::size_t>(config.horizon));
    for (int t = 1; t <= config.horizon; ++t) {
        entity.counts.push_back(sample_predictive(rng, entity.latents, t, config));
    }
    return entity;
}

SimulatedDataset simulate_dataset(Rng& rng, const Hyperparams& hyper, std::size_t n_entities,
                                  std::size_t observed_periods, bool drop_zero_rows,
                                  const ModelConfig& config) {
    if (n_entities == 0) throw ConfigError("need at least one entity");
    const auto horizon = static_cast<std::size_t>(config.horizon);
    if (observed_periods == 0 || observed_periods > horizon) {
        throw ConfigError("observed periods must lie in [1, horizon]");
    }
    std::vector<SimulatedEntity> kept;
    for (std::size_t i = 0; i < n_entities; ++i) {
        auto entity = simulate_entity(rng, hyper, config);
        bool zero = true;
        for (std::size_t j = 0; j < observed_periods; ++j) zero = zero && entity.counts[j] == 0;
        if (drop_zero_rows && zero) continue;
        kept.push_back(std::move(entity));
    }

    SimulatedDataset out;
    out.simulated = n_entities;
    out.observed.counts = Matrix<std::int64_t>(kept.size(), observed_periods);
    out.future = Matrix<std::int64_t>(kept.size(), horizon - observed_periods);
    for (std::size_t j = 0; j < observed_periods; ++j) {
        out.observed.period_labels.push_back("t" + std::to_string(j + 1));
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.observed.entity_names.push_back("e" + std::to_string(i + 1));
        for (std::size_t j = 0; j < horizon; ++j) {
            if (j < observed_periods) {
                out.observed.counts(i, j) = kept[i].counts[j];
            } else {
                out.future(i, j - observed_periods) = kept[i].counts[j];
            }
        }
        out.latents.push_back(kept[i].latents);
    }
    return out;
}

} // namespace povcast
