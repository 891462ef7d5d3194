#include "povcast/gibbs.hpp"

#include "povcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace povcast {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_truncation_mass(double mu, double sigma, const Interval& iv) {
    const double mass = normal_cdf((iv.hi - mu) / sigma) - normal_cdf((iv.lo - mu) / sigma);
    return mass > 0.0 ? std::log(mass) : kNegInf;
}

// Precomputed per-row terms for the windowed Poisson likelihood.
struct RowTerms {
    std::vector<double> x;
    std::vector<double> log_fact;
    explicit RowTerms(std::span<const double> row) : x(row.begin(), row.end()) {
        log_fact.reserve(row.size());
        for (const double v : row) log_fact.push_back(std::lgamma(v + 1.0));
    }

    double log_lik(double lambda, double log_lambda, double tau, double beta, bool strict) const {
        double total = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double dist = std::abs(static_cast<double>(k + 1) - beta);
            const bool in = strict ? dist < tau : dist <= tau;
            if (in) {
                total += x[k] * log_lambda - lambda - log_fact[k];
            } else if (x[k] > 0.0) {
                return kNegInf;
            }
        }
        return total;
    }
};

double half_sq(double v, double mu, double sigma) {
    const double z = (v - mu) / sigma;
    return 0.5 * z * z;
}

struct Grid {
    double lo;
    double hi;
    double width;
};

Grid grid_for(Coordinate which, const GridSpec& spec) {
    if (which == Coordinate::Lambda) {
        return {spec.log_lambda_lo, spec.log_lambda_hi,
                (spec.log_lambda_hi - spec.log_lambda_lo) / spec.points};
    }
    const double top = static_cast<double>(spec.model.horizon);
    return {0.0, top, top / spec.points};
}

// Log conditional density of one coordinate at value v (log(lambda) for Lambda).
class Conditional {
public:
    Conditional(const RowTerms& row, const CharacterLatents& cur, const Hyperparams& hyper,
                Coordinate which, bool strict)
        : row_(row), cur_(cur), hyper_(hyper), which_(which), strict_(strict) {
        if (which == Coordinate::Lambda) {
            // The window is fixed, so the likelihood is S u - k exp(u) up to a constant.
            for (std::size_t k = 0; k < row.x.size(); ++k) {
                const double dist = std::abs(static_cast<double>(k + 1) - cur.beta);
                const bool in = strict ? dist < cur.tau : dist <= cur.tau;
                if (in) {
                    sum_in_ += row.x[k];
                    n_in_ += 1.0;
                } else if (row.x[k] > 0.0) {
                    impossible_ = true;
                }
            }
        } else {
            log_lambda_ = std::log(cur.lambda);
        }
    }

    double operator()(double v) const {
        switch (which_) {
        case Coordinate::Lambda:
            if (impossible_) return kNegInf;
            return sum_in_ * v - n_in_ * std::exp(v) -
                   half_sq(v, hyper_.mu_lambda, hyper_.sigma_lambda);
        case Coordinate::Tau:
            return row_.log_lik(cur_.lambda, log_lambda_, v, cur_.beta, strict_) -
                   half_sq(v, hyper_.mu_tau, hyper_.sigma_tau);
        case Coordinate::Beta:
            return row_.log_lik(cur_.lambda, log_lambda_, cur_.tau, v, strict_) -
                   half_sq(v, hyper_.mu_beta, hyper_.sigma_beta);
        }
        return kNegInf;
    }

private:
    const RowTerms& row_;
    const CharacterLatents& cur_;
    const Hyperparams& hyper_;
    Coordinate which_;
    bool strict_;
    double sum_in_ = 0.0;
    double n_in_ = 0.0;
    bool impossible_ = false;
    double log_lambda_ = 0.0;
};

// Scratch buffers reused across grid updates within one chain.
struct GridWorkspace {
    std::vector<double> log_w;
    std::vector<double> weights;
    std::vector<double> exp_u;  // exp of the lambda grid midpoints
    std::vector<std::size_t> order;
};

// Log conditional at every midpoint of the grid. The tau and beta likelihoods are
// step functions of the coordinate, so they are swept in one pass over the
// sorted window boundaries instead of being re-evaluated per point.
void fill_log_weights(const RowTerms& row, const CharacterLatents& cur, const Hyperparams& hyper,
                      Coordinate which, const GridSpec& spec, const Grid& g, GridWorkspace& ws) {
    const auto points = static_cast<std::size_t>(spec.points);
    const bool strict = spec.model.strict_window;
    const std::size_t d = row.x.size();
    auto& lw = ws.log_w;
    lw.resize(points);

    if (which == Coordinate::Lambda) {
        if (ws.exp_u.size() != points) {
            ws.exp_u.resize(points);
            for (std::size_t k = 0; k < points; ++k) {
                ws.exp_u[k] = std::exp(g.lo + (static_cast<double>(k) + 0.5) * g.width);
            }
        }
        double sum_in = 0.0, n_in = 0.0;
        bool impossible = false;
        for (std::size_t k = 0; k < d; ++k) {
            if (in_window(static_cast<double>(k + 1), cur, strict)) {
                sum_in += row.x[k];
                n_in += 1.0;
            } else if (row.x[k] > 0.0) {
                impossible = true;
            }
        }
        const double inv = 1.0 / hyper.sigma_lambda;
        for (std::size_t k = 0; k < points; ++k) {
            const double u = g.lo + (static_cast<double>(k) + 0.5) * g.width;
            const double z = (u - hyper.mu_lambda) * inv;
            lw[k] = impossible ? kNegInf : sum_in * u - n_in * ws.exp_u[k] - 0.5 * z * z;
        }
        return;
    }

    const double lambda = cur.lambda;
    const double log_lambda = std::log(lambda);
    const auto term = [&](std::size_t k) { return row.x[k] * log_lambda - lambda - row.log_fact[k]; };
    const auto admits = [strict](double boundary, double v) {
        return strict ? boundary < v : boundary <= v;
    };
    const auto leaves = [strict](double boundary, double v) {
        return strict ? boundary <= v : boundary < v;
    };
    std::size_t positives = 0;
    for (std::size_t k = 0; k < d; ++k) positives += row.x[k] > 0.0 ? 1 : 0;

    if (which == Coordinate::Tau) {
        // Period t is inside once tau exceeds |t - beta|.
        auto& order = ws.order;
        order.resize(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const auto dist = [&](std::size_t k) { return std::abs(static_cast<double>(k + 1) - cur.beta); };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
        double sum_in = 0.0;
        std::size_t out_pos = positives;
        std::size_t next = 0;
        const double inv = 1.0 / hyper.sigma_tau;
        for (std::size_t k = 0; k < points; ++k) {
            const double v = g.lo + (static_cast<double>(k) + 0.5) * g.width;
            while (next < d && admits(dist(order[next]), v)) {
                sum_in += term(order[next]);
                if (row.x[order[next]] > 0.0) --out_pos;
                ++next;
            }
            const double z = (v - hyper.mu_tau) * inv;
            lw[k] = out_pos > 0 ? kNegInf : sum_in - 0.5 * z * z;
        }
        return;
    }

    // Beta: period t is inside on (t - tau, t + tau); both boundaries increase with t.
    double sum_in = 0.0;
    std::size_t out_pos = positives;
    std::size_t enter = 0, exit = 0;
    const double inv = 1.0 / hyper.sigma_beta;
    for (std::size_t k = 0; k < points; ++k) {
        const double v = g.lo + (static_cast<double>(k) + 0.5) * g.width;
        while (enter < d && admits(static_cast<double>(enter + 1) - cur.tau, v)) {
            sum_in += term(enter);
            if (row.x[enter] > 0.0) --out_pos;
            ++enter;
        }
        while (exit < enter && leaves(static_cast<double>(exit + 1) + cur.tau, v)) {
            sum_in -= term(exit);
            if (row.x[exit] > 0.0) ++out_pos;
            ++exit;
        }
        const double z = (v - hyper.mu_beta) * inv;
        lw[k] = out_pos > 0 ? kNegInf : sum_in - 0.5 * z * z;
    }
}

// Values of tau (given beta) or beta (given tau) that keep every positive count
// inside the window form one interval; lambda is unconstrained.
Interval feasible_interval(const RowTerms& row, const CharacterLatents& cur, Coordinate which,
                           const Grid& g) {
    Interval iv{g.lo, g.hi};
    double first = 0.0, last = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < row.x.size(); ++k) {
        if (row.x[k] <= 0.0) continue;
        const double t = static_cast<double>(k + 1);
        if (!any) first = t;
        last = t;
        any = true;
    }
    if (!any || which == Coordinate::Lambda) return iv;
    if (which == Coordinate::Tau) {
        iv.lo = std::max(iv.lo, std::max(last - cur.beta, cur.beta - first));
    } else {
        iv.lo = std::max(iv.lo, last - cur.tau);
        iv.hi = std::min(iv.hi, first + cur.tau);
    }
    return iv;
}

GridDraw draw_on_grid(Rng& rng, const RowTerms& row, const CharacterLatents& current,
                      const Hyperparams& hyper, Coordinate which, const GridSpec& spec,
                      GridWorkspace& ws) {
    const Grid g = grid_for(which, spec);
    const Interval feasible = feasible_interval(row, current, which, g);
    if (!(feasible.hi > feasible.lo)) {
        throw DegenerateError("every grid cell has zero conditional density");
    }
    fill_log_weights(row, current, hyper, which, spec, g, ws);
    const double top = *std::max_element(ws.log_w.begin(), ws.log_w.end());

    std::size_t cell = 0;
    Interval range = feasible;
    if (top == kNegInf) {
        // The feasible set is narrower than a cell and holds no midpoint; the
        // conditional is then close to flat over it.
        if (which == Coordinate::Lambda) {
            throw DegenerateError("every grid cell has zero conditional density");
        }
    } else {
        ws.weights.resize(ws.log_w.size());
        double total = 0.0;
        for (std::size_t k = 0; k < ws.log_w.size(); ++k) {
            // exp(-37) is below half an ulp of the total, which is at least 1.
            const double rel = ws.log_w[k] - top;
            ws.weights[k] = rel < -37.0 ? 0.0 : std::exp(rel);
            total += ws.weights[k];
        }
        cell = sample_categorical(rng, ws.weights, total);
        const double cell_lo = g.lo + static_cast<double>(cell) * g.width;
        // A window boundary can split a cell; jitter only over its feasible part.
        range = {std::max(cell_lo, feasible.lo), std::min(cell_lo + g.width, feasible.hi)};
    }

    const Conditional cond(row, current, hyper, which, spec.model.strict_window);
    double value = range.lo + rng.uniform() * (range.hi - range.lo);
    // Rounding can put the draw exactly on an open window boundary.
    for (int attempt = 0; attempt < 16 && cond(value) == kNegInf; ++attempt) {
        value = range.lo + rng.uniform() * (range.hi - range.lo);
    }
    if (cond(value) == kNegInf) {
        throw DegenerateError("no feasible value inside the chosen grid cell");
    }
    if (top == kNegInf) {
        cell = static_cast<std::size_t>(
            std::clamp((value - g.lo) / g.width, 0.0, static_cast<double>(spec.points - 1)));
    }

    CharacterLatents next = current;
    switch (which) {
    case Coordinate::Lambda: next.lambda = std::exp(value); break;
    case Coordinate::Tau: next.tau = value; break;
    case Coordinate::Beta: next.beta = value; break;
    }
    return {next, static_cast<int>(cell)};
}

void check_grid(const GridSpec& spec) {
    if (spec.points < 2) throw ConfigError("grid needs at least 2 points");
    if (!(spec.log_lambda_hi > spec.log_lambda_lo)) throw ConfigError("empty lambda grid");
    if (spec.model.horizon < 1) throw ConfigError("horizon must be at least 1");
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

} // namespace

void ChainConfig::validate() const {
    if (iterations <= 0) throw ConfigError("iterations must be positive");
    if (burn_in < 0) throw ConfigError("burn-in must be non-negative");
    if (thin <= 0) throw ConfigError("thin must be positive");
    if (iterations <= burn_in) throw ConfigError("iterations must exceed burn-in");
    if ((iterations - burn_in) % thin != 0) {
        throw ConfigError("iterations - burn-in (" + std::to_string(iterations - burn_in) +
                          ") is not divisible by thin (" + std::to_string(thin) + ")");
    }
    if (grid_points < 2) throw ConfigError("grid points must be at least 2");
    if (lambda_grid_max && !(*lambda_grid_max > 0.0 && std::isfinite(*lambda_grid_max))) {
        throw ConfigError("lambda grid max must be positive");
    }
    if (!(lambda_grid_log_span > 0.0)) throw ConfigError("lambda grid span must be positive");
    if (!(prior_loc_sd > 0.0) || !(prior_scale_shape > 0.0) || !(prior_scale_rate > 0.0)) {
        throw ConfigError("prior parameters must be positive");
    }
    if (model.horizon < 1) throw ConfigError("horizon must be at least 1");
}

LocationScale update_location_scale(Rng& rng, std::span<const double> values,
                                    LocationScale current, double prior_loc_sd,
                                    double prior_scale_shape, double prior_scale_rate,
                                    std::optional<Interval> truncation) {
    if (values.size() < 2) throw DegenerateError("location-scale update needs at least 2 values");
    const double n = static_cast<double>(values.size());
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);

    double ss = 0.0;
    for (const double v : values) ss += (v - current.location) * (v - current.location);
    const double var = sample_invgamma(rng, prior_scale_shape + 0.5 * n, prior_scale_rate + 0.5 * ss);
    double scale = std::sqrt(var);
    // The truncated likelihood carries an extra mass(mu, sigma)^-n factor; with the
    // conjugate draw as an independence proposal the acceptance ratio is just the
    // old/new ratio of that factor.
    if (truncation) {
        const double log_accept =
            n * (log_truncation_mass(current.location, current.scale, *truncation) -
                 log_truncation_mass(current.location, scale, *truncation));
        if (!(std::log(rng.uniform()) < log_accept)) scale = current.scale;
    }

    const double prior_prec = 1.0 / (prior_loc_sd * prior_loc_sd);
    const double prec = n / (scale * scale) + prior_prec;
    double location = sample_normal(rng, (sum / (scale * scale)) / prec, 1.0 / std::sqrt(prec));
    if (truncation) {
        const double log_accept = n * (log_truncation_mass(current.location, scale, *truncation) -
                                       log_truncation_mass(location, scale, *truncation));
        if (!(std::log(rng.uniform()) < log_accept)) location = current.location;
    }
    return {location, scale};
}

GridDraw update_latent_grid_cell(Rng& rng, std::span<const double> row,
                                 const CharacterLatents& current, const Hyperparams& hyper,
                                 Coordinate which, const GridSpec& grid) {
    check_grid(grid);
    hyper.validate();
    const RowTerms terms(row);
    GridWorkspace ws;
    return draw_on_grid(rng, terms, current, hyper, which, grid, ws);
}

std::vector<double> grid_log_density(std::span<const double> row, const CharacterLatents& current,
                                     const Hyperparams& hyper, Coordinate which,
                                     const GridSpec& grid) {
    check_grid(grid);
    const RowTerms terms(row);
    GridWorkspace ws;
    fill_log_weights(terms, current, hyper, which, grid, grid_for(which, grid), ws);
    return ws.log_w;
}

CharacterLatents update_latent_grid(Rng& rng, std::span<const double> row,
                                    const CharacterLatents& current, const Hyperparams& hyper,
                                    Coordinate which, const GridSpec& grid) {
    return update_latent_grid_cell(rng, row, current, hyper, which, grid).latents;
}

ChainState initial_state(const SmoothedMatrix& data, const ModelConfig& model) {
    const double top = static_cast<double>(model.horizon);
    ChainState state;
    std::vector<double> log_lambda, taus, betas;
    for (std::size_t i = 0; i < data.entities(); ++i) {
        const auto r = data.counts.row(i);
        CharacterLatents lat{1.0, 0.5, 0.5 * top};
        double sum = 0.0;
        int count = 0;
        int first = -1, last = -1;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r[k] > 0.0) {
                sum += r[k];
                ++count;
                if (first < 0) first = static_cast<int>(k + 1);
                last = static_cast<int>(k + 1);
            }
        }
        if (count > 0) {
            lat.lambda = sum / count;
            lat.beta = std::clamp(0.5 * (first + last), 0.0, top);
            lat.tau = std::clamp(0.5 * (last - first) + 1.0, 0.0, top);
        }
        state.latents.push_back(lat);
        log_lambda.push_back(std::log(lat.lambda));
        taus.push_back(lat.tau);
        betas.push_back(lat.beta);
    }
    const auto floor_sd = [](double sd) { return std::max(sd, 0.1); };
    state.hyper = {mean_of(log_lambda), floor_sd(sd_of(log_lambda)), mean_of(taus),
                   floor_sd(sd_of(taus)),  mean_of(betas),           floor_sd(sd_of(betas))};
    return state;
}

PosteriorSamples run_chain(Rng& rng, const SmoothedMatrix& data, const ChainConfig& config) {
    config.validate();
    const std::size_t n_ent = data.entities();
    const std::size_t d = data.periods();
    if (n_ent < 2) throw EmptyError("need at least 2 entities to fit the population");
    if (d == 0) throw EmptyError("no observed periods");
    if (d > static_cast<std::size_t>(config.model.horizon)) {
        throw ConfigError("observed periods exceed the model horizon");
    }
    for (const double v : data.counts.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("counts must be finite and >= 0");
    }

    const double top = static_cast<double>(config.model.horizon);
    ChainState state = initial_state(data, config.model);
    if (config.random_start) {
        for (auto& lat : state.latents) {
            lat.lambda *= std::exp(sample_normal(rng, 0.0, 0.5));
            // Widening the window never pushes a positive count out of it.
            lat.tau = std::min(top, lat.tau + rng.uniform());
        }
        state.hyper.mu_lambda += sample_normal(rng, 0.0, 1.0);
        state.hyper.mu_tau += sample_normal(rng, 0.0, 1.0);
        state.hyper.mu_beta += sample_normal(rng, 0.0, 1.0);
        state.hyper.sigma_lambda *= std::exp(sample_normal(rng, 0.0, 0.5));
        state.hyper.sigma_tau *= std::exp(sample_normal(rng, 0.0, 0.5));
        state.hyper.sigma_beta *= std::exp(sample_normal(rng, 0.0, 0.5));
    }

    GridSpec grid;
    grid.points = config.grid_points;
    grid.model = config.model;
    grid.log_lambda_hi = config.lambda_grid_max ? std::log(*config.lambda_grid_max)
                                                : initial_state(data, config.model).hyper.mu_lambda + 8.0;
    grid.log_lambda_lo = grid.log_lambda_hi - config.lambda_grid_log_span;
    for (const auto& lat : state.latents) {
        const double u = std::log(lat.lambda);
        if (u < grid.log_lambda_lo || u > grid.log_lambda_hi) {
            throw ConfigError("initial lambda lies outside the lambda grid");
        }
    }

    std::vector<RowTerms> rows;
    rows.reserve(n_ent);
    for (std::size_t i = 0; i < n_ent; ++i) rows.emplace_back(data.counts.row(i));

    PosteriorSamples out;
    out.entity_names = data.entity_names;
    out.observed_periods = d;
    out.n = static_cast<std::size_t>(config.sample_count());
    out.hyper.reserve(out.n);
    out.latents.reserve(out.n * n_ent);
    out.pred_next = Matrix<std::int64_t>(out.n, n_ent);
    out.pred_next2 = Matrix<std::int64_t>(out.n, n_ent);
    out.diagnostics.lambda_grid_lo = std::exp(grid.log_lambda_lo);
    out.diagnostics.lambda_grid_hi = std::exp(grid.log_lambda_hi);

    std::vector<std::array<int, 3>> last_cell(n_ent, {-1, -1, -1});
    std::vector<std::array<std::int64_t, 3>> repeats(n_ent, {0, 0, 0});
    GridWorkspace ws;
    std::vector<double> values(n_ent);
    const std::optional<Interval> trunc =
        config.truncation_correction ? std::optional<Interval>(Interval{0.0, top}) : std::nullopt;
    const int next_t = static_cast<int>(d) + 1;
    std::size_t kept = 0;

    for (std::int64_t iter = 1; iter <= config.iterations; ++iter) {
        auto& h = state.hyper;
        for (std::size_t i = 0; i < n_ent; ++i) values[i] = std::log(state.latents[i].lambda);
        auto ls = update_location_scale(rng, values, {h.mu_lambda, h.sigma_lambda}, config.prior_loc_sd,
                                        config.prior_scale_shape, config.prior_scale_rate);
        h.mu_lambda = ls.location;
        h.sigma_lambda = ls.scale;
        for (std::size_t i = 0; i < n_ent; ++i) values[i] = state.latents[i].tau;
        ls = update_location_scale(rng, values, {h.mu_tau, h.sigma_tau}, config.prior_loc_sd,
                                   config.prior_scale_shape, config.prior_scale_rate, trunc);
        h.mu_tau = ls.location;
        h.sigma_tau = ls.scale;
        for (std::size_t i = 0; i < n_ent; ++i) values[i] = state.latents[i].beta;
        ls = update_location_scale(rng, values, {h.mu_beta, h.sigma_beta}, config.prior_loc_sd,
                                   config.prior_scale_shape, config.prior_scale_rate, trunc);
        h.mu_beta = ls.location;
        h.sigma_beta = ls.scale;

        for (std::size_t i = 0; i < n_ent; ++i) {
            for (const auto which : {Coordinate::Lambda, Coordinate::Tau, Coordinate::Beta}) {
                const auto c = static_cast<std::size_t>(which);
                const auto draw = draw_on_grid(rng, rows[i], state.latents[i], h, which, grid, ws);
                state.latents[i] = draw.latents;
                if (draw.cell == last_cell[i][c]) ++repeats[i][c];
                last_cell[i][c] = draw.cell;
            }
        }

        const bool retain = iter > config.burn_in && (iter - config.burn_in) % config.thin == 0;
        for (std::size_t i = 0; i < n_ent; ++i) {
            const auto a = sample_predictive(rng, state.latents[i], next_t, config.model);
            const auto b = sample_predictive(rng, state.latents[i], next_t + 1, config.model);
            if (retain) {
                out.pred_next(kept, i) = a;
                out.pred_next2(kept, i) = b;
            }
        }
        if (retain) {
            out.hyper.push_back(h);
            out.latents.insert(out.latents.end(), state.latents.begin(), state.latents.end());
            ++kept;
        }
    }

    const auto iters = static_cast<double>(config.iterations);
    static constexpr std::array<const char*, 3> coord_names{"lambda", "tau", "beta"};
    for (std::size_t i = 0; i < n_ent; ++i) {
        std::array<double, 3> frac{};
        for (std::size_t c = 0; c < 3; ++c) {
            frac[c] = static_cast<double>(repeats[i][c]) / iters;
            if (frac[c] > 0.99) {
                out.diagnostics.warnings.push_back("entity '" + data.entity_names[i] + "': " +
                                                   coord_names[c] + " stayed in one grid cell for " +
                                                   std::to_string(frac[c] * 100.0) + "% of iterations");
            }
        }
        out.diagnostics.repeat_fraction.push_back(frac);
    }
    return out;
}

PosteriorSamples run_chain(const SmoothedMatrix& data, const ChainConfig& config) {
    Rng rng(config.seed, config.stream);
    return run_chain(rng, data, config);
}

} // namespace povcast
