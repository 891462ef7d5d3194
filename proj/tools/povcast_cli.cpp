#include "povcast.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using nlohmann::json;

namespace {

bool use_color() {
    if (const char* force = std::getenv("POVCAST_COLOR")) {
        const std::string v = force;
        if (v == "always") return true;
        if (v == "never") return false;
    }
    if (std::getenv("NO_COLOR") != nullptr) return false;
    return isatty(fileno(stderr)) != 0;
}

int fail(povcast_status status, const std::string& message) {
    const bool color = use_color();
    std::cerr << (color ? "\033[31m" : "") << "povcast: " << povcast_status_name(status) << " error"
              << (color ? "\033[0m" : "") << ": " << message << "\n";
    return povcast_exit_code(status);
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

struct ChainFlags {
    std::optional<std::int64_t> iterations, burn_in, thin;
    std::optional<int> grid;
    std::string seed;
    bool truncation_correction = false;

    void add(CLI::App* app) {
        app->add_option("--iterations", iterations, "total Gibbs iterations");
        app->add_option("--burn-in", burn_in, "iterations discarded before sampling");
        app->add_option("--thin", thin, "keep every k-th iteration after burn-in");
        app->add_option("--grid", grid, "grid points per latent update");
        app->add_option("--seed", seed, "integer seed, or 'random'");
        app->add_flag("--truncation-correction", truncation_correction,
                      "Metropolis correction for truncated tau/beta populations");
    }

    void fill(json& j) const {
        if (iterations) j["iterations"] = *iterations;
        if (burn_in) j["burn_in"] = *burn_in;
        if (thin) j["thin"] = *thin;
        if (grid) j["grid"] = *grid;
        if (truncation_correction) j["truncation_correction"] = true;
        if (seed.empty()) return;
        if (seed == "random") {
            j["seed"] = "random";
            return;
        }
        if (seed.find_first_not_of("0123456789") != std::string::npos || seed.size() > 20) {
            throw CLI::ValidationError("--seed", "must be a non-negative integer or 'random'");
        }
        try {
            j["seed"] = static_cast<std::uint64_t>(std::stoull(seed));
        } catch (const std::out_of_range&) {
            throw CLI::ValidationError("--seed", "out of range");
        }
    }
};

std::vector<std::size_t> index_list(const std::string& flag, const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto dash = token.find('-');
        const auto parse = [&](const std::string& s) -> std::size_t {
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) {
                throw CLI::ValidationError(flag, "expected 1-based indices like 1-9 or 1,3,5");
            }
            return std::stoul(s);
        };
        if (dash == std::string::npos) {
            out.push_back(parse(token));
            continue;
        }
        const auto a = parse(token.substr(0, dash));
        const auto b = parse(token.substr(dash + 1));
        if (b < a) throw CLI::ValidationError(flag, "descending range");
        for (auto v = a; v <= b; ++v) out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty index list");
    return out;
}

int run(const std::string& command, const json& options, const std::string& out_dir, bool verbose) {
    char* summary = nullptr;
    const auto status = povcast_run(command.c_str(), options.dump().c_str(), out_dir.c_str(),
                                     verbose ? log_line : nullptr, nullptr, &summary);
    if (status != POVCAST_OK) return fail(status, povcast_last_error());
    const auto j = json::parse(summary);
    povcast_string_free(summary);
    for (const auto& note : j["notes"]) std::cerr << note.get<std::string>() << "\n";
    std::cout << command << ": wrote " << j["artifacts"].size() << " artifacts and " << "manifest.json to "
              << out_dir << " (seed " << j["seed"].get<std::uint64_t>() << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian forecasts of per-period counts for a fixed cast of entities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(povcast_version()));
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "progress on stderr");

    std::string data, out, samples, manifest;

    auto* fit = app.add_subcommand("fit", "fit the model to a count matrix");
    std::vector<std::size_t> smooth_cols;
    std::vector<double> weights;
    bool random_start = false;
    ChainFlags fit_chain;
    fit->add_option("data", data, "count matrix CSV")->required();
    fit->add_option("out", out, "output directory")->required();
    fit->add_option("--smooth", smooth_cols, "two 1-based columns to smooth")->expected(2);
    fit->add_option("--weights", weights, "smoothing weights (default: column sums)")->expected(2);
    fit->add_flag("--random-start", random_start, "perturb the starting point");
    fit_chain.add(fit);

    auto* report = app.add_subcommand("report", "tables and charts from a fit directory");
    std::optional<double> typical;
    bool no_svg = false;
    report->add_option("samples", samples, "fit output directory")->required();
    report->add_option("out", out, "output directory")->required();
    report->add_option("--typical-total", typical, "typical total for the new-entity estimate");
    report->add_flag("--no-svg", no_svg, "skip charts");

    auto* calibrate = app.add_subcommand("calibrate", "coverage study on simulated data");
    std::optional<std::size_t> replicates, entities, observed;
    std::optional<unsigned> workers;
    std::string base;
    bool drop_zero = false;
    ChainFlags cal_chain;
    calibrate->add_option("out", out, "output directory")->required();
    calibrate->add_option("--replicates", replicates, "number of simulated data sets (default 100)");
    calibrate->add_option("--base", base, "six comma-separated hyperparameters");
    calibrate->add_flag("--drop-zero-rows", drop_zero, "remove all-zero rows before fitting");
    calibrate->add_option("--entities", entities, "entities per data set (default 24)");
    calibrate->add_option("--observed-periods", observed, "periods fitted (default 5)");
    calibrate->add_option("--workers", workers, "worker threads (default: all cores)");
    cal_chain.add(calibrate);

    auto* validate = app.add_subcommand("validate", "backtest on a slice of a count matrix");
    std::string train_rows, train_cols, split;
    std::size_t target = 0;
    ChainFlags val_chain;
    validate->add_option("data", data, "count matrix CSV")->required();
    validate->add_option("out", out, "output directory")->required();
    validate->add_option("--train-rows", train_rows, "1-based rows, e.g. 1-9 (default all)");
    validate->add_option("--train-cols", train_cols, "1-based consecutive columns, e.g. 1-2")->required();
    validate->add_option("--target-col", target, "1-based column to predict")->required();
    validate->add_option("--split", split, "columns produced by splitting one period, e.g. 4,5");
    val_chain.add(validate);

    auto* replay = app.add_subcommand("replay", "re-run a manifest and compare outputs");
    replay->add_option("manifest", manifest, "manifest.json or its directory")->required();
    replay->add_option("out", out, "output directory")->required();

    json options = json::object();
    try {
        app.parse(argc, argv);
        if (*fit) {
            options["data"] = data;
            if (!smooth_cols.empty()) options["smooth"] = smooth_cols;
            if (!weights.empty()) options["weights"] = weights;
            if (random_start) options["random_start"] = true;
            fit_chain.fill(options);
        } else if (*report) {
            options["samples"] = samples;
            if (typical) options["typical_total"] = *typical;
            if (no_svg) options["svg"] = false;
        } else if (*calibrate) {
            if (replicates) options["replicates"] = *replicates;
            if (!base.empty()) {
                std::vector<double> b;
                std::stringstream ss(base);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    try {
                        std::size_t used = 0;
                        b.push_back(std::stod(tok, &used));
                        if (used != tok.size()) throw std::invalid_argument(tok);
                    } catch (const std::exception&) {
                        throw CLI::ValidationError("--base", "not a number: '" + tok + "'");
                    }
                }
                if (b.size() != 6) throw CLI::ValidationError("--base", "expected six values");
                options["base"] = b;
            }
            if (drop_zero) options["drop_zero_rows"] = true;
            if (entities) options["entities"] = *entities;
            if (observed) options["observed_periods"] = *observed;
            if (workers) options["workers"] = *workers;
            cal_chain.fill(options);
        } else if (*validate) {
            options["data"] = data;
            if (!train_rows.empty()) options["train_rows"] = index_list("--train-rows", train_rows);
            options["train_cols"] = index_list("--train-cols", train_cols);
            options["target_col"] = target;
            if (!split.empty()) options["split"] = index_list("--split", split);
            val_chain.fill(options);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : povcast_exit_code(POVCAST_ERR_CONFIG);
    }

    if (*replay) {
        char* summary = nullptr;
        const auto status = povcast_replay(manifest.c_str(), out.c_str(), verbose ? log_line : nullptr,
                                           nullptr, &summary);
        if (summary != nullptr) {
            const auto j = json::parse(summary);
            povcast_string_free(summary);
            std::cout << "replay " << j["command"].get<std::string>() << ": " << j["matched"].size()
                      << " artifacts identical, " << j["mismatched"].size() << " differ\n";
            for (const auto& m : j["mismatched"]) std::cout << "  differs: " << m.get<std::string>() << "\n";
        }
        if (status != POVCAST_OK) return fail(status, povcast_last_error());
        return 0;
    }

    const std::string command = *fit ? "fit" : *report ? "report" : *calibrate ? "calibrate" : "validate";
    return run(command, options, out, verbose || *calibrate);
}
