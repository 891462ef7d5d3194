#include "povcast/commands.hpp"

#include "povcast/bundle.hpp"
#include "povcast/data_model.hpp"
#include "povcast/error.hpp"
#include "povcast/numfmt.hpp"
#include "povcast/svg.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

namespace povcast {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Options {
public:
    explicit Options(const json& j) : j_(j.is_null() ? json::object() : j) {
        if (!j_.is_object()) throw ConfigError("options must be a JSON object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return as<T>(key);
    }

    template <class T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigError("missing option '" + key + "'");
        return as<T>(key);
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) throw ConfigError("unknown option '" + key + "'");
        }
    }

private:
    template <class T>
    T as(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("option '" + key + "' has the wrong type");
        }
    }

    json j_;
    std::set<std::string> used_;
};

std::uint64_t resolve_seed(Options& opts) {
    if (!opts.has("seed")) return kDefaultSeed;
    const json& v = opts.raw("seed");
    if (v.is_string()) {
        if (v.get<std::string>() != "random") throw ConfigError("seed must be an integer or \"random\"");
        std::random_device rd;
        return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    if (!v.is_number_unsigned()) {
        throw ConfigError("seed must be a non-negative integer or \"random\"");
    }
    return v.get<std::uint64_t>();
}

// Reads the chain options into cfg and echoes the resolved values into out.
void read_chain(Options& opts, ChainConfig& cfg, json& out) {
    cfg.iterations = opts.get<std::int64_t>("iterations", cfg.iterations);
    cfg.burn_in = opts.get<std::int64_t>("burn_in", cfg.burn_in);
    cfg.thin = opts.get<std::int64_t>("thin", cfg.thin);
    cfg.grid_points = opts.get<int>("grid", cfg.grid_points);
    cfg.truncation_correction = opts.get<bool>("truncation_correction", cfg.truncation_correction);
    cfg.seed = resolve_seed(opts);
    cfg.validate();
    out["iterations"] = cfg.iterations;
    out["burn_in"] = cfg.burn_in;
    out["thin"] = cfg.thin;
    out["grid"] = cfg.grid_points;
    out["truncation_correction"] = cfg.truncation_correction;
    out["seed"] = cfg.seed;
}

std::string absolute_string(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

std::vector<std::size_t> to_zero_based(const std::vector<std::size_t>& one_based, const char* what) {
    std::vector<std::size_t> out;
    out.reserve(one_based.size());
    for (const auto v : one_based) {
        if (v == 0) throw ConfigError(std::string(what) + " indices are 1-based");
        out.push_back(v - 1);
    }
    return out;
}

std::string clean_field(std::string s) {
    for (auto& c : s) {
        if (c == ',' || c == '"') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

class RunRecorder {
public:
    RunRecorder(std::string command, fs::path out_dir)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        result_.manifest.command = std::move(command);
        std::error_code ec;
        fs::create_directories(out_dir_, ec);
        if (ec) throw IoError("cannot create " + out_dir_.string() + ": " + ec.message());
    }

    RunManifest& manifest() { return result_.manifest; }
    void note(const std::string& s) { result_.notes.push_back(s); }

    void write(const std::string& name, const std::string& text) {
        write_text(out_dir_ / name, text);
        result_.manifest.artifacts.push_back({name, sha256_hex(text)});
    }

    void adopt(const std::vector<std::string>& names) {
        for (const auto& name : names) {
            result_.manifest.artifacts.push_back({name, sha256_file(out_dir_ / name)});
        }
    }

    CommandResult finish() {
        auto& m = result_.manifest;
        m.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        m.created_utc = utc_timestamp();
        write_manifest(m, out_dir_);
        return result_;
    }

private:
    fs::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    CommandResult result_;
};

std::string predictive_csv(const PredictiveTable& table) {
    std::string out = "entity";
    for (std::size_t c = 0; c <= table.max_count(); ++c) out += "," + std::to_string(c);
    out += "\n";
    for (std::size_t i = 0; i < table.entity_names.size(); ++i) {
        out += table.entity_names[i];
        for (std::size_t c = 0; c < table.histogram.cols(); ++c) {
            out += "," + std::to_string(table.histogram(i, c));
        }
        out += "\n";
    }
    return out;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments moments(std::span<const std::int64_t> draws) {
    Moments m;
    if (draws.empty()) return m;
    for (const auto v : draws) m.mean += static_cast<double>(v);
    m.mean /= static_cast<double>(draws.size());
    for (const auto v : draws) {
        const double d = static_cast<double>(v) - m.mean;
        m.variance += d * d;
    }
    m.variance /= static_cast<double>(draws.size());
    return m;
}

std::string coverage_csv(const CoverageReport& rep) {
    std::string out = "alpha,hits,total,coverage\n";
    for (std::size_t k = 0; k < rep.alphas.size(); ++k) {
        out += format_double(rep.alphas[k]) + "," + std::to_string(rep.hits[k]) + "," +
               std::to_string(rep.totals[k]) + "," + format_double(rep.coverage(k)) + "\n";
    }
    return out;
}

json coverage_json(const CoverageReport& rep) {
    json j;
    j["hits"] = rep.hits;
    j["totals"] = rep.totals;
    std::vector<double> cov;
    for (std::size_t k = 0; k < rep.alphas.size(); ++k) cov.push_back(rep.coverage(k));
    j["coverage"] = cov;
    return j;
}

} // namespace

ChainConfig chain_config_from_json(const json& options) {
    Options opts(options);
    ChainConfig cfg;
    json echo;
    read_chain(opts, cfg, echo);
    cfg.random_start = opts.get<bool>("random_start", false);
    opts.finish();
    return cfg;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::set<std::size_t> out;
    std::stringstream ss(text);
    std::string token;
    const auto parse_one = [&](const std::string& s) -> std::size_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("bad index list '" + text + "'");
        }
        const auto v = std::stoull(s);
        if (v == 0) throw ConfigError("indices are 1-based in '" + text + "'");
        return static_cast<std::size_t>(v);
    };
    while (std::getline(ss, token, ',')) {
        const auto dash = token.find('-');
        if (dash == std::string::npos) {
            out.insert(parse_one(token));
            continue;
        }
        const auto a = parse_one(token.substr(0, dash));
        const auto b = parse_one(token.substr(dash + 1));
        if (b < a) throw ConfigError("descending range in '" + text + "'");
        for (auto v = a; v <= b; ++v) out.insert(v);
    }
    if (out.empty()) throw ConfigError("empty index list");
    return {out.begin(), out.end()};
}

CommandResult cmd_fit(const json& options, const fs::path& out_dir, const Logger& log) {
    Options opts(options);
    json cfg;
    const fs::path data = opts.require<std::string>("data");
    cfg["data"] = absolute_string(data);

    std::optional<std::array<std::size_t, 2>> pair;
    if (opts.has("smooth")) pair = opts.require<std::array<std::size_t, 2>>("smooth");
    std::optional<std::array<double, 2>> weights;
    if (opts.has("weights")) weights = opts.require<std::array<double, 2>>("weights");
    if (weights && !pair) throw ConfigError("weights given without a column pair to smooth");

    ChainConfig chain;
    read_chain(opts, chain, cfg);
    chain.random_start = opts.get<bool>("random_start", false);
    cfg["random_start"] = chain.random_start;
    opts.finish();

    const std::string source_text = read_text(data);
    const PovMatrix m = parse_matrix(source_text);
    SmoothedMatrix training = to_real(m);
    cfg["smooth"] = nullptr;
    cfg["weights"] = nullptr;
    if (pair) {
        const auto cols = to_zero_based({(*pair)[0], (*pair)[1]}, "smooth");
        if (cols[0] >= m.periods() || cols[1] >= m.periods()) {
            throw IndexError("smoothing column out of range");
        }
        if (!weights) weights = std::array{column_sum(m, cols[0]), column_sum(m, cols[1])};
        training = smooth(m, cols[0], cols[1], (*weights)[0], (*weights)[1]);
        cfg["smooth"] = *pair;
        cfg["weights"] = *weights;
    }

    RunRecorder rec("fit", out_dir);
    if (log) log("fitting " + std::to_string(m.entities()) + " entities over " + std::to_string(m.periods()) +
                 " periods, " + std::to_string(chain.iterations) + " iterations");
    const auto samples = run_chain(training, chain);

    rec.write("source.csv", source_text);
    rec.write("training.csv", serialize(training));
    rec.adopt(write_sample_files(samples, out_dir));

    auto& man = rec.manifest();
    man.config = cfg;
    man.seed = chain.seed;
    man.inputs.push_back({"data", cfg["data"], sha256_hex(source_text)});
    man.extra["observed_periods"] = samples.observed_periods;
    man.extra["entities"] = samples.entities();
    man.extra["n"] = samples.n;
    man.extra["lambda_update"] = "grid";
    man.extra["tau_update"] = "grid";
    man.extra["beta_update"] = "grid";
    man.extra["lambda_grid"] = {samples.diagnostics.lambda_grid_lo, samples.diagnostics.lambda_grid_hi};
    man.extra["warnings"] = samples.diagnostics.warnings;
    for (const auto& w : samples.diagnostics.warnings) rec.note("warning: " + w);
    return rec.finish();
}

CommandResult cmd_report(const json& options, const fs::path& out_dir, const Logger& log) {
    Options opts(options);
    json cfg;
    const fs::path samples_dir = opts.require<std::string>("samples");
    cfg["samples"] = absolute_string(samples_dir);
    const double typical = opts.get<double>("typical_total", 70.0);
    const bool svg = opts.get<bool>("svg", true);
    cfg["typical_total"] = typical;
    cfg["svg"] = svg;
    opts.finish();

    if (!fs::is_directory(samples_dir)) throw IoError("cannot open samples directory " + samples_dir.string());
    if (!fs::exists(samples_dir / kManifestFile)) {
        throw FormatError(samples_dir.string() + " does not contain a samples bundle");
    }
    const auto fit = read_manifest(samples_dir / kManifestFile);
    if (fit.command != "fit") throw FormatError(samples_dir.string() + " is not a fit output directory");
    if (fs::exists(out_dir) && fs::equivalent(out_dir, samples_dir)) {
        throw ConfigError("report output directory must differ from the samples directory");
    }
    const auto d = fit.extra.value("observed_periods", std::size_t{0});
    const auto samples = read_sample_files(samples_dir, d);

    std::vector<std::int64_t> historical;
    if (fs::exists(samples_dir / "source.csv")) {
        const auto counts = new_entity_counts(load_matrix(samples_dir / "source.csv"));
        historical.assign(counts.begin() + std::min<std::ptrdiff_t>(1, std::ssize(counts)), counts.end());
    }

    RunRecorder rec("report", out_dir);
    if (log) log("reporting on " + std::to_string(samples.n) + " draws");
    const auto t1 = predictive_table(samples, 1);
    const auto t2 = predictive_table(samples, 2);
    rec.write("predictive_next.csv", predictive_csv(t1));
    rec.write("predictive_next2.csv", predictive_csv(t2));

    std::string summary = "entity,mean_next,variance_next,mean_next2,variance_next2\n";
    std::vector<std::int64_t> buf;
    for (std::size_t i = 0; i < samples.entities(); ++i) {
        const auto m1 = moments(predictive_draws(samples, 1, i, buf));
        const auto m2 = moments(predictive_draws(samples, 2, i, buf));
        summary += samples.entity_names[i] + "," + format_double(m1.mean) + "," + format_double(m1.variance) +
                   "," + format_double(m2.mean) + "," + format_double(m2.variance) + "\n";
    }
    rec.write("predictive_summary.csv", summary);

    const auto p1 = zero_probability(samples, 1);
    const auto p2 = zero_probability(samples, 2);
    const auto order = zero_probability_order(p1);
    std::string zp = "rank,entity,p_zero_next,p_zero_next2\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto i = order[r];
        zp += std::to_string(r + 1) + "," + samples.entity_names[i] + "," + format_double(p1[i]) + "," +
              format_double(p2[i]) + "\n";
    }
    rec.write("zero_probability.csv", zp);

    const auto est = new_entity_estimate(samples, typical, historical);
    json ne;
    ne["n"] = samples.n;
    ne["mean_existing_total"] = est.mean_existing_total;
    ne["typical_total"] = est.typical_total;
    ne["estimate"] = est.estimate;
    ne["historical_new_entity_counts"] = est.historical;
    rec.write("new_entity.json", ne.dump(2) + "\n");

    if (svg) {
        rec.write("predictive_next.svg", svg::predictive_histograms(t1, "next period"));
        rec.write("predictive_next2.svg", svg::predictive_histograms(t2, "period after next"));
        rec.write("zero_probability.svg", svg::zero_probability_chart(samples.entity_names, p1, p2, order));
    }

    auto& man = rec.manifest();
    man.config = cfg;
    man.seed = fit.seed;
    man.inputs.push_back({"samples", cfg["samples"], sha256_files(samples_dir, kSampleFiles)});
    man.extra["n"] = samples.n;
    return rec.finish();
}

CommandResult cmd_calibrate(const json& options, const fs::path& out_dir, const Logger& log) {
    Options opts(options);
    json cfg;
    CalibrationConfig cc;
    cc.chain.iterations = 11000;
    cc.chain.burn_in = 1000;
    cc.chain.thin = 10;
    cc.replicates = opts.get<std::size_t>("replicates", cc.replicates);
    cc.base = Hyperparams::from_array(opts.get<std::array<double, 6>>("base", cc.base.to_array()));
    cc.drop_zero_rows = opts.get<bool>("drop_zero_rows", false);
    cc.entities = opts.get<std::size_t>("entities", cc.entities);
    cc.observed_periods = opts.get<std::size_t>("observed_periods", cc.observed_periods);
    cc.workers = opts.get<unsigned>("workers", 0u);
    read_chain(opts, cc.chain, cfg);
    opts.finish();
    cc.seed = cc.chain.seed;
    if (cc.replicates == 0) throw ConfigError("need at least one replicate");
    try {
        cc.base.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("bad base hyperparameters: ") + e.what());
    }
    if (cc.observed_periods + 1 > static_cast<std::size_t>(cc.chain.model.horizon)) {
        throw ConfigError("observed periods leave no held-out period");
    }
    cfg["replicates"] = cc.replicates;
    cfg["base"] = cc.base.to_array();
    cfg["drop_zero_rows"] = cc.drop_zero_rows;
    cfg["entities"] = cc.entities;
    cfg["observed_periods"] = cc.observed_periods;
    cfg["workers"] = cc.workers;

    RunRecorder rec("calibrate", out_dir);
    std::size_t done = 0;
    const auto result = calibration_study(cc, [&](const ReplicateRecord& r) {
        ++done;
        if (log) {
            log("replicate " + std::to_string(r.index + 1) + " " + (r.ok ? "ok" : "failed: " + r.error) + " (" +
                std::to_string(done) + "/" + std::to_string(cc.replicates) + ")");
        }
    });

    rec.write("coverage_hyper.csv", coverage_csv(result.hyper));
    rec.write("coverage_predictive.csv", coverage_csv(result.predictive));

    std::string reps = "replicate,ok,rows_fitted,zero_rows,pred_total";
    for (const auto* name : Hyperparams::names) reps += std::string(",true_") + name;
    for (const auto* name : Hyperparams::names) reps += std::string(",median_") + name;
    for (const double a : cc.alphas) reps += ",hyper_hits_" + format_double(a);
    for (const double a : cc.alphas) reps += ",pred_hits_" + format_double(a);
    reps += ",error\n";
    for (const auto& r : result.replicates) {
        reps += std::to_string(r.index + 1) + "," + (r.ok ? "1" : "0") + "," + std::to_string(r.rows_fitted) + "," +
                std::to_string(r.zero_rows) + "," + std::to_string(r.pred_total);
        for (const double v : r.truth.to_array()) reps += "," + format_double(v);
        for (const double v : r.posterior_median) reps += "," + format_double(v);
        for (const auto h : r.hyper_hits) reps += "," + std::to_string(h);
        for (const auto h : r.pred_hits) reps += "," + std::to_string(h);
        reps += "," + clean_field(r.error) + "\n";
    }
    rec.write("replicates.csv", reps);

    json cov;
    cov["alphas"] = cc.alphas;
    cov["hyper"] = coverage_json(result.hyper);
    cov["predictive"] = coverage_json(result.predictive);
    cov["replicates"] = cc.replicates;
    cov["failed"] = result.hyper.failed;
    cov["drop_zero_rows"] = cc.drop_zero_rows;
    cov["chain"] = {{"iterations", cc.chain.iterations},
                    {"burn_in", cc.chain.burn_in},
                    {"thin", cc.chain.thin},
                    {"samples", cc.chain.sample_count()}};
    cov["chain_reduction_factor"] = 101000.0 / static_cast<double>(cc.chain.iterations);
    rec.write("coverage.json", cov.dump(2) + "\n");
    rec.write("coverage.svg", svg::coverage_chart(result.hyper, result.predictive));

    auto& man = rec.manifest();
    man.config = cfg;
    man.seed = cc.seed;
    man.extra["failed"] = result.hyper.failed;
    auto out = rec.finish();
    if (result.hyper.failed * 5 > cc.replicates) {
        throw DegenerateError(std::to_string(result.hyper.failed) + " of " + std::to_string(cc.replicates) +
                              " replicates failed");
    }
    return out;
}

CommandResult cmd_validate(const json& options, const fs::path& out_dir, const Logger& log) {
    Options opts(options);
    json cfg;
    const fs::path data = opts.require<std::string>("data");
    cfg["data"] = absolute_string(data);
    BacktestConfig bc;
    const auto rows = opts.get<std::vector<std::size_t>>("train_rows", {});
    const auto cols = opts.require<std::vector<std::size_t>>("train_cols");
    const auto target = opts.require<std::size_t>("target_col");
    const auto split = opts.get<std::vector<std::size_t>>("split", {});
    read_chain(opts, bc.chain, cfg);
    opts.finish();
    bc.rows = to_zero_based(rows, "row");
    bc.train_cols = to_zero_based(cols, "column");
    bc.target_col = to_zero_based({target}, "column")[0];
    bc.split_cols = to_zero_based(split, "column");
    cfg["train_rows"] = rows;
    cfg["train_cols"] = cols;
    cfg["target_col"] = target;
    cfg["split"] = split;

    const std::string source_text = read_text(data);
    const PovMatrix m = parse_matrix(source_text);

    RunRecorder rec("validate", out_dir);
    if (log) log("backtesting column " + std::to_string(target));
    const auto report = backtest(m, bc);

    std::string csv = "entity,truth,median,lo50,hi50,hit50,lo80,hi80,hit80\n";
    for (const auto& r : report.rows) {
        csv += r.entity + "," + std::to_string(r.truth) + "," + format_double(r.median) + "," +
               format_double(r.interval50.lo) + "," + format_double(r.interval50.hi) + "," +
               (r.hit50 ? "1" : "0") + "," + format_double(r.interval80.lo) + "," +
               format_double(r.interval80.hi) + "," + (r.hit80 ? "1" : "0") + "\n";
    }
    rec.write("backtest.csv", csv);

    json j;
    j["rows"] = report.rows.size();
    j["ahead"] = report.ahead;
    j["hits50"] = report.hits50;
    j["hits80"] = report.hits80;
    j["dropped_zero_rows"] = report.dropped;
    j["heuristic_only"] = report.heuristic_only;
    if (report.heuristic_only) {
        j["note"] = "evaluation heuristic only: the target period is one half of an artificially split period";
        rec.note("evaluation heuristic only");
    }
    rec.write("backtest.json", j.dump(2) + "\n");
    rec.write("backtest.svg", svg::backtest_chart(report));

    auto& man = rec.manifest();
    man.config = cfg;
    man.seed = bc.chain.seed;
    man.inputs.push_back({"data", cfg["data"], sha256_hex(source_text)});
    return rec.finish();
}

CommandResult run_command(const std::string& command, const json& options, const fs::path& out_dir,
                          const Logger& log) {
    if (command == "fit") return cmd_fit(options, out_dir, log);
    if (command == "report") return cmd_report(options, out_dir, log);
    if (command == "calibrate") return cmd_calibrate(options, out_dir, log);
    if (command == "validate") return cmd_validate(options, out_dir, log);
    throw ConfigError("unknown command '" + command + "'");
}

ReplayResult replay(const fs::path& manifest_path, const fs::path& out_dir, const Logger& log) {
    const auto old = read_manifest(fs::is_directory(manifest_path) ? manifest_path / kManifestFile : manifest_path);
    for (const auto& in : old.inputs) {
        const std::string now = in.role == "samples" ? sha256_files(in.path, kSampleFiles) : sha256_file(in.path);
        if (now != in.sha256) throw FormatError("input " + in.path + " changed since the recorded run");
    }
    ReplayResult out;
    out.run = run_command(old.command, old.config, out_dir, log);
    for (const auto& a : old.artifacts) {
        const auto it = std::find_if(out.run.manifest.artifacts.begin(), out.run.manifest.artifacts.end(),
                                     [&](const Artifact& b) { return b.path == a.path; });
        if (it != out.run.manifest.artifacts.end() && it->sha256 == a.sha256) {
            out.matched.push_back(a.path);
        } else {
            out.mismatched.push_back(a.path);
        }
    }
    return out;
}

} // namespace povcast
