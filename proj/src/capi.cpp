#include "povcast.h"

#include "povcast/analysis.hpp"
#include "povcast/bundle.hpp"
#include "povcast/commands.hpp"
#include "povcast/data_model.hpp"
#include "povcast/error.hpp"
#include "povcast/gibbs.hpp"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <variant>

struct povcast_matrix {
    std::variant<povcast::PovMatrix, povcast::SmoothedMatrix> m;
};

struct povcast_samples {
    povcast::PosteriorSamples s;
};

namespace {

thread_local std::string last_error;

template <class F>
povcast_status guard(F&& f) noexcept {
    try {
        last_error.clear();
        f();
        return POVCAST_OK;
    } catch (const povcast::Error& e) {
        last_error = e.what();
        return static_cast<povcast_status>(e.kind());
    } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
        return POVCAST_ERR_FORMAT;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return POVCAST_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return POVCAST_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return POVCAST_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw povcast::ConfigError(std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

povcast::SmoothedMatrix as_real(const povcast_matrix& h) {
    if (const auto* p = std::get_if<povcast::PovMatrix>(&h.m)) return povcast::to_real(*p);
    return std::get<povcast::SmoothedMatrix>(h.m);
}

template <class F>
auto visit_matrix(const povcast_matrix* h, F&& f) {
    require(h, "matrix");
    return std::visit(std::forward<F>(f), h->m);
}

const povcast::Matrix<std::int64_t>& predictions(const povcast_samples* s, int ahead) {
    require(s, "samples");
    if (ahead != 1 && ahead != 2) throw povcast::ConfigError("ahead must be 1 or 2");
    return ahead == 1 ? s->s.pred_next : s->s.pred_next2;
}

povcast::Logger make_logger(povcast_log_fn log, void* user) {
    if (log == nullptr) return {};
    return [log, user](const std::string& line) { log(line.c_str(), user); };
}

nlohmann::json parse_options(const char* text) {
    if (text == nullptr || *text == '\0') return nlohmann::json::object();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw povcast::ConfigError(std::string("options are not valid JSON: ") + e.what());
    }
}

} // namespace

extern "C" {

const char* povcast_version(void) { return "1.0.0"; }

const char* povcast_status_name(povcast_status status) {
    if (status == POVCAST_OK) return "ok";
    if (status < POVCAST_ERR_PARSE || status > POVCAST_ERR_INTERNAL) return "unknown";
    return povcast::to_string(static_cast<povcast::ErrorKind>(status));
}

const char* povcast_last_error(void) { return last_error.c_str(); }

int povcast_exit_code(povcast_status status) {
    switch (status) {
    case POVCAST_OK: return 0;
    case POVCAST_ERR_CONFIG:
    case POVCAST_ERR_INDEX: return 2;
    case POVCAST_ERR_PARSE:
    case POVCAST_ERR_SHAPE:
    case POVCAST_ERR_EMPTY:
    case POVCAST_ERR_DOMAIN:
    case POVCAST_ERR_FORMAT: return 3;
    case POVCAST_ERR_IO: return 4;
    default: return 5;
    }
}

void povcast_string_free(char* s) { std::free(s); }

povcast_status povcast_matrix_load(const char* path, povcast_matrix** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new povcast_matrix{povcast::load_matrix(std::filesystem::path(path))};
    });
}

povcast_status povcast_matrix_parse(const char* csv, povcast_matrix** out) {
    return guard([&] {
        require(csv, "csv");
        require(out, "out");
        *out = new povcast_matrix{povcast::parse_matrix(csv)};
    });
}

void povcast_matrix_free(povcast_matrix* m) { delete m; }

povcast_status povcast_matrix_shape(const povcast_matrix* m, size_t* rows, size_t* cols) {
    return guard([&] {
        visit_matrix(m, [&](const auto& x) {
            if (rows != nullptr) *rows = x.entities();
            if (cols != nullptr) *cols = x.periods();
        });
    });
}

povcast_status povcast_matrix_value(const povcast_matrix* m, size_t row, size_t col, double* out) {
    return guard([&] {
        require(out, "out");
        visit_matrix(m, [&](const auto& x) {
            if (row >= x.entities() || col >= x.periods()) throw povcast::IndexError("cell out of range");
            *out = static_cast<double>(x.counts(row, col));
        });
    });
}

povcast_status povcast_matrix_entity(const povcast_matrix* m, size_t row, const char** out) {
    return guard([&] {
        require(out, "out");
        visit_matrix(m, [&](const auto& x) {
            if (row >= x.entities()) throw povcast::IndexError("row out of range");
            *out = x.entity_names[row].c_str();
        });
    });
}

povcast_status povcast_matrix_period(const povcast_matrix* m, size_t col, const char** out) {
    return guard([&] {
        require(out, "out");
        visit_matrix(m, [&](const auto& x) {
            if (col >= x.periods()) throw povcast::IndexError("column out of range");
            *out = x.period_labels[col].c_str();
        });
    });
}

povcast_status povcast_matrix_smooth(const povcast_matrix* m, size_t j1, size_t j2, const double* weights,
                                     povcast_matrix** out) {
    return guard([&] {
        require(out, "out");
        auto result = visit_matrix(m, [&](const auto& x) -> povcast::SmoothedMatrix {
            using T = std::decay_t<decltype(x)>;
            if (weights != nullptr) return povcast::smooth(x, j1, j2, weights[0], weights[1]);
            if constexpr (std::is_same_v<T, povcast::PovMatrix>) {
                return povcast::smooth(x, j1, j2);
            } else {
                throw povcast::ConfigError("default weights need an integer count matrix");
            }
        });
        *out = new povcast_matrix{std::move(result)};
    });
}

povcast_status povcast_matrix_serialize(const povcast_matrix* m, char** out) {
    return guard([&] {
        require(out, "out");
        *out = dup_string(visit_matrix(m, [](const auto& x) { return povcast::serialize(x); }));
    });
}

povcast_status povcast_samples_fit(const povcast_matrix* data, const char* chain_json, povcast_samples** out) {
    return guard([&] {
        require(data, "matrix");
        require(out, "out");
        const auto cfg = povcast::chain_config_from_json(parse_options(chain_json));
        *out = new povcast_samples{povcast::run_chain(as_real(*data), cfg)};
    });
}

povcast_status povcast_samples_save(const povcast_samples* s, const char* dir) {
    return guard([&] {
        require(s, "samples");
        require(dir, "dir");
        povcast::write_sample_files(s->s, dir);
    });
}

povcast_status povcast_samples_load(const char* dir, size_t observed_periods, povcast_samples** out) {
    return guard([&] {
        require(dir, "dir");
        require(out, "out");
        *out = new povcast_samples{povcast::read_sample_files(dir, observed_periods)};
    });
}

void povcast_samples_free(povcast_samples* s) { delete s; }

povcast_status povcast_samples_shape(const povcast_samples* s, size_t* draws, size_t* entities) {
    return guard([&] {
        require(s, "samples");
        if (draws != nullptr) *draws = s->s.n;
        if (entities != nullptr) *entities = s->s.entities();
    });
}

povcast_status povcast_samples_prediction(const povcast_samples* s, int ahead, size_t draw, size_t entity,
                                          int64_t* out) {
    return guard([&] {
        require(out, "out");
        const auto& m = predictions(s, ahead);
        if (draw >= m.rows() || entity >= m.cols()) throw povcast::IndexError("draw or entity out of range");
        *out = m(draw, entity);
    });
}

povcast_status povcast_samples_zero_probability(const povcast_samples* s, int ahead, double* out, size_t len) {
    return guard([&] {
        require(out, "out");
        predictions(s, ahead);
        const auto p = povcast::zero_probability(s->s, ahead);
        if (len < p.size()) throw povcast::ConfigError("output buffer too small");
        std::copy(p.begin(), p.end(), out);
    });
}

povcast_status povcast_samples_hyper(const povcast_samples* s, size_t draw, double out[6]) {
    return guard([&] {
        require(s, "samples");
        require(out, "out");
        if (draw >= s->s.hyper.size()) throw povcast::IndexError("draw out of range");
        const auto a = s->s.hyper[draw].to_array();
        std::copy(a.begin(), a.end(), out);
    });
}

povcast_status povcast_run(const char* command, const char* options_json, const char* out_dir,
                           povcast_log_fn log, void* user, char** summary_json) {
    return guard([&] {
        require(command, "command");
        require(out_dir, "out_dir");
        const auto result = povcast::run_command(command, parse_options(options_json), out_dir,
                                                 make_logger(log, user));
        if (summary_json != nullptr) {
            auto j = result.manifest.to_json();
            j["notes"] = result.notes;
            *summary_json = dup_string(j.dump(2));
        }
    });
}

povcast_status povcast_replay(const char* manifest_path, const char* out_dir, povcast_log_fn log, void* user,
                              char** summary_json) {
    bool differs = false;
    const auto status = guard([&] {
        require(manifest_path, "manifest_path");
        require(out_dir, "out_dir");
        const auto r = povcast::replay(manifest_path, out_dir, make_logger(log, user));
        differs = !r.mismatched.empty();
        if (summary_json != nullptr) {
            nlohmann::json j;
            j["command"] = r.run.manifest.command;
            j["matched"] = r.matched;
            j["mismatched"] = r.mismatched;
            j["notes"] = r.run.notes;
            *summary_json = dup_string(j.dump(2));
        }
    });
    if (status == POVCAST_OK && differs) {
        last_error = "replayed artifacts differ from the manifest";
        return POVCAST_ERR_DEGENERATE;
    }
    return status;
}

} // extern "C"
