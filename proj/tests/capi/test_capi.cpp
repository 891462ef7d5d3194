#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "povcast.h"
#include "tempdir.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace {

const char* kTable1 = POVCAST_DATA_DIR "/table1.csv";
const char* kQuick = R"({"iterations": 1100, "burn_in": 100, "thin": 10})";

struct Matrix {
    povcast_matrix* h = nullptr;
    ~Matrix() { povcast_matrix_free(h); }
};

struct Samples {
    povcast_samples* h = nullptr;
    ~Samples() { povcast_samples_free(h); }
};

std::string take(char* s) {
    std::string out = s == nullptr ? "" : s;
    povcast_string_free(s);
    return out;
}

} // namespace

TEST_CASE("status names and exit codes") {
    CHECK(std::string(povcast_status_name(POVCAST_OK)) == "ok");
    CHECK(std::string(povcast_status_name(POVCAST_ERR_PARSE)) == "parse");
    CHECK(std::string(povcast_status_name(static_cast<povcast_status>(42))) == "unknown");
    CHECK(povcast_exit_code(POVCAST_OK) == 0);
    CHECK(povcast_exit_code(POVCAST_ERR_CONFIG) == 2);
    CHECK(povcast_exit_code(POVCAST_ERR_INDEX) == 2);
    CHECK(povcast_exit_code(POVCAST_ERR_PARSE) == 3);
    CHECK(povcast_exit_code(POVCAST_ERR_SHAPE) == 3);
    CHECK(povcast_exit_code(POVCAST_ERR_EMPTY) == 3);
    CHECK(povcast_exit_code(POVCAST_ERR_DOMAIN) == 3);
    CHECK(povcast_exit_code(POVCAST_ERR_FORMAT) == 3);
    CHECK(povcast_exit_code(POVCAST_ERR_IO) == 4);
    CHECK(povcast_exit_code(POVCAST_ERR_DEGENERATE) == 5);
    CHECK(povcast_exit_code(POVCAST_ERR_INTERNAL) == 5);
}

TEST_CASE("matrix handles") {
    Matrix m;
    REQUIRE(povcast_matrix_load(kTable1, &m.h) == POVCAST_OK);
    size_t rows = 0, cols = 0;
    CHECK(povcast_matrix_shape(m.h, &rows, &cols) == POVCAST_OK);
    CHECK(rows == 24);
    CHECK(cols == 5);
    const char* name = nullptr;
    CHECK(povcast_matrix_entity(m.h, 5, &name) == POVCAST_OK);
    CHECK(std::string(name) == "Jon Snow");
    CHECK(povcast_matrix_period(m.h, 4, &name) == POVCAST_OK);
    CHECK(std::string(name) == "ADWD");

    Matrix s;
    REQUIRE(povcast_matrix_smooth(m.h, 3, 4, nullptr, &s.h) == POVCAST_OK);
    double a = 0.0, b = 0.0;
    CHECK(povcast_matrix_value(s.h, 5, 3, &a) == POVCAST_OK);
    CHECK(povcast_matrix_value(s.h, 5, 4, &b) == POVCAST_OK);
    CHECK(a == 45.0 * 13.0 / 116.0);
    CHECK(a + b == 13.0);

    const double w[] = {1.0, 1.0};
    Matrix even;
    REQUIRE(povcast_matrix_smooth(m.h, 3, 4, w, &even.h) == POVCAST_OK);
    CHECK(povcast_matrix_value(even.h, 5, 3, &a) == POVCAST_OK);
    CHECK(a == 6.5);

    Matrix again;
    CHECK(povcast_matrix_smooth(s.h, 3, 4, nullptr, &again.h) == POVCAST_ERR_CONFIG);

    char* text = nullptr;
    REQUIRE(povcast_matrix_serialize(m.h, &text) == POVCAST_OK);
    Matrix parsed;
    CHECK(povcast_matrix_parse(take(text).c_str(), &parsed.h) == POVCAST_OK);
    CHECK(povcast_matrix_value(parsed.h, 0, 0, &a) == POVCAST_OK);
    CHECK(a == 15.0);
}

TEST_CASE("matrix errors set the status and message") {
    Matrix m;
    CHECK(povcast_matrix_parse("name,a\nX,-1\n", &m.h) == POVCAST_ERR_PARSE);
    CHECK(std::string(povcast_last_error()).size() > 0);
    CHECK(povcast_matrix_parse("name,a,b\nX,1\n", &m.h) == POVCAST_ERR_SHAPE);
    CHECK(povcast_matrix_parse("", &m.h) == POVCAST_ERR_EMPTY);
    CHECK(povcast_matrix_load("/no/such/file.csv", &m.h) == POVCAST_ERR_IO);
    CHECK(std::string(povcast_last_error()).find("/no/such/file.csv") != std::string::npos);
    CHECK(povcast_matrix_load(nullptr, &m.h) == POVCAST_ERR_CONFIG);
    CHECK(povcast_matrix_shape(nullptr, nullptr, nullptr) == POVCAST_ERR_CONFIG);
    CHECK(m.h == nullptr);

    Matrix ok;
    REQUIRE(povcast_matrix_load(kTable1, &ok.h) == POVCAST_OK);
    CHECK(std::string(povcast_last_error()).empty());
    Matrix out;
    CHECK(povcast_matrix_smooth(ok.h, 3, 3, nullptr, &out.h) == POVCAST_ERR_INDEX);
    const double bad[] = {0.0, 1.0};
    CHECK(povcast_matrix_smooth(ok.h, 3, 4, bad, &out.h) == POVCAST_ERR_DOMAIN);
}

TEST_CASE("samples through the C API") {
    Matrix m, s;
    REQUIRE(povcast_matrix_load(kTable1, &m.h) == POVCAST_OK);
    REQUIRE(povcast_matrix_smooth(m.h, 3, 4, nullptr, &s.h) == POVCAST_OK);
    Samples a;
    REQUIRE(povcast_samples_fit(s.h, kQuick, &a.h) == POVCAST_OK);
    size_t draws = 0, ents = 0;
    CHECK(povcast_samples_shape(a.h, &draws, &ents) == POVCAST_OK);
    CHECK(draws == 100);
    CHECK(ents == 24);
    std::vector<double> p(24);
    CHECK(povcast_samples_zero_probability(a.h, 1, p.data(), p.size()) == POVCAST_OK);
    CHECK(p[0] == 1.0);
    CHECK(povcast_samples_zero_probability(a.h, 1, p.data(), 3) == POVCAST_ERR_CONFIG);
    CHECK(povcast_samples_zero_probability(a.h, 3, p.data(), p.size()) == POVCAST_ERR_CONFIG);
    int64_t x = -1;
    CHECK(povcast_samples_prediction(a.h, 2, 0, 0, &x) == POVCAST_OK);
    CHECK(x == 0);
    CHECK(povcast_samples_prediction(a.h, 1, 100, 0, &x) == POVCAST_ERR_INDEX);
    double h[6];
    CHECK(povcast_samples_hyper(a.h, 0, h) == POVCAST_OK);
    CHECK(h[1] > 0.0);

    testutil::TempDir dir("capi");
    const auto path = (dir / "bundle").string();
    REQUIRE(povcast_samples_save(a.h, path.c_str()) == POVCAST_OK);
    Samples b;
    REQUIRE(povcast_samples_load(path.c_str(), 5, &b.h) == POVCAST_OK);
    for (size_t k = 0; k < draws; ++k) {
        for (size_t i = 0; i < ents; ++i) {
            int64_t u = 0, v = 0;
            povcast_samples_prediction(a.h, 1, k, i, &u);
            povcast_samples_prediction(b.h, 1, k, i, &v);
            REQUIRE(u == v);
        }
    }
    Samples bad;
    CHECK(povcast_samples_fit(s.h, "{\"thin\": 7, \"iterations\": 101000, \"burn_in\": 1000}", &bad.h) ==
          POVCAST_ERR_CONFIG);
    CHECK(povcast_samples_fit(s.h, "{not json", &bad.h) == POVCAST_ERR_CONFIG);
}

TEST_CASE("commands and replay through the C API") {
    testutil::TempDir dir("capicmd");
    nlohmann::json opts = nlohmann::json::parse(kQuick);
    opts["data"] = kTable1;
    opts["smooth"] = {4, 5};
    const auto fit_dir = (dir / "fit").string();
    std::vector<std::string> lines;
    const auto logger = [](const char* line, void* user) {
        static_cast<std::vector<std::string>*>(user)->push_back(line);
    };
    char* summary = nullptr;
    REQUIRE(povcast_run("fit", opts.dump().c_str(), fit_dir.c_str(), logger, &lines, &summary) == POVCAST_OK);
    const auto j = nlohmann::json::parse(take(summary));
    CHECK(j["command"] == "fit");
    CHECK(!lines.empty());

    const auto again = (dir / "again").string();
    REQUIRE(povcast_replay(fit_dir.c_str(), again.c_str(), nullptr, nullptr, &summary) == POVCAST_OK);
    const auto r = nlohmann::json::parse(take(summary));
    CHECK(r["mismatched"].empty());
    CHECK(r["matched"].size() == j["artifacts"].size());

    CHECK(povcast_run("fit", "{\"data\": \"/missing.csv\"}", fit_dir.c_str(), nullptr, nullptr, nullptr) ==
          POVCAST_ERR_IO);
    CHECK(povcast_run("nope", "{}", fit_dir.c_str(), nullptr, nullptr, nullptr) == POVCAST_ERR_CONFIG);
    const auto empty = (dir / "empty").string();
    std::filesystem::create_directories(empty);
    const auto rep = (dir / "rep").string();
    const std::string ropts = "{\"samples\": \"" + empty + "\"}";
    CHECK(povcast_run("report", ropts.c_str(), rep.c_str(), nullptr, nullptr, nullptr) == POVCAST_ERR_FORMAT);
}
