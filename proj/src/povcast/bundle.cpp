#include "povcast/bundle.hpp"

#include "povcast/error.hpp"
#include "povcast/numfmt.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace povcast {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto c = line.find(',', start);
        out.push_back(line.substr(start, c == std::string::npos ? std::string::npos : c - start));
        if (c == std::string::npos) return out;
        start = c + 1;
    }
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    Csv csv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (csv.header.empty()) {
            csv.header = std::move(cells);
            continue;
        }
        if (cells.size() != csv.header.size()) {
            throw FormatError(path.filename().string() + ": ragged row");
        }
        csv.rows.push_back(std::move(cells));
    }
    if (csv.header.empty()) throw FormatError(path.filename().string() + ": empty file");
    return csv;
}

std::int64_t parse_int(const std::string& s) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("not an integer: '" + s + "'");
    return v;
}

void write_predictions(const PosteriorSamples& s, const Matrix<std::int64_t>& m,
                       const std::filesystem::path& path) {
    std::string out = "draw";
    for (const auto& name : s.entity_names) out += "," + name;
    out += '\n';
    for (std::size_t k = 0; k < s.n; ++k) {
        out += std::to_string(k + 1);
        for (std::size_t i = 0; i < s.entities(); ++i) out += "," + std::to_string(m(k, i));
        out += '\n';
    }
    write_text(path, out);
}

Matrix<std::int64_t> read_predictions(const std::filesystem::path& path,
                                      std::vector<std::string>& names) {
    const auto csv = read_csv(path);
    names.assign(csv.header.begin() + 1, csv.header.end());
    Matrix<std::int64_t> m(csv.rows.size(), names.size());
    for (std::size_t k = 0; k < csv.rows.size(); ++k) {
        for (std::size_t i = 0; i < names.size(); ++i) m(k, i) = parse_int(csv.rows[k][i + 1]);
    }
    return m;
}

} // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> write_sample_files(const PosteriorSamples& s, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::string hyper = "draw";
    for (const auto* name : Hyperparams::names) hyper += std::string(",") + name;
    hyper += '\n';
    for (std::size_t k = 0; k < s.n; ++k) {
        hyper += std::to_string(k + 1);
        for (const double v : s.hyper[k].to_array()) hyper += "," + format_double(v);
        hyper += '\n';
    }
    write_text(dir / "hyper.csv", hyper);

    std::string lat = "draw,entity,lambda,tau,beta\n";
    for (std::size_t k = 0; k < s.n; ++k) {
        for (std::size_t i = 0; i < s.entities(); ++i) {
            const auto& l = s.latent(k, i);
            lat += std::to_string(k + 1) + "," + s.entity_names[i] + "," + format_double(l.lambda) +
                   "," + format_double(l.tau) + "," + format_double(l.beta) + "\n";
        }
    }
    write_text(dir / "latents.csv", lat);

    write_predictions(s, s.pred_next, dir / "pred_next.csv");
    write_predictions(s, s.pred_next2, dir / "pred_next2.csv");

    std::string diag = "entity,lambda_repeat,tau_repeat,beta_repeat\n";
    for (std::size_t i = 0; i < s.diagnostics.repeat_fraction.size(); ++i) {
        const auto& f = s.diagnostics.repeat_fraction[i];
        diag += s.entity_names[i] + "," + format_double(f[0]) + "," + format_double(f[1]) + "," +
                format_double(f[2]) + "\n";
    }
    write_text(dir / "diagnostics.csv", diag);
    return kSampleFiles;
}

PosteriorSamples read_sample_files(const std::filesystem::path& dir, std::size_t observed_periods) {
    PosteriorSamples s;
    s.observed_periods = observed_periods;
    s.pred_next = read_predictions(dir / "pred_next.csv", s.entity_names);
    std::vector<std::string> names2;
    s.pred_next2 = read_predictions(dir / "pred_next2.csv", names2);
    if (names2 != s.entity_names || s.pred_next2.rows() != s.pred_next.rows()) {
        throw FormatError("pred_next.csv and pred_next2.csv disagree");
    }
    s.n = s.pred_next.rows();
    if (s.n == 0) throw FormatError("bundle contains no draws");

    const auto hyper = read_csv(dir / "hyper.csv");
    if (hyper.rows.size() != s.n || hyper.header.size() != 7) throw FormatError("hyper.csv has the wrong shape");
    for (const auto& row : hyper.rows) {
        std::array<double, 6> v{};
        for (std::size_t p = 0; p < 6; ++p) v[p] = parse_double(row[p + 1]);
        s.hyper.push_back(Hyperparams::from_array(v));
    }

    const auto lat = read_csv(dir / "latents.csv");
    if (lat.rows.size() != s.n * s.entities() || lat.header.size() != 5) {
        throw FormatError("latents.csv has the wrong shape");
    }
    for (const auto& row : lat.rows) {
        s.latents.push_back({parse_double(row[2]), parse_double(row[3]), parse_double(row[4])});
    }

    const auto diag = read_csv(dir / "diagnostics.csv");
    for (const auto& row : diag.rows) {
        s.diagnostics.repeat_fraction.push_back(
            {parse_double(row[1]), parse_double(row[2]), parse_double(row[3])});
    }
    return s;
}

} // namespace povcast
