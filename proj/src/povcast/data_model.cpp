#include "povcast/data_model.hpp"

#include "povcast/error.hpp"
#include "povcast/numfmt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace povcast {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
    const auto cell = trim(raw);
    if (cell.empty()) throw ParseError(row, col, "empty cell");
    T value{};
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(row, col, "not a number: '" + std::string(cell) + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) throw ParseError(row, col, "non-finite count");
    }
    if (value < T{0}) throw ParseError(row, col, "negative count: '" + std::string(cell) + "'");
    return value;
}

struct RawTable {
    std::vector<std::string> labels;
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> cells;
};

RawTable read_table(std::istream& in) {
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.find('"') != std::string::npos) {
            throw ParseError(line_no, line.find('"') + 1, "quoted fields are not supported");
        }
        auto cells = split_line(line);
        if (!have_header) {
            if (cells.size() < 2) throw ShapeError("header must name at least one period");
            table.labels.assign(cells.begin() + 1, cells.end());
            have_header = true;
            continue;
        }
        if (cells.size() != table.labels.size() + 1) {
            throw ShapeError("line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(table.labels.size() + 1));
        }
        table.names.push_back(cells.front());
        cells.erase(cells.begin());
        table.cells.push_back(std::move(cells));
    }
    if (!have_header) throw EmptyError("no header row");
    if (table.names.empty()) throw EmptyError("no data rows");
    return table;
}

// Data rows begin on the second non-blank line; report positions relative to that.
template <typename T>
Matrix<T> parse_counts(const RawTable& table) {
    Matrix<T> counts(table.names.size(), table.labels.size());
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        for (std::size_t j = 0; j < table.labels.size(); ++j) {
            counts(i, j) = parse_cell<T>(table.cells[i][j], i + 2, j + 2);
        }
    }
    return counts;
}

void check_name(const std::string& s) {
    if (s.find_first_of(",\"\n\r") != std::string::npos) {
        throw FormatError("name contains a reserved character: '" + s + "'");
    }
}

template <typename M, typename Fmt>
std::string serialize_impl(const M& m, const std::string& corner, Fmt fmt) {
    std::string out;
    check_name(corner);
    out += corner;
    for (const auto& label : m.period_labels) {
        check_name(label);
        out += ',';
        out += label;
    }
    out += '\n';
    for (std::size_t i = 0; i < m.entities(); ++i) {
        check_name(m.entity_names[i]);
        out += m.entity_names[i];
        for (std::size_t j = 0; j < m.periods(); ++j) {
            out += ',';
            out += fmt(m.counts(i, j));
        }
        out += '\n';
    }
    return out;
}

void check_index(std::size_t idx, std::size_t bound, const char* what) {
    if (idx >= bound) {
        throw IndexError(std::string(what) + " index " + std::to_string(idx) +
                         " out of range (size " + std::to_string(bound) + ")");
    }
}

} // namespace

bool PovMatrix::is_zero_row(std::size_t i) const {
    const auto r = counts.row(i);
    return std::all_of(r.begin(), r.end(), [](std::int64_t v) { return v == 0; });
}

std::vector<std::size_t> PovMatrix::zero_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entities(); ++i) {
        if (is_zero_row(i)) out.push_back(i);
    }
    return out;
}

bool SmoothedMatrix::is_zero_row(std::size_t i) const {
    const auto r = counts.row(i);
    return std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; });
}

SmoothedMatrix to_real(const PovMatrix& m) {
    SmoothedMatrix out{m.entity_names, m.period_labels, Matrix<double>(m.entities(), m.periods())};
    for (std::size_t i = 0; i < m.entities(); ++i) {
        for (std::size_t j = 0; j < m.periods(); ++j) {
            out.counts(i, j) = static_cast<double>(m.counts(i, j));
        }
    }
    return out;
}

PovMatrix load_matrix(std::istream& in) {
    const auto table = read_table(in);
    PovMatrix m{table.names, table.labels, parse_counts<std::int64_t>(table)};
    for (std::size_t i = 0; i < m.entities(); ++i) {
        if (m.is_zero_row(i)) {
            throw DomainError("entity '" + m.entity_names[i] + "' has no nonzero counts");
        }
    }
    return m;
}

PovMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_matrix(in);
}

PovMatrix parse_matrix(const std::string& text) {
    std::istringstream in(text);
    return load_matrix(in);
}

SmoothedMatrix load_real_matrix(std::istream& in) {
    const auto table = read_table(in);
    return SmoothedMatrix{table.names, table.labels, parse_counts<double>(table)};
}

SmoothedMatrix load_real_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_real_matrix(in);
}

std::string serialize(const PovMatrix& m, const std::string& corner) {
    return serialize_impl(m, corner, [](std::int64_t v) { return std::to_string(v); });
}

std::string serialize(const SmoothedMatrix& m, const std::string& corner) {
    return serialize_impl(m, corner, [](double v) { return format_double(v); });
}

double column_sum(const PovMatrix& m, std::size_t col) {
    check_index(col, m.periods(), "column");
    double total = 0.0;
    for (std::size_t i = 0; i < m.entities(); ++i) total += static_cast<double>(m.counts(i, col));
    return total;
}

SmoothedMatrix smooth(const SmoothedMatrix& m, std::size_t j1, std::size_t j2, double c1, double c2) {
    check_index(j1, m.periods(), "column");
    check_index(j2, m.periods(), "column");
    if (j1 == j2) throw IndexError("smoothing columns must differ");
    if (!(c1 > 0.0) || !(c2 > 0.0) || !std::isfinite(c1) || !std::isfinite(c2)) {
        throw DomainError("smoothing weights must be positive and finite");
    }
    auto out = m;
    const double total = c1 + c2;
    for (std::size_t i = 0; i < m.entities(); ++i) {
        const double mass = m.counts(i, j1) + m.counts(i, j2);
        out.counts(i, j1) = c1 * mass / total;
        // Complement rather than c2 * mass / total so the pair sums back to mass.
        out.counts(i, j2) = mass - out.counts(i, j1);
    }
    return out;
}

SmoothedMatrix smooth(const PovMatrix& m, std::size_t j1, std::size_t j2, double c1, double c2) {
    return smooth(to_real(m), j1, j2, c1, c2);
}

SmoothedMatrix smooth(const PovMatrix& m, std::size_t j1, std::size_t j2) {
    return smooth(m, j1, j2, column_sum(m, j1), column_sum(m, j2));
}

PovMatrix submatrix(const PovMatrix& m, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols) {
    if (rows.empty() || cols.empty()) throw IndexError("submatrix needs at least one row and column");
    PovMatrix out;
    out.counts = Matrix<std::int64_t>(rows.size(), cols.size());
    for (const auto j : cols) {
        check_index(j, m.periods(), "column");
        out.period_labels.push_back(m.period_labels[j]);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        check_index(rows[r], m.entities(), "row");
        out.entity_names.push_back(m.entity_names[rows[r]]);
        for (std::size_t c = 0; c < cols.size(); ++c) out.counts(r, c) = m.counts(rows[r], cols[c]);
    }
    return out;
}

PovMatrix drop_zero_rows(const PovMatrix& m) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < m.entities(); ++i) {
        if (!m.is_zero_row(i)) keep.push_back(i);
    }
    if (keep.empty()) throw EmptyError("every row is zero");
    std::vector<std::size_t> cols(m.periods());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
    return submatrix(m, keep, cols);
}

std::vector<std::int64_t> new_entity_counts(const PovMatrix& m) {
    std::vector<std::int64_t> out(m.periods(), 0);
    for (std::size_t i = 0; i < m.entities(); ++i) {
        const auto r = m.counts.row(i);
        const auto first = std::find_if(r.begin(), r.end(), [](std::int64_t v) { return v != 0; });
        if (first == r.end()) continue;
        const auto j = static_cast<std::size_t>(first - r.begin());
        if (j > 0) out[j] += *first;
    }
    return out;
}

} // namespace povcast
