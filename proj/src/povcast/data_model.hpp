#pragma once

#include "povcast/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace povcast {

// CSV layout: header row "<corner>,<label_1>,...,<label_d>", then one row per
// entity "<name>,<count_1>,...,<count_d>". Comma separator, no quoting.

/// Parses and validates an integer count matrix. Rows with no nonzero entry are
/// rejected: observed histories always contain at least one count.
PovMatrix load_matrix(std::istream& in);
PovMatrix load_matrix(const std::filesystem::path& path);
PovMatrix parse_matrix(const std::string& text);

/// Real-valued variant used for smoothed and training matrices. Zero rows allowed.
SmoothedMatrix load_real_matrix(std::istream& in);
SmoothedMatrix load_real_matrix(const std::filesystem::path& path);

std::string serialize(const PovMatrix& m, const std::string& corner = "name");
std::string serialize(const SmoothedMatrix& m, const std::string& corner = "name");

double column_sum(const PovMatrix& m, std::size_t col);

/// Redistributes the combined mass of columns j1, j2 in proportion to c1 : c2.
/// Every other column is copied unchanged.
SmoothedMatrix smooth(const PovMatrix& m, std::size_t j1, std::size_t j2, double c1, double c2);

/// Same, with the weights defaulting to the column sums of the source pair.
SmoothedMatrix smooth(const PovMatrix& m, std::size_t j1, std::size_t j2);

SmoothedMatrix smooth(const SmoothedMatrix& m, std::size_t j1, std::size_t j2, double c1, double c2);

/// Selects rows and columns (0-based) in the given order. Zero rows may result;
/// see PovMatrix::zero_rows.
PovMatrix submatrix(const PovMatrix& m, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols);

PovMatrix drop_zero_rows(const PovMatrix& m);

/// Entry j is the number of counts in column j contributed by entities whose first
/// nonzero period is j. Entry 0 is always 0 (there is nothing to compare against).
std::vector<std::int64_t> new_entity_counts(const PovMatrix& m);

} // namespace povcast
