#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace povcast {

/// Dense row-major matrix.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const T> values() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Integer entity x period count matrix as observed.
struct PovMatrix {
    std::vector<std::string> entity_names;
    std::vector<std::string> period_labels;
    Matrix<std::int64_t> counts;

    std::size_t entities() const noexcept { return counts.rows(); }
    std::size_t periods() const noexcept { return counts.cols(); }
    bool is_zero_row(std::size_t i) const;
    std::vector<std::size_t> zero_rows() const;

    friend bool operator==(const PovMatrix&, const PovMatrix&) = default;
};

/// Real-valued counts: the smoothed data, or any integer matrix promoted for fitting.
struct SmoothedMatrix {
    std::vector<std::string> entity_names;
    std::vector<std::string> period_labels;
    Matrix<double> counts;

    std::size_t entities() const noexcept { return counts.rows(); }
    std::size_t periods() const noexcept { return counts.cols(); }
    bool is_zero_row(std::size_t i) const;

    friend bool operator==(const SmoothedMatrix&, const SmoothedMatrix&) = default;
};

SmoothedMatrix to_real(const PovMatrix& m);

} // namespace povcast
