#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedgan {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix from_data(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Rows selected by index, in the given order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;
    /// Appends the rows of `other`; column counts must agree unless this is empty.
    void append_rows(const Matrix& other);

    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// out = a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// out = a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);

}  // namespace fedgan
