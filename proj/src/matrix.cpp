#include "fedgan/matrix.hpp"

#include <cmath>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("ragged matrix literal");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
    if (data.size() != rows * cols) {
        throw DimensionError("matrix data length " + std::to_string(data.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw DimensionError("row index " + std::to_string(indices[i]) + " out of range");
        }
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void Matrix::append_rows(const Matrix& other) {
    if (rows_ == 0 && data_.empty()) {
        cols_ = other.cols_;
    }
    if (other.cols_ != cols_) {
        throw DimensionError("cannot append " + shape(other) + " rows to " + shape(*this));
    }
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul " + shape(a) + " * " + shape(b));
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(i, k);
            const double* src = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) dst[j] += s * src[j];
        }
    }
    return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_bt " + shape(a) + " * " + shape(b) + "^T");
    }
    Matrix out(a.rows(), b.rows());
    const std::size_t inner = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.row(j).data();
            double acc = 0.0;
            for (std::size_t k = 0; k < inner; ++k) acc += ar[k] * br[k];
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_at " + shape(a) + "^T * " + shape(b));
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* br = b.row(k).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = a(k, i);
            double* dst = out.row(i).data();
            for (std::size_t j = 0; j < n; ++j) dst[j] += s * br[j];
        }
    }
    return out;
}

}  // namespace fedgan
