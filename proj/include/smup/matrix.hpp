#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smup {

/// Dense row-major matrix of 64-bit reals. The universal numeric carrier
/// for weights, updates, activations and norm experiments.
class Matrix {
public:
    Matrix() = default;

    Matrix(int64_t rows, int64_t cols)
        : rows_(rows), cols_(cols), data_(check_size(rows, cols), 0.0) {}

    Matrix(int64_t rows, int64_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != rows_ * cols_) {
            throw std::invalid_argument("Matrix: data length must equal rows*cols");
        }
        check_size(rows, cols);
    }

    int64_t rows() const noexcept { return rows_; }
    int64_t cols() const noexcept { return cols_; }
    int64_t size() const noexcept { return rows_ * cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int64_t i, int64_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(int64_t i, int64_t j) const noexcept { return data_[i * cols_ + j]; }

    double& at(int64_t i, int64_t j) {
        bounds_check(i, j);
        return data_[i * cols_ + j];
    }
    double at(int64_t i, int64_t j) const {
        bounds_check(i, j);
        return data_[i * cols_ + j];
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void set_zero() { fill(0.0); }

    bool all_finite() const noexcept;
    double frobenius_norm() const noexcept;

    Matrix transposed() const;

    bool operator==(const Matrix& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    static int64_t check_size(int64_t rows, int64_t cols) {
        if (rows < 1 || cols < 1) {
            throw std::invalid_argument("Matrix: rows and cols must be >= 1");
        }
        return rows * cols;
    }
    void bounds_check(int64_t i, int64_t j) const {
        if (i < 0 || i >= rows_ || j < 0 || j >= cols_) {
            throw std::out_of_range("Matrix index (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") out of range");
        }
    }

    int64_t rows_ = 0;
    int64_t cols_ = 0;
    std::vector<double> data_;
};

// elementwise helpers; shapes must match
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
void axpy_inplace(Matrix& y, double alpha, const Matrix& x);  // y += alpha*x

}  // namespace smup
