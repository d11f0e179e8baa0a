#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "dabsor/errors.hpp"

namespace dabsor::linalg {

using Complex = std::complex<double>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, Complex>;

template <Scalar T>
inline bool is_finite(const T& value) {
    if constexpr (is_complex<T>::value) {
        return std::isfinite(value.real()) && std::isfinite(value.imag());
    } else {
        return std::isfinite(value);
    }
}

/// Dense row-major matrix over double or std::complex<double>.
///
/// Construction from explicit entries rejects NaN/Inf; element access afterwards
/// is unchecked so the numerical kernels stay tight.
template <Scalar T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<T> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionMismatch("matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                    " given " + std::to_string(data_.size()) + " entries");
        }
        if (!std::all_of(data_.begin(), data_.end(), [](const T& v) { return is_finite(v); })) {
            throw NonFiniteEntry("matrix entries must be finite");
        }
    }

    /// Row-list construction, e.g. `Matrix<double>::from_rows({{4, 2}, {2, 3}})`.
    static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<T> entries;
        entries.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionMismatch("ragged row list");
            entries.insert(entries.end(), row.begin(), row.end());
        }
        return Matrix(r, c, std::move(entries));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    static Matrix diagonal(std::span<const T> diag) {
        Matrix m(diag.size(), diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
        return *this;
    }

    Matrix& operator*=(T factor) noexcept {
        for (auto& v : data_) v *= factor;
        return *this;
    }

    friend Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
    friend Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
    friend Matrix operator*(Matrix lhs, T factor) { return lhs *= factor; }
    friend Matrix operator*(T factor, Matrix rhs) { return rhs *= factor; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Copy of the block starting at (r0, c0) with the given extent.
    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionMismatch("block out of range");
        Matrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            std::copy_n(data_.begin() + (r0 + i) * cols_ + c0, nc, b.data_.begin() + i * nc);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
        if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) throw DimensionMismatch("block out of range");
        for (std::size_t i = 0; i < b.rows_; ++i)
            std::copy_n(b.data_.begin() + i * b.cols_, b.cols_, data_.begin() + (r0 + i) * cols_ + c0);
    }

private:
    void require_same_shape(const Matrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionMismatch("shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;
using Vector = std::vector<double>;
using ComplexVector = std::vector<Complex>;

template <Scalar T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("multiply: inner dimensions differ");
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            if (aik == T{}) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// y = M x
template <Scalar T>
void multiply(const Matrix<T>& m, std::type_identity_t<std::span<const T>> x,
              std::type_identity_t<std::span<T>> y) {
    if (m.cols() != x.size() || m.rows() != y.size()) throw DimensionMismatch("matvec");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto mi = m.row(i);
        T acc{};
        for (std::size_t j = 0; j < mi.size(); ++j) acc += mi[j] * x[j];
        y[i] = acc;
    }
}

template <Scalar T>
std::vector<T> multiply(const Matrix<T>& m, std::type_identity_t<std::span<const T>> x) {
    std::vector<T> y(m.rows());
    multiply(m, x, std::span<T>(y));
    return y;
}

/// y += factor * M x
template <Scalar T>
void multiply_add(const Matrix<T>& m, std::type_identity_t<std::span<const T>> x,
                  std::type_identity_t<T> factor, std::type_identity_t<std::span<T>> y) {
    if (m.cols() != x.size() || m.rows() != y.size()) throw DimensionMismatch("matvec");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto mi = m.row(i);
        T acc{};
        for (std::size_t j = 0; j < mi.size(); ++j) acc += mi[j] * x[j];
        y[i] += factor * acc;
    }
}

/// y += factor * Mᵀ x
template <Scalar T>
void multiply_transpose_add(const Matrix<T>& m, std::type_identity_t<std::span<const T>> x,
                            std::type_identity_t<T> factor, std::type_identity_t<std::span<T>> y) {
    if (m.rows() != x.size() || m.cols() != y.size()) throw DimensionMismatch("matvec transpose");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const T xi = factor * x[i];
        if (xi == T{}) continue;
        auto mi = m.row(i);
        for (std::size_t j = 0; j < mi.size(); ++j) y[j] += mi[j] * xi;
    }
}

inline ComplexMatrix to_complex(const RealMatrix& m) {
    ComplexMatrix c(m.rows(), m.cols());
    auto src = m.data();
    auto dst = c.data();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k];
    return c;
}

template <Scalar T>
double frobenius_norm(const Matrix<T>& m) {
    double sum = 0.0;
    for (const auto& v : m.data()) sum += std::norm(v);
    return std::sqrt(sum);
}

template <Scalar T>
double max_abs(const Matrix<T>& m) {
    double best = 0.0;
    for (const auto& v : m.data()) best = std::max(best, std::abs(v));
    return best;
}

inline double max_abs(std::span<const double> v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

/// True when |M_ij - M_ji| <= rel_tol * max|M| for every pair.
inline bool is_symmetric(const RealMatrix& m, double rel_tol = 1e-12) {
    if (!m.is_square()) return false;
    const double scale = std::max(max_abs(m), 1e-300);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
    return true;
}

}  // namespace dabsor::linalg
