#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dabsor/errors.hpp"
#include "dabsor/linalg/matrix.hpp"

namespace dabsor::linalg {

/// Relative symmetry tolerance accepted by `cholesky`.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Lower-triangular Cholesky factor L with M = L Lᵀ, plus the substitutions
/// needed to apply M⁻¹. The factor is immutable once built, so one instance
/// can serve any number of solves.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const RealMatrix& m) : lower_(factorize(m)) {}

    const RealMatrix& lower() const noexcept { return lower_; }
    std::size_t size() const noexcept { return lower_.rows(); }

    /// Overwrites b with M⁻¹ b.
    void solve_in_place(std::span<double> b) const {
        const std::size_t n = size();
        if (b.size() != n) throw DimensionMismatch("cholesky solve");
        for (std::size_t i = 0; i < n; ++i) {
            auto li = lower_.row(i);
            double acc = b[i];
            for (std::size_t k = 0; k < i; ++k) acc -= li[k] * b[k];
            b[i] = acc / li[i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = b[ii];
            for (std::size_t k = ii + 1; k < n; ++k) acc -= lower_(k, ii) * b[k];
            b[ii] = acc / lower_(ii, ii);
        }
    }

    Vector solve(std::span<const double> b) const {
        Vector x(b.begin(), b.end());
        solve_in_place(x);
        return x;
    }

    /// Overwrites b with L⁻¹ b (forward substitution only).
    void forward_in_place(std::span<double> b) const {
        for (std::size_t i = 0; i < size(); ++i) {
            auto li = lower_.row(i);
            double acc = b[i];
            for (std::size_t k = 0; k < i; ++k) acc -= li[k] * b[k];
            b[i] = acc / li[i];
        }
    }

private:
    static RealMatrix factorize(const RealMatrix& m) {
        if (!m.is_square()) throw DimensionMismatch("cholesky needs a square matrix");
        if (!is_symmetric(m, kSymmetryTolerance)) throw NotSPD("matrix is not symmetric");
        const std::size_t n = m.rows();
        RealMatrix l(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            auto lj = l.row(j);
            double diag = m(j, j);
            for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
            if (!(diag > 0.0)) {
                throw NotSPD("non-positive pivot " + std::to_string(diag) + " at column " +
                             std::to_string(j));
            }
            const double ljj = std::sqrt(diag);
            lj[j] = ljj;
            for (std::size_t i = j + 1; i < n; ++i) {
                auto li = l.row(i);
                double acc = m(i, j);
                for (std::size_t k = 0; k < j; ++k) acc -= li[k] * lj[k];
                li[j] = acc / ljj;
            }
        }
        return l;
    }

    RealMatrix lower_;
};

/// Lower-triangular factor of a symmetric positive definite matrix.
inline RealMatrix cholesky(const RealMatrix& m) { return CholeskyFactor(m).lower(); }

/// True when `cholesky` would succeed.
inline bool is_spd(const RealMatrix& m) {
    try {
        CholeskyFactor f(m);
        return true;
    } catch (const NotSPD&) {
        return false;
    } catch (const DimensionMismatch&) {
        return false;
    }
}

/// LU factorization with partial pivoting, P M = L U, stored compactly.
template <Scalar T>
class LuFactor {
public:
    explicit LuFactor(Matrix<T> m) : lu_(std::move(m)), pivots_(lu_.rows()) {
        if (!lu_.is_square()) throw DimensionMismatch("LU needs a square matrix");
        const std::size_t n = lu_.rows();
        const double scale = std::max(max_abs(lu_), 1e-300);
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    p = i;
                }
            }
            if (best <= 1e-14 * scale) {
                throw SingularSystem("zero pivot in column " + std::to_string(k));
            }
            pivots_[k] = p;
            if (p != k) {
                auto rk = lu_.row(k);
                auto rp = lu_.row(p);
                std::swap_ranges(rk.begin(), rk.end(), rp.begin());
            }
            const T pivot = lu_(k, k);
            auto rk = lu_.row(k);
            for (std::size_t i = k + 1; i < n; ++i) {
                auto ri = lu_.row(i);
                const T factor = ri[k] / pivot;
                ri[k] = factor;
                if (factor == T{}) continue;
                for (std::size_t j = k + 1; j < n; ++j) ri[j] -= factor * rk[j];
            }
        }
    }

    std::size_t size() const noexcept { return lu_.rows(); }

    void solve_in_place(std::span<T> b) const {
        const std::size_t n = size();
        if (b.size() != n) throw DimensionMismatch("LU solve");
        for (std::size_t k = 0; k < n; ++k)
            if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
        for (std::size_t i = 0; i < n; ++i) {
            auto ri = lu_.row(i);
            T acc = b[i];
            for (std::size_t k = 0; k < i; ++k) acc -= ri[k] * b[k];
            b[i] = acc;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            auto ri = lu_.row(ii);
            T acc = b[ii];
            for (std::size_t k = ii + 1; k < n; ++k) acc -= ri[k] * b[k];
            b[ii] = acc / ri[ii];
        }
    }

    std::vector<T> solve(std::span<const T> b) const {
        std::vector<T> x(b.begin(), b.end());
        solve_in_place(x);
        return x;
    }

    /// M⁻¹ R, column by column.
    Matrix<T> solve(const Matrix<T>& rhs) const {
        if (rhs.rows() != size()) throw DimensionMismatch("LU solve matrix");
        Matrix<T> out(rhs.rows(), rhs.cols());
        std::vector<T> col(rhs.rows());
        for (std::size_t j = 0; j < rhs.cols(); ++j) {
            for (std::size_t i = 0; i < rhs.rows(); ++i) col[i] = rhs(i, j);
            solve_in_place(col);
            for (std::size_t i = 0; i < rhs.rows(); ++i) out(i, j) = col[i];
        }
        return out;
    }

private:
    Matrix<T> lu_;
    std::vector<std::size_t> pivots_;
};

/// Explicit inverse through LU; only used on small blocks and in test oracles.
template <Scalar T>
Matrix<T> inverse(const Matrix<T>& m) {
    return LuFactor<T>(m).solve(Matrix<T>::identity(m.rows()));
}

}  // namespace dabsor::linalg
