#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dabsor/errors.hpp"
#include "dabsor/linalg/factor.hpp"
#include "dabsor/linalg/matrix.hpp"

namespace dabsor::linalg {

/// Relative singular-value floor for `rank_full_column`.
inline constexpr double kRankTolerance = 1e-10;
/// QR sweeps allowed per unit of n² before `NoConvergence`.
inline constexpr std::size_t kQrBudgetPerN2 = 100;

struct EigenBounds {
    double min = 0.0;
    double max = 0.0;
};

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
inline Vector symmetric_eigenvalues(const RealMatrix& m) {
    if (!m.is_square()) throw DimensionMismatch("symmetric eigenvalues need a square matrix");
    const std::size_t n = m.rows();
    RealMatrix a = m;
    // Work on the exactly symmetric part.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    const double eps = std::numeric_limits<double>::epsilon();
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off <= eps * eps * std::max(diag, 1e-300)) break;
        if (sweep + 1 == kMaxSweeps) throw NoConvergence("Jacobi sweeps exhausted");

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                if (std::abs(apq) <= eps * 1e-3 * std::sqrt(std::abs(app * aqq))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
                const double c = 1.0 / std::hypot(t, 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    const double np = c * akp - s * akq;
                    const double nq = s * akp + c * akq;
                    a(k, p) = a(p, k) = np;
                    a(k, q) = a(q, k) = nq;
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }
    Vector eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

/// Extreme eigenvalues of a symmetric matrix.
inline EigenBounds sym_eig_bounds(const RealMatrix& m) {
    const Vector eig = symmetric_eigenvalues(m);
    if (eig.empty()) throw DimensionMismatch("empty matrix");
    return {eig.front(), eig.back()};
}

/// All eigenvalues of the pencil (S, T), i.e. of T⁻¹S, for symmetric S and SPD
/// T, through the congruent symmetric matrix L⁻¹ S L⁻ᵀ with T = L Lᵀ.
inline Vector generalized_symmetric_eigenvalues(const RealMatrix& s, const RealMatrix& t) {
    if (!s.is_square() || s.rows() != t.rows() || !t.is_square())
        throw DimensionMismatch("generalized eigenproblem shapes");
    const CholeskyFactor chol(t);
    const std::size_t n = s.rows();
    // X = L⁻¹ S (column by column), then W = L⁻¹ Xᵀ = L⁻¹ S L⁻ᵀ.
    RealMatrix x(n, n);
    Vector col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = s(i, j);
        chol.forward_in_place(col);
        for (std::size_t i = 0; i < n; ++i) x(i, j) = col[i];
    }
    RealMatrix w(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = x(j, i);
        chol.forward_in_place(col);
        for (std::size_t i = 0; i < n; ++i) w(i, j) = col[i];
    }
    return symmetric_eigenvalues(w);
}

inline EigenBounds gen_eig_bounds(const RealMatrix& s, const RealMatrix& t) {
    const Vector eig = generalized_symmetric_eigenvalues(s, t);
    if (eig.empty()) throw DimensionMismatch("empty matrix");
    return {eig.front(), eig.back()};
}

namespace detail {

/// Householder reduction to upper Hessenberg form; entries below the first
/// subdiagonal are set to exact zeros.
template <Scalar T>
void reduce_to_hessenberg(Matrix<T>& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    std::vector<T> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm2 += std::norm(h(i, k));
        double tail = norm2 - std::norm(h(k + 1, k));
        if (tail == 0.0) continue;
        const double norm = std::sqrt(norm2);
        const T x0 = h(k + 1, k);
        T phase = T{1};
        if (std::abs(x0) != 0.0) phase = x0 / std::abs(x0);
        const T alpha = -phase * norm;
        for (std::size_t i = 0; i < n; ++i) v[i] = T{};
        v[k + 1] = x0 - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = h(i, k);
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm2 += std::norm(v[i]);
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;

        // Left: H <- (I - beta v vᴴ) H
        for (std::size_t j = k; j < n; ++j) {
            T dot{};
            for (std::size_t i = k + 1; i < n; ++i) {
                if constexpr (is_complex<T>::value) {
                    dot += std::conj(v[i]) * h(i, j);
                } else {
                    dot += v[i] * h(i, j);
                }
            }
            dot *= beta;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= v[i] * dot;
        }
        // Right: H <- H (I - beta v vᴴ)
        for (std::size_t i = 0; i < n; ++i) {
            T dot{};
            for (std::size_t j = k + 1; j < n; ++j) dot += h(i, j) * v[j];
            dot *= beta;
            for (std::size_t j = k + 1; j < n; ++j) {
                if constexpr (is_complex<T>::value) {
                    h(i, j) -= dot * std::conj(v[j]);
                } else {
                    h(i, j) -= dot * v[j];
                }
            }
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = T{};
    }
}

/// Eigenvalues of a real upper Hessenberg matrix by Francis double-shift QR
/// (EISPACK hqr structure). Destroys `a`.
inline ComplexVector hessenberg_qr_real(RealMatrix& a) {
    const int n = static_cast<int>(a.rows());
    ComplexVector eig(a.rows());
    if (n == 0) return eig;
    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t budget = kQrBudgetPerN2 * a.rows() * a.rows();
    std::size_t total = 0;

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                eig[nn--] = Complex(x + t, 0.0);
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        eig[nn - 1] = eig[nn] = Complex(x + z, 0.0);
                        if (z != 0.0) eig[nn] = Complex(x - w / z, 0.0);
                    } else {
                        eig[nn] = Complex(x + p, -z);
                        eig[nn - 1] = std::conj(eig[nn]);
                    }
                    nn -= 2;
                } else {
                    if (++total > budget) throw NoConvergence("QR iteration budget exhausted");
                    if (its > 0 && its % 10 == 0) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                                        std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) a(i + 2, i - 1) = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k + 1 != nn) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return eig;
}

/// Eigenvalues of a complex upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts, applied as Givens rotations on the active block. Destroys `h`.
inline ComplexVector hessenberg_qr_complex(ComplexMatrix& h) {
    const std::size_t n = h.rows();
    ComplexVector eig(n);
    if (n == 0) return eig;
    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t budget = kQrBudgetPerN2 * n * n;
    std::size_t total = 0;

    double anorm = 0.0;
    for (const auto& v : h.data()) anorm = std::max(anorm, std::abs(v));
    if (anorm == 0.0) return eig;

    struct Rotation {
        double c;
        Complex s;
    };
    std::vector<Rotation> rot(n);

    std::size_t hi = n - 1;
    std::size_t its = 0;
    while (true) {
        if (hi == 0) {
            eig[0] = h(0, 0);
            break;
        }
        std::size_t lo = hi;
        while (lo > 0) {
            double s = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (s == 0.0) s = anorm;
            if (std::abs(h(lo, lo - 1)) <= eps * s) {
                h(lo, lo - 1) = Complex{};
                break;
            }
            --lo;
        }
        if (lo == hi) {
            eig[hi] = h(hi, hi);
            --hi;
            its = 0;
            continue;
        }
        if (++total > budget) throw NoConvergence("QR iteration budget exhausted");

        Complex mu;
        const Complex a = h(hi - 1, hi - 1);
        const Complex b = h(hi - 1, hi);
        const Complex c = h(hi, hi - 1);
        const Complex d = h(hi, hi);
        if (its > 0 && its % 10 == 0) {
            mu = d + Complex(0.75 * std::abs(c), 0.0);
        } else {
            const Complex half = 0.5 * (a - d);
            const Complex disc = std::sqrt(half * half + b * c);
            const Complex m1 = 0.5 * (a + d) + disc;
            const Complex m2 = 0.5 * (a + d) - disc;
            mu = std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
        }
        ++its;

        for (std::size_t k = lo; k <= hi; ++k) h(k, k) -= mu;
        for (std::size_t k = lo; k < hi; ++k) {
            const Complex x = h(k, k);
            const Complex y = h(k + 1, k);
            const double r = std::hypot(std::abs(x), std::abs(y));
            Rotation g{};
            if (r == 0.0) {
                g = {1.0, Complex{}};
            } else if (std::abs(x) == 0.0) {
                g = {0.0, std::conj(y) / r};
            } else {
                g = {std::abs(x) / r, (x / std::abs(x)) * std::conj(y) / r};
            }
            rot[k] = g;
            for (std::size_t j = k; j <= hi; ++j) {
                const Complex t1 = h(k, j);
                const Complex t2 = h(k + 1, j);
                h(k, j) = g.c * t1 + g.s * t2;
                h(k + 1, j) = -std::conj(g.s) * t1 + g.c * t2;
            }
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const Rotation g = rot[k];
            const std::size_t last = std::min(k + 1, hi);
            for (std::size_t i = lo; i <= last; ++i) {
                const Complex t1 = h(i, k);
                const Complex t2 = h(i, k + 1);
                h(i, k) = t1 * g.c + t2 * std::conj(g.s);
                h(i, k + 1) = -t1 * g.s + t2 * g.c;
            }
        }
        for (std::size_t k = lo; k <= hi; ++k) h(k, k) += mu;
    }
    return eig;
}

}  // namespace detail

/// All eigenvalues of a real square matrix (Hessenberg + Francis double-shift QR).
inline ComplexVector eigenvalues(const RealMatrix& m) {
    if (!m.is_square()) throw DimensionMismatch("eigenvalues need a square matrix");
    RealMatrix h = m;
    detail::reduce_to_hessenberg(h);
    return detail::hessenberg_qr_real(h);
}

/// All eigenvalues of a complex square matrix (Hessenberg + shifted complex QR).
inline ComplexVector eigenvalues(const ComplexMatrix& m) {
    if (!m.is_square()) throw DimensionMismatch("eigenvalues need a square matrix");
    ComplexMatrix h = m;
    detail::reduce_to_hessenberg(h);
    return detail::hessenberg_qr_complex(h);
}

template <Scalar T>
double spectral_radius(const Matrix<T>& m) {
    double rho = 0.0;
    for (const Complex& z : eigenvalues(m)) rho = std::max(rho, std::abs(z));
    return rho;
}

/// Singular values of M, descending, by one-sided (Hestenes) Jacobi rotations
/// on its columns. Small singular values keep full relative accuracy, which
/// the eigenvalues of MᵀM cannot deliver below √ε·σ_max.
inline Vector singular_values(const RealMatrix& m) {
    const std::size_t n = m.cols();
    RealMatrix cols = m.transpose();  // row j holds column j of M
    const double eps = std::numeric_limits<double>::epsilon();
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                auto up = cols.row(p);
                auto uq = cols.row(q);
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < up.size(); ++i) {
                    alpha += up[i] * up[i];
                    beta += uq[i] * uq[i];
                    gamma += up[i] * uq[i];
                }
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t i = 0; i < up.size(); ++i) {
                    const double a = up[i];
                    const double b = uq[i];
                    up[i] = c * a - s * b;
                    uq[i] = s * a + c * b;
                }
            }
        }
        if (!rotated) break;
        if (sweep + 1 == kMaxSweeps) throw NoConvergence("one-sided Jacobi sweeps exhausted");
    }
    Vector sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (double v : cols.row(j)) sum += v * v;
        sv[j] = std::sqrt(sum);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// True iff σ_min(M) > kRankTolerance · σ_max(M).
inline bool rank_full_column(const RealMatrix& m) {
    if (m.rows() < m.cols()) throw DimensionMismatch("rank_full_column needs rows >= cols");
    if (m.cols() == 0) return true;
    const Vector sv = singular_values(m);
    if (sv.front() <= 0.0) return false;
    return sv.back() > kRankTolerance * sv.front();
}

}  // namespace dabsor::linalg
