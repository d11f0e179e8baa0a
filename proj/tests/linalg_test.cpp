#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dabsor/linalg/eigen.hpp"
#include "dabsor/linalg/factor.hpp"
#include "test_support.hpp"

using namespace dabsor;
using namespace dabsor::linalg;
using dabsor::oracle::count_eigenvalues_below;

TEST(Matrix, RejectsNonFiniteEntries) {
    EXPECT_THROW(RealMatrix(1, 2, std::vector<double>{1.0, NAN}), NonFiniteEntry);
    EXPECT_THROW(RealMatrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), DimensionMismatch);
}

TEST(Cholesky, IdentityIsItsOwnFactor) {
    EXPECT_EQ(cholesky(RealMatrix::identity(3)), RealMatrix::identity(3));
}

TEST(Cholesky, TwoByTwo) {
    const RealMatrix l = cholesky(RealMatrix::from_rows({{4, 2}, {2, 3}}));
    EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(l(1, 0), 1.0);
    EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
    const RealMatrix back = multiply(l, l.transpose());
    EXPECT_LT(frobenius_norm(back - RealMatrix::from_rows({{4, 2}, {2, 3}})), 1e-14);
}

TEST(Cholesky, IndefiniteAndNonSquare) {
    EXPECT_THROW(cholesky(RealMatrix::from_rows({{1, 2}, {2, 1}})), NotSPD);
    EXPECT_THROW(cholesky(RealMatrix(2, 3)), DimensionMismatch);
}

TEST(Cholesky, ReconstructionOnRandomSpd) {
    std::mt19937_64 rng(7);
    for (std::size_t n : {1u, 2u, 5u, 17u, 40u}) {
        const RealMatrix m = oracle::random_spd(rng, n);
        const RealMatrix l = cholesky(m);
        EXPECT_LT(frobenius_norm(multiply(l, l.transpose()) - m) / frobenius_norm(m), 1e-10);
        const CholeskyFactor f(m);
        Vector b(n, 1.0);
        const Vector x = f.solve(b);
        const Vector mx = multiply(m, std::span<const double>(x));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(mx[i], 1.0, 1e-9);
    }
}

TEST(Lu, SolvesAndDetectsSingular) {
    const RealMatrix m = RealMatrix::from_rows({{0, 2, 1}, {1, 1, 0}, {3, 0, 1}});
    const LuFactor<double> lu(m);
    const Vector x = lu.solve(std::vector<double>{3, 2, 4});
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], 1.0, 1e-14);
    EXPECT_NEAR(x[2], 1.0, 1e-14);
    EXPECT_THROW(LuFactor<double>(RealMatrix::from_rows({{1, 2}, {2, 4}})), SingularSystem);
}

TEST(SymEig, DiagonalAndIdentity) {
    const std::vector<double> d{1.0, 2.0, 3.0};
    const auto b = sym_eig_bounds(RealMatrix::diagonal(d));
    EXPECT_EQ(b.min, 1.0);
    EXPECT_EQ(b.max, 3.0);
    const auto id = sym_eig_bounds(RealMatrix::identity(6));
    EXPECT_EQ(id.min, 1.0);
    EXPECT_EQ(id.max, 1.0);
    EXPECT_THROW(sym_eig_bounds(RealMatrix(2, 3)), DimensionMismatch);
}

TEST(SymEig, RandomMatchesInertiaOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = trial < 10 ? 5 : 12;
        const RealMatrix m = oracle::random_symmetric(rng, n);
        const Vector eig = symmetric_eigenvalues(m);
        const double scale = std::max(std::abs(eig.front()), std::abs(eig.back()));
        const double gap = 1e-10 * scale;
        // Sylvester inertia brackets every computed eigenvalue.
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0 && eig[k] - eig[k - 1] < 4 * gap) continue;
            if (k + 1 < n && eig[k + 1] - eig[k] < 4 * gap) continue;
            EXPECT_EQ(count_eigenvalues_below(m, eig[k] - gap), static_cast<int>(k));
            EXPECT_EQ(count_eigenvalues_below(m, eig[k] + gap), static_cast<int>(k + 1));
        }
        // Independent route: nonsymmetric QR on the same matrix.
        ComplexVector z = eigenvalues(m);
        std::vector<double> re;
        for (const auto& v : z) re.push_back(v.real());
        std::sort(re.begin(), re.end());
        EXPECT_NEAR(re.front(), eig.front(), 1e-10 * scale);
        EXPECT_NEAR(re.back(), eig.back(), 1e-10 * scale);
    }
}

TEST(GenEig, IdenticalAndScaled) {
    std::mt19937_64 rng(3);
    const RealMatrix t = oracle::random_spd(rng, 4);
    const auto same = gen_eig_bounds(t, t);
    EXPECT_NEAR(same.min, 1.0, 1e-12);
    EXPECT_NEAR(same.max, 1.0, 1e-12);
    const auto twice = gen_eig_bounds(2.0 * t, t);
    EXPECT_NEAR(twice.min, 2.0, 1e-12);
    EXPECT_NEAR(twice.max, 2.0, 1e-12);
    EXPECT_THROW(gen_eig_bounds(t, RealMatrix::from_rows({{1, 2}, {2, 1}})), DimensionMismatch);
    const RealMatrix s2 = oracle::random_symmetric(rng, 2);
    EXPECT_THROW(gen_eig_bounds(s2, RealMatrix::from_rows({{1, 2}, {2, 1}})), NotSPD);
}

TEST(GenEig, RandomPairMatchesInverseMultiply) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const RealMatrix s = oracle::random_spd(rng, 4);
        const RealMatrix t = oracle::random_spd(rng, 4);
        const auto b = gen_eig_bounds(s, t);
        const ComplexVector z = eigenvalues(multiply(inverse(t), s));
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& v : z) {
            EXPECT_NEAR(v.imag(), 0.0, 1e-9 * std::abs(v));
            lo = std::min(lo, v.real());
            hi = std::max(hi, v.real());
        }
        EXPECT_NEAR(b.min, lo, 1e-10 * hi);
        EXPECT_NEAR(b.max, hi, 1e-10 * hi);
    }
}

TEST(GenEig, ScalesLinearly) {
    std::mt19937_64 rng(9);
    const RealMatrix s = oracle::random_symmetric(rng, 6);
    const RealMatrix t = oracle::random_spd(rng, 6);
    const auto base = gen_eig_bounds(s, t);
    for (double c : {0.5, 3.0, 1e3}) {
        const auto scaled = gen_eig_bounds(c * s, t);
        const double scale = std::max(std::abs(base.min), std::abs(base.max));
        EXPECT_NEAR(scaled.min, c * base.min, 1e-10 * c * scale);
        EXPECT_NEAR(scaled.max, c * base.max, 1e-10 * c * scale);
    }
}

TEST(SpectralRadius, ZeroAndRotation) {
    EXPECT_EQ(spectral_radius(RealMatrix(4, 4)), 0.0);
    EXPECT_NEAR(spectral_radius(RealMatrix::from_rows({{0, -1}, {1, 0}})), 1.0, 1e-15);
    EXPECT_NEAR(spectral_radius(to_complex(RealMatrix::from_rows({{0, -1}, {1, 0}}))), 1.0, 1e-15);
}

TEST(SpectralRadius, TwoByTwoClosedForm) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const RealMatrix m = oracle::random_matrix(rng, 2, 2);
        const double tr = m(0, 0) + m(1, 1);
        const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const Complex disc = std::sqrt(Complex(tr * tr / 4.0 - det, 0.0));
        const double expected = std::max(std::abs(tr / 2.0 + disc), std::abs(tr / 2.0 - disc));
        EXPECT_NEAR(spectral_radius(m), expected, 1e-12);
    }
}

TEST(SpectralRadius, RandomMatchesCharacteristicPolynomialRoots) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const RealMatrix m = oracle::random_matrix(rng, 6, 6);
        const auto roots = oracle::polynomial_roots(oracle::characteristic_polynomial(to_complex(m)));
        double expected = 0.0;
        for (const auto& r : roots) expected = std::max(expected, std::abs(r));
        EXPECT_NEAR(spectral_radius(m), expected, 1e-8 * expected);
        EXPECT_NEAR(spectral_radius(to_complex(m)), expected, 1e-8 * expected);
    }
}

TEST(SpectralRadius, ComplexInput) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        ComplexMatrix m(7, 7);
        for (auto& v : m.data()) v = Complex(dist(rng), dist(rng));
        const auto roots = oracle::polynomial_roots(oracle::characteristic_polynomial(m));
        double expected = 0.0;
        for (const auto& r : roots) expected = std::max(expected, std::abs(r));
        EXPECT_NEAR(spectral_radius(m), expected, 1e-8 * expected);
    }
}

TEST(SpectralRadius, SimilarityInvariant) {
    std::mt19937_64 rng(23);
    for (std::size_t n : {5u, 20u, 60u}) {
        const RealMatrix m = oracle::random_matrix(rng, n, n);
        RealMatrix s = oracle::random_matrix(rng, n, n);
        for (std::size_t i = 0; i < n; ++i) s(i, i) += 3.0;
        const RealMatrix similar = multiply(multiply(inverse(s), m), s);
        const double rho = spectral_radius(m);
        EXPECT_NEAR(spectral_radius(similar), rho, 1e-8 * rho);
        // Real double-shift and complex single-shift paths agree.
        EXPECT_NEAR(spectral_radius(to_complex(m)), rho, 1e-8 * rho);
    }
}

TEST(SpectralRadius, ConjugatePairDominates) {
    // Block diag of a scaled rotation (|λ| = 2) and a real eigenvalue 1.5.
    RealMatrix m(3, 3);
    m(0, 0) = 0.0;
    m(0, 1) = -2.0;
    m(1, 0) = 2.0;
    m(2, 2) = 1.5;
    EXPECT_NEAR(spectral_radius(m), 2.0, 1e-14);
}

TEST(Rank, FullColumn) {
    EXPECT_TRUE(rank_full_column(RealMatrix::identity(4)));
    RealMatrix dup = RealMatrix::from_rows({{1, 2, 1}, {3, 4, 3}, {5, 7, 5}, {0, 1, 0}});
    EXPECT_FALSE(rank_full_column(dup));
    EXPECT_THROW(rank_full_column(RealMatrix(2, 3)), DimensionMismatch);
    std::mt19937_64 rng(29);
    EXPECT_TRUE(rank_full_column(oracle::random_matrix(rng, 10, 4)));
}
