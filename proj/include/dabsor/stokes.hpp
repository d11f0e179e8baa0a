#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dabsor/errors.hpp"
#include "dabsor/linalg/eigen.hpp"
#include "dabsor/linalg/factor.hpp"
#include "dabsor/linalg/matrix.hpp"

/// Finite-difference semi-discretization of the 2-D time-dependent Stokes
/// problem on [-1,1]² into the saddle DAE  ℬż + 𝒜z = b(t)  with
/// ℬ = diag(I, 0) and 𝒜 = [A B; -Bᵀ 0].
///
/// Unknowns live on the ℓx×ℓy interior nodes of a uniform collocated grid and
/// are ordered u (x fastest), then v, then p. The Laplacian is the centered
/// five-point stencil, the pressure gradient a forward difference and the
/// divergence a backward difference; the latter is exactly -Bᵀ on this grid.
namespace dabsor::stokes {

using linalg::RealMatrix;
using linalg::Vector;

struct GridSpec {
    std::size_t nx = 12;  ///< interior points in x
    std::size_t ny = 12;  ///< interior points in y
    double viscosity = 1.0;

    double hx() const noexcept { return 2.0 / static_cast<double>(nx + 1); }
    double hy() const noexcept { return 2.0 / static_cast<double>(ny + 1); }
    std::size_t nodes() const noexcept { return nx * ny; }
    double x(std::size_t i) const noexcept { return -1.0 + static_cast<double>(i + 1) * hx(); }
    double y(std::size_t j) const noexcept { return -1.0 + static_cast<double>(j + 1) * hy(); }
    std::size_t node(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
};

inline GridSpec square_grid(std::size_t points, double viscosity = 1.0) {
    return GridSpec{points, points, viscosity};
}

enum class Preconditioner { Q1, Q2 };

inline std::string_view to_string(Preconditioner p) noexcept {
    return p == Preconditioner::Q1 ? "Q1" : "Q2";
}

struct StokesSystem {
    RealMatrix A;  ///< r×r velocity block, SPD
    RealMatrix B;  ///< r×l pressure gradient, full column rank
    RealMatrix Q;  ///< l×l Schur-complement preconditioner; empty until attached
    GridSpec grid;

    std::size_t r() const noexcept { return A.rows(); }
    std::size_t l() const noexcept { return B.cols(); }
    std::size_t size() const noexcept { return r() + l(); }
    bool has_preconditioner() const noexcept { return !Q.empty(); }
};

/// Constants of the closed-form reference flow. Defaults reproduce the
/// standard test configuration.
struct AnalyticConstants {
    double theta = 1.0;
    double zeta = 11.6348;
    double kappa = 3.5545;
    double c1 = 3.390472650419484;
    double c2 = 1.0;
    double viscosity = 1.0;
};

struct FlowValue {
    double u = 0.0;
    double v = 0.0;
    double p = 0.0;
};

/// u = 𝐮(y)e^{θx-ζt}, v = 𝐯(y)e^{θx-ζt}, p = 𝐩(y)e^{θx-ζt}.
inline FlowValue analytic_solution(double x, double y, double t, const AnalyticConstants& c) {
    const double decay = std::exp(c.theta * x - c.zeta * t);
    const double u = c.c1 * std::sin(c.theta * y) + (2.0 * c.kappa / c.theta) * c.c2 * std::sin(c.kappa * y);
    const double v = c.c1 * std::cos(c.theta * y) + 2.0 * c.c2 * std::cos(c.kappa * y);
    const double p = (c.zeta / c.theta) * c.c1 * std::sin(c.theta * y);
    return {u * decay, v * decay, p * decay};
}

/// Assembles A and B (Q left empty).
inline StokesSystem assemble(const GridSpec& grid) {
    if (grid.nx < 2 || grid.ny < 2) {
        throw GridTooSmall("need at least 2 interior points per direction, got " +
                           std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
    }
    if (!(grid.viscosity > 0.0)) throw InvalidArgument("viscosity must be positive");
    const std::size_t nodes = grid.nodes();
    const std::size_t r = 2 * nodes;
    const double ihx2 = 1.0 / (grid.hx() * grid.hx());
    const double ihy2 = 1.0 / (grid.hy() * grid.hy());
    const double nu = grid.viscosity;

    StokesSystem sys;
    sys.grid = grid;
    sys.A = RealMatrix(r, r);
    for (std::size_t comp = 0; comp < 2; ++comp) {
        const std::size_t off = comp * nodes;
        for (std::size_t j = 0; j < grid.ny; ++j) {
            for (std::size_t i = 0; i < grid.nx; ++i) {
                const std::size_t k = off + grid.node(i, j);
                sys.A(k, k) = nu * 2.0 * (ihx2 + ihy2);
                if (i > 0) sys.A(k, off + grid.node(i - 1, j)) = -nu * ihx2;
                if (i + 1 < grid.nx) sys.A(k, off + grid.node(i + 1, j)) = -nu * ihx2;
                if (j > 0) sys.A(k, off + grid.node(i, j - 1)) = -nu * ihy2;
                if (j + 1 < grid.ny) sys.A(k, off + grid.node(i, j + 1)) = -nu * ihy2;
            }
        }
    }

    // Forward differences of p; the neighbour beyond the last interior node
    // is a boundary value and is carried by the right-hand side.
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    sys.B = RealMatrix(r, nodes);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const std::size_t k = grid.node(i, j);
            sys.B(k, k) = -ihx;
            if (i + 1 < grid.nx) sys.B(k, grid.node(i + 1, j)) = ihx;
            sys.B(nodes + k, k) = -ihy;
            if (j + 1 < grid.ny) sys.B(nodes + k, grid.node(i, j + 1)) = ihy;
        }
    }
    return sys;
}

/// Q = Bᵀ Â⁻¹ B with Â = tridiag(A) for Q1 or diag(A) for Q2.
inline RealMatrix build_preconditioner(const StokesSystem& sys, Preconditioner choice) {
    const std::size_t r = sys.r();
    RealMatrix part(r, r);
    for (std::size_t i = 0; i < r; ++i) {
        part(i, i) = sys.A(i, i);
        if (choice == Preconditioner::Q1) {
            if (i > 0) part(i, i - 1) = sys.A(i, i - 1);
            if (i + 1 < r) part(i, i + 1) = sys.A(i, i + 1);
        }
    }
    const linalg::CholeskyFactor chol(part);  // NotSPD here means a broken A
    const std::size_t l = sys.l();
    RealMatrix solved(r, l);
    Vector col(r);
    for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t i = 0; i < r; ++i) col[i] = sys.B(i, j);
        chol.solve_in_place(col);
        for (std::size_t i = 0; i < r; ++i) solved(i, j) = col[i];
    }
    RealMatrix q = linalg::multiply(sys.B.transpose(), solved);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = i + 1; j < l; ++j) q(i, j) = q(j, i) = 0.5 * (q(i, j) + q(j, i));
    return q;
}

inline StokesSystem with_preconditioner(StokesSystem sys, Preconditioner choice) {
    sys.Q = build_preconditioner(sys, choice);
    return sys;
}

inline StokesSystem make_system(const GridSpec& grid, Preconditioner choice) {
    return with_preconditioner(assemble(grid), choice);
}

/// Grid-sampled analytic state z⋆(t) = (u; v; p).
inline Vector sample_state(const GridSpec& grid, const AnalyticConstants& c, double t) {
    const std::size_t nodes = grid.nodes();
    Vector z(3 * nodes);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const FlowValue f = analytic_solution(grid.x(i), grid.y(j), t, c);
            const std::size_t k = grid.node(i, j);
            z[k] = f.u;
            z[nodes + k] = f.v;
            z[2 * nodes + k] = f.p;
        }
    }
    return z;
}

/// Damped initial guess z⋆(0)/(1 + 10000ζt) used to seed every window level.
inline Vector initial_wave(const GridSpec& grid, const AnalyticConstants& c, double t) {
    Vector z = sample_state(grid, c, 0.0);
    const double damp = 1.0 / (1.0 + 10000.0 * c.zeta * t);
    for (auto& v : z) v *= damp;
    return z;
}

/// b(t) = ℬż⋆(t) + 𝒜z⋆(t) for the sampled analytic state, with ż⋆ = -ζ z⋆.
inline Vector manufactured_rhs(const StokesSystem& sys, const AnalyticConstants& c, double t) {
    const Vector z = sample_state(sys.grid, c, t);
    const std::size_t r = sys.r();
    const std::size_t l = sys.l();
    std::span<const double> x(z.data(), r);
    std::span<const double> y(z.data() + r, l);
    Vector b(r + l, 0.0);
    std::span<double> f(b.data(), r);
    std::span<double> g(b.data() + r, l);
    for (std::size_t i = 0; i < r; ++i) f[i] = -c.zeta * x[i];
    linalg::multiply_add(sys.A, x, 1.0, f);
    linalg::multiply_add(sys.B, y, 1.0, f);
    linalg::multiply_transpose_add(sys.B, x, -1.0, g);
    return b;
}

/// Right-hand sides b_n at t_n = t0 + n·Δt, n = 0..count-1.
inline std::vector<Vector> rhs_sequence(const StokesSystem& sys, const AnalyticConstants& c, double t0,
                                        double dt, std::size_t count) {
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (count == 0) throw InvalidArgument("rhs_sequence needs at least one level");
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n)
        out.push_back(manufactured_rhs(sys, c, t0 + static_cast<double>(n) * dt));
    return out;
}

/// Structural checks every assembled system must pass.
struct SystemChecks {
    bool a_symmetric = false;
    bool a_spd = false;
    bool b_full_rank = false;
    bool q_symmetric = false;
    bool q_spd = false;
};

inline SystemChecks check_system(const StokesSystem& sys) {
    SystemChecks out;
    out.a_symmetric = linalg::is_symmetric(sys.A, 0.0);
    out.a_spd = linalg::is_spd(sys.A);
    out.b_full_rank = linalg::rank_full_column(sys.B);
    if (sys.has_preconditioner()) {
        out.q_symmetric = linalg::is_symmetric(sys.Q, 0.0);
        out.q_spd = linalg::is_spd(sys.Q);
    }
    return out;
}

/// MatrixMarket coordinate export (real general, 1-based, nonzeros only).
inline void write_matrix_market(std::ostream& os, const RealMatrix& m, std::string_view comment = {}) {
    std::size_t nnz = 0;
    for (double v : m.data())
        if (v != 0.0) ++nnz;
    os << "%%MatrixMarket matrix coordinate real general\n";
    if (!comment.empty()) os << "% " << comment << "\n";
    os << m.rows() << " " << m.cols() << " " << nnz << "\n";
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << (i + 1) << " " << (j + 1) << " " << buf << "\n";
        }
    }
}

}  // namespace dabsor::stokes
