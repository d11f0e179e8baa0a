#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "dabsor/bdf.hpp"
#include "dabsor/errors.hpp"
#include "dabsor/linalg/eigen.hpp"
#include "dabsor/linalg/factor.hpp"
#include "dabsor/linalg/matrix.hpp"
#include "dabsor/stokes.hpp"
#include "dabsor/waveform.hpp"

/// Symbol analysis of the block SOR waveform relaxation: K(s), finite- and
/// infinite-interval radii, the convergence domain, eigenvalue envelopes and
/// the optimal (ω, τ) curve.
namespace dabsor::spectral {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::Matrix;
using linalg::RealMatrix;
using linalg::Vector;
using stokes::StokesSystem;

/// Extreme eigenvalues of A (η) and of (BᵀB)⁻¹Q (μ), plus the σ they are paired with.
struct SpectralBounds {
    double sigma = 0.0;
    double eta_min = 0.0;
    double eta_max = 0.0;
    double mu_min = 0.0;
    double mu_max = 0.0;

    double delta_min() const noexcept { return sigma / eta_max; }
    double delta_max() const noexcept { return sigma / eta_min; }
    double gamma_min() const noexcept { return 1.0 / (eta_max * mu_max); }
    double gamma_max() const noexcept { return 1.0 / (eta_min * mu_min); }
};

inline SpectralBounds compute_bounds(const StokesSystem& sys, double sigma_value) {
    if (!sys.has_preconditioner()) throw InvalidArgument("system has no preconditioner attached");
    const auto eta = linalg::sym_eig_bounds(sys.A);
    const auto mu = linalg::gen_eig_bounds(sys.Q, linalg::multiply(sys.B.transpose(), sys.B));
    if (!(eta.min > 0.0) || !(mu.min > 0.0)) throw NotSPD("A and Q must be positive definite");
    return {sigma_value, eta.min, eta.max, mu.min, mu.max};
}

/// K(s) = (sM_ℬ + M_𝒜)⁻¹ N_𝒜, assembled by the two block solves of the
/// lower-triangular left factor.
template <linalg::Scalar T>
Matrix<T> symbol_K(T s, const StokesSystem& sys, double omega, double tau) {
    if (!sys.has_preconditioner()) throw InvalidArgument("system has no preconditioner attached");
    const std::size_t r = sys.r(), l = sys.l(), n = r + l;
    Matrix<T> top_lhs(r, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) top_lhs(i, j) = sys.A(i, j) / omega;
    for (std::size_t i = 0; i < r; ++i) top_lhs(i, i) += s;
    Matrix<T> rhs(r, n);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) rhs(i, j) = (1.0 / omega - 1.0) * sys.A(i, j);
        for (std::size_t j = 0; j < l; ++j) rhs(i, r + j) = -sys.B(i, j);
    }
    Matrix<T> top;
    try {
        top = linalg::LuFactor<T>(top_lhs).solve(rhs);
    } catch (const SingularSystem&) {
        throw SingularSymbol("sI + A/ω is singular at this s");
    }
    // Q y = τ Bᵀ x_top + Q [0 I] / τ · τ, i.e. y = τ Q⁻¹ Bᵀ top + [0 I].
    Matrix<T> bt_top(l, n);
    for (std::size_t i = 0; i < r; ++i) {
        auto ti = top.row(i);
        for (std::size_t k = 0; k < l; ++k) {
            const double b = sys.B(i, k);
            if (b == 0.0) continue;
            auto row = bt_top.row(k);
            for (std::size_t j = 0; j < n; ++j) row[j] += b * ti[j];
        }
    }
    Matrix<T> qmat(l, l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) qmat(i, j) = sys.Q(i, j);
    Matrix<T> bottom;
    try {
        bottom = linalg::LuFactor<T>(qmat).solve(bt_top);
    } catch (const SingularSystem&) {
        throw SingularSymbol("Q is singular");
    }
    Matrix<T> k(n, n);
    k.set_block(0, 0, top);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < n; ++j) k(r + i, j) = tau * bottom(i, j);
        k(r + i, r + i) += 1.0;
    }
    return k;
}

/// ρ(K(σ)), σ = α_ν/(β_ν Δt): the finite-interval convergence factor.
inline double finite_interval_radius(const StokesSystem& sys, const BDFScheme& scheme, double dt, double omega,
                                     double tau) {
    if (!check_solvability(scheme, dt, sys, {omega, tau})) throw SingularSystem("discrete solvability fails");
    return linalg::spectral_radius(symbol_K(sigma(scheme, dt), sys, omega, tau));
}

namespace detail {

inline Complex poly_eval(const std::vector<double>& c, Complex z) {
    Complex acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
    return acc;
}

/// Roots of Σ c_j z^j through the companion matrix.
inline linalg::ComplexVector poly_roots(const std::vector<Complex>& c) {
    std::size_t deg = c.size() - 1;
    while (deg > 0 && std::abs(c[deg]) == 0.0) --deg;
    if (deg == 0) return {};
    ComplexMatrix comp(deg, deg);
    for (std::size_t i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (std::size_t i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
    return linalg::eigenvalues(comp);
}

inline bool roots_inside_unit_disk(const std::vector<Complex>& c) {
    for (const auto& z : poly_roots(c))
        if (!(std::abs(z) < 1.0)) return false;
    return true;
}

}  // namespace detail

/// Max entrywise |K_Δt(s) − K((a/b)(s)/Δt)| with K_Δt assembled directly as
/// (a(s)M_ℬ + Δt b(s)M_𝒜)⁻¹(a(s)N_ℬ + Δt b(s)N_𝒜).
inline double laplace_relation_check(const StokesSystem& sys, const BDFScheme& scheme, double dt, double omega,
                                     double tau, Complex s) {
    const Complex a = detail::poly_eval(scheme.alpha, s);
    const Complex b = detail::poly_eval(scheme.beta, s);
    if (std::abs(b) == 0.0) throw SingularSymbol("b(s) vanishes");
    const std::size_t r = sys.r(), l = sys.l(), n = r + l;
    ComplexMatrix lhs(n, n), rhs(n, n);
    const Complex db = dt * b;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            lhs(i, j) = db * sys.A(i, j) / omega;
            rhs(i, j) = db * (1.0 / omega - 1.0) * sys.A(i, j);
        }
        lhs(i, i) += a;
        for (std::size_t j = 0; j < l; ++j) rhs(i, r + j) = -db * sys.B(i, j);
    }
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < r; ++j) lhs(r + i, j) = -db * sys.B(j, i);
        for (std::size_t j = 0; j < l; ++j) {
            lhs(r + i, r + j) = db * sys.Q(i, j) / tau;
            rhs(r + i, r + j) = db * sys.Q(i, j) / tau;
        }
    }
    ComplexMatrix direct;
    try {
        direct = linalg::LuFactor<Complex>(lhs).solve(rhs);
    } catch (const SingularSystem&) {
        throw SingularSymbol("discrete symbol is singular at this s");
    }
    const ComplexMatrix mapped = symbol_K(a / b / dt, sys, omega, tau);
    return linalg::max_abs(direct - mapped);
}

struct LocusSweep {
    double radius = 0.0;
    double theta_at_max = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

/// sup over the boundary locus s = (a/b)(e^{iθ})/Δt of ρ(K(s)). Conjugate
/// symmetry of the real symbol lets the sweep stop at θ = π.
inline LocusSweep infinite_interval_sweep(const StokesSystem& sys, const BDFScheme& scheme, double dt, double omega,
                                          double tau, std::size_t samples = 720) {
    if (samples < 2) throw InvalidArgument("need at least 2 locus samples");
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    // ∞ ∈ S: the roots of b lie inside the unit disk.
    std::vector<Complex> bc(scheme.beta.begin(), scheme.beta.end());
    if (!detail::roots_inside_unit_disk(bc)) throw StabilityViolation("roots of b(z) leave the unit disk");
    // Finite pencil eigenvalues -Δt η/ω must be interior points of S.
    const Vector eta = linalg::symmetric_eigenvalues(sys.A);
    for (double e : eta) {
        const double w = -dt * e / omega;
        std::vector<Complex> c(scheme.alpha.size());
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = scheme.alpha[j] - w * scheme.beta[j];
        if (!detail::roots_inside_unit_disk(c))
            throw StabilityViolation("pencil eigenvalue " + std::to_string(w) + " lies outside the stability region");
    }

    LocusSweep out;
    const std::size_t half = samples / 2;
    for (std::size_t k = 0; k <= half; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
        const Complex z = std::polar(1.0, theta);
        const Complex b = detail::poly_eval(scheme.beta, z);
        if (std::abs(b) < 1e-14) {
            ++out.skipped;
            continue;
        }
        const Complex s = detail::poly_eval(scheme.alpha, z) / (b * dt);
        double gap = HUGE_VAL;
        for (double e : eta) gap = std::min(gap, std::abs(s + e / omega));
        if (gap < 1e-8 * std::max(1.0, std::abs(s))) {
            ++out.skipped;
            continue;
        }
        double rho = 0.0;
        try {
            rho = linalg::spectral_radius(symbol_K(s, sys, omega, tau));
        } catch (const SingularSymbol&) {
            ++out.skipped;
            continue;
        }
        ++out.evaluated;
        if (rho > out.radius) {
            out.radius = rho;
            out.theta_at_max = theta;
        }
    }
    return out;
}

inline double infinite_interval_radius(const StokesSystem& sys, const BDFScheme& scheme, double dt, double omega,
                                       double tau, std::size_t samples = 720) {
    return infinite_interval_sweep(sys, scheme, dt, omega, tau, samples).radius;
}

/// Sufficient convergence condition of the block SOR waveform method, with
/// the case picked by the signs of σ/η_min and σ/η_max.
inline bool convergence_domain(double omega, double tau, double sigma_value, const SpectralBounds& b) {
    const double lo = sigma_value / b.eta_max;  // σ/η_max
    const double hi = sigma_value / b.eta_min;  // σ/η_min
    const double scale = 2.0 * b.eta_min * b.mu_min;
    if (lo >= 0.0) {
        return omega > 0.0 && omega < 2.0 && tau > 0.0 && tau < scale * (2.0 / omega + lo - 1.0);
    }
    if (-1.0 < hi && hi <= lo && lo < 0.0) {
        return omega > 0.0 && omega < 2.0 * b.eta_min / (b.eta_min - sigma_value) && tau > 0.0 &&
               tau < scale * (2.0 / omega + hi - 1.0);
    }
    if (hi <= lo && lo < -1.0) {
        return omega > 2.0 * b.eta_max / (b.eta_max - sigma_value) && omega < 2.0 &&
               tau > scale * (2.0 / omega + lo - 1.0) && tau < 0.0;
    }
    return false;
}

/// g(ω, δ) = √((1-ω)/(1+ωδ)).
inline double g_branch(double omega, double delta) { return std::sqrt((1.0 - omega) / (1.0 + omega * delta)); }

/// Largest root magnitude of (1+ωδ)λ² + (τωγ - ωδ + ω - 2)λ + (1-ω) = 0.
inline double envelope_functions(double omega, double tau, double gamma, double delta) {
    const double lead = 1.0 + omega * delta;
    const double p = 2.0 - omega + omega * delta - tau * omega * gamma;
    const double disc = p * p - 4.0 * (1.0 - omega) * lead;
    if (disc <= 0.0) return g_branch(omega, delta);
    const double root = std::sqrt(disc);
    return std::max(std::abs(p + root), std::abs(p - root)) / (2.0 * lead);
}

/// ϑ(ω) = δ[(η²+4δ)η − δ(δ−1)²]ω² − 2δ(η+τγ)τγω − 4τ²γ², η = τγ − δ + 1.
inline double theta_fn(double omega, double tau, double gamma, double delta) {
    const double tg = tau * gamma;
    const double eta = tg - delta + 1.0;
    return delta * ((eta * eta + 4.0 * delta) * eta - delta * (delta - 1.0) * (delta - 1.0)) * omega * omega -
           2.0 * delta * (eta + tg) * tg * omega - 4.0 * tg * tg;
}

struct AssumptionReport {
    bool a1 = false;  // ωσ/τ ∉ sp(Q⁻¹BᵀB)
    bool a2 = false;  // ϑ ≤ 0 on its region, δ > 1 corners
    bool a3 = false;  // ϑ ≤ 0 on its region, δ ≤ 1 corners
};

/// Evaluates the three assumptions at (ω, τ) over the corner values of γ and δ.
inline AssumptionReport check_assumptions(const StokesSystem& sys, double omega, double tau,
                                          const SpectralBounds& b) {
    AssumptionReport out;
    const Vector sp = linalg::generalized_symmetric_eigenvalues(linalg::multiply(sys.B.transpose(), sys.B), sys.Q);
    const double probe = omega * b.sigma / tau;
    out.a1 = std::all_of(sp.begin(), sp.end(), [&](double v) {
        return std::abs(v - probe) > 1e-10 * std::max(std::abs(v), std::abs(probe));
    });
    out.a2 = true;
    out.a3 = true;
    for (double gamma : {b.gamma_min(), b.gamma_max()}) {
        for (double delta : {b.delta_min(), b.delta_max()}) {
            const double tg = tau * gamma;
            const double eta = tg - delta + 1.0;
            const double w_lo = 4.0 * tg / (eta * eta + 4.0 * delta);
            const bool upper = eta > 0.0 && omega < 2.0 / eta;
            const bool holds = theta_fn(omega, tau, gamma, delta) <= 0.0;
            if (delta > 1.0) {
                const bool region = (omega > w_lo && tg < delta - 1.0) ||
                                    (omega > w_lo && upper && delta - 1.0 < tg && tg < delta + 1.0);
                if (region && !holds) out.a2 = false;
            } else {
                const bool region = omega > w_lo && upper && 0.0 < tg && tg < delta + 1.0;
                if (region && !holds) out.a3 = false;
            }
        }
    }
    return out;
}

struct OptimalResult {
    double delta_star = 0.0;
    double tau_opt = 0.0;
    double omega_opt = 0.0;
    double rho_opt = 0.0;
};

/// Optimal point on the curve (τ_opt(δ), ω_opt(δ)); ρ_opt does not depend on δ.
inline OptimalResult optimal_params(const SpectralBounds& b, std::optional<double> delta_star = std::nullopt) {
    if (!(b.sigma > 0.0)) throw InvalidArgument("optimal parameters need σ > 0");
    const double dmin = b.delta_min(), dmax = b.delta_max();
    double d = 0.0;
    if (!(dmin < dmax)) {
        d = dmin;  // scalar A: the curve collapses to one point
    } else if (delta_star) {
        d = *delta_star;
        if (!(d >= dmin && d <= dmax)) throw InvalidArgument("δ* must lie in [δ_min, δ_max]");
    } else {
        d = b.sigma / std::sqrt(b.eta_min * b.eta_max);
    }
    const double gmin = b.gamma_min(), gmax = b.gamma_max();
    const double root = std::sqrt(gmin * gmax);
    OptimalResult out;
    out.delta_star = d;
    out.tau_opt = (d + 1.0) / root;
    out.omega_opt = 4.0 * root / ((d + 1.0) * (gmin + gmax) - 2.0 * (d - 1.0) * root);
    out.rho_opt = (std::sqrt(gmax) - std::sqrt(gmin)) / (std::sqrt(gmax) + std::sqrt(gmin));
    return out;
}

struct SurfacePoint {
    double omega = 0.0;
    double tau = 0.0;
    double rho = 0.0;
    bool solvable = true;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 1) return {lo};
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

/// ρ(K(σ)) on a resolution×resolution grid, ω outer and τ inner, endpoints included.
inline std::vector<SurfacePoint> sweep_surface(const StokesSystem& sys, const BDFScheme& scheme, double dt,
                                               double omega_lo, double omega_hi, double tau_lo, double tau_hi,
                                               std::size_t resolution) {
    if (resolution < 1) throw InvalidArgument("resolution must be positive");
    if (!(omega_lo > 0.0) || !(tau_lo > 0.0) || omega_hi < omega_lo || tau_hi < tau_lo)
        throw InvalidArgument("surface ranges must be positive and ordered");
    const double s = sigma(scheme, dt);
    std::vector<SurfacePoint> out;
    out.reserve(resolution * resolution);
    for (double w : linspace(omega_lo, omega_hi, resolution)) {
        for (double t : linspace(tau_lo, tau_hi, resolution)) {
            SurfacePoint pt{w, t, 0.0, check_solvability(scheme, dt, sys, {w, t})};
            if (pt.solvable) {
                try {
                    pt.rho = linalg::spectral_radius(symbol_K(s, sys, w, t));
                } catch (const SingularSymbol&) {
                    pt.solvable = false;
                }
            }
            if (!pt.solvable) pt.rho = std::nan("");
            out.push_back(pt);
        }
    }
    return out;
}

struct SpectralReport {
    SpectralBounds bounds;
    double omega = 0.0;
    double tau = 0.0;
    double rho = 0.0;  // ρ(K(σ)) at (ω, τ)
    bool in_domain = false;
    OptimalResult optimal;
    AssumptionReport assumptions;
};

inline SpectralReport analyze(const StokesSystem& sys, const BDFScheme& scheme, double dt,
                              std::optional<std::pair<double, double>> params = std::nullopt) {
    SpectralReport rep;
    rep.bounds = compute_bounds(sys, sigma(scheme, dt));
    rep.optimal = optimal_params(rep.bounds);
    rep.omega = params ? params->first : rep.optimal.omega_opt;
    rep.tau = params ? params->second : rep.optimal.tau_opt;
    rep.rho = finite_interval_radius(sys, scheme, dt, rep.omega, rep.tau);
    rep.in_domain = convergence_domain(rep.omega, rep.tau, rep.bounds.sigma, rep.bounds);
    rep.assumptions = check_assumptions(sys, rep.omega, rep.tau, rep.bounds);
    return rep;
}

}  // namespace dabsor::spectral
