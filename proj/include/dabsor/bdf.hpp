#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dabsor/errors.hpp"

namespace dabsor {

/// Linear multistep coefficients Σ α_j z_{n+j} = Δt Σ β_j f_{n+j}, stored
/// lowest level first and normalized so that α_ν = 1. For BDF only β_ν is
/// nonzero, but the full β array is kept so the iteration and the block
/// Toeplitz algebra read the same for any implicit formula.
struct BDFScheme {
    int order = 1;
    std::vector<double> alpha;  // α_0..α_ν
    std::vector<double> beta;   // β_0..β_ν

    double alpha_nu() const { return alpha.back(); }
    double beta_nu() const { return beta.back(); }
    std::size_t steps() const { return static_cast<std::size_t>(order); }
};

/// Standard BDF coefficients for orders 1..6.
inline BDFScheme bdf_coefficients(int order) {
    BDFScheme s;
    s.order = order;
    double bnu = 0.0;
    switch (order) {
        case 1:
            s.alpha = {-1.0, 1.0};
            bnu = 1.0;
            break;
        case 2:
            s.alpha = {1.0 / 3.0, -4.0 / 3.0, 1.0};
            bnu = 2.0 / 3.0;
            break;
        case 3:
            s.alpha = {-2.0 / 11.0, 9.0 / 11.0, -18.0 / 11.0, 1.0};
            bnu = 6.0 / 11.0;
            break;
        case 4:
            s.alpha = {3.0 / 25.0, -16.0 / 25.0, 36.0 / 25.0, -48.0 / 25.0, 1.0};
            bnu = 12.0 / 25.0;
            break;
        case 5:
            s.alpha = {-12.0 / 137.0, 75.0 / 137.0, -200.0 / 137.0, 300.0 / 137.0, -300.0 / 137.0, 1.0};
            bnu = 60.0 / 137.0;
            break;
        case 6:
            s.alpha = {10.0 / 147.0,   -72.0 / 147.0,  225.0 / 147.0, -400.0 / 147.0,
                       450.0 / 147.0,  -360.0 / 147.0, 1.0};
            bnu = 60.0 / 147.0;
            break;
        default:
            throw UnsupportedOrder("BDF order must be in 1..6, got " + std::to_string(order));
    }
    s.beta.assign(s.alpha.size(), 0.0);
    s.beta.back() = bnu;

    double sum = 0.0;
    for (double a : s.alpha) sum += a;
    if (std::abs(sum) > 1e-14) throw InvalidArgument("inconsistent BDF coefficients");
    return s;
}

/// σ = α_ν / (β_ν Δt), the point at which the finite-interval symbol is evaluated.
inline double sigma(const BDFScheme& scheme, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    return scheme.alpha_nu() / (scheme.beta_nu() * dt);
}

}  // namespace dabsor
