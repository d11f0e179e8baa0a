#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dabsor/bdf.hpp"
#include "dabsor/errors.hpp"
#include "dabsor/linalg/factor.hpp"
#include "dabsor/linalg/matrix.hpp"
#include "dabsor/stokes.hpp"

/// Discrete-time waveform relaxation with the block SOR splitting
///
///   M_𝒜 = [A/ω 0; -Bᵀ Q/τ],  N_𝒜 = [(1/ω-1)A -B; 0 Q/τ],  M_ℬ = ℬ, N_ℬ = 0,
///
/// swept level by level over a BDF-discretized window, plus windowing, a
/// monolithic reference integrator and the static (single system) variant.
namespace dabsor {

using linalg::RealMatrix;
using linalg::Vector;
using stokes::StokesSystem;

struct IterationParams {
    double omega = 1.0;
    double tau = 1.0;
    std::size_t max_iters = 800;
    double tol = 1e-6;

    void validate() const {
        if (!std::isfinite(omega) || omega == 0.0) throw InvalidArgument("omega must be finite and nonzero");
        if (!std::isfinite(tau) || tau == 0.0) throw InvalidArgument("tau must be finite and nonzero");
        if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
        if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
    }
};

/// Levels entering a window (ν start values) and the window's own levels.
struct WaveSequence {
    std::vector<Vector> start_values;
    std::vector<Vector> levels;
};

class MaxItersExceeded : public Error {
public:
    MaxItersExceeded(const std::string& what, WaveSequence partial, std::vector<double> history,
                     std::size_t window = 0)
        : Error(ErrorCode::MaxItersExceeded, what),
          partial_(std::move(partial)),
          history_(std::move(history)),
          window_(window) {}

    const WaveSequence& partial() const noexcept { return partial_; }
    const std::vector<double>& history() const noexcept { return history_; }
    std::size_t window() const noexcept { return window_; }

private:
    WaveSequence partial_;
    std::vector<double> history_;
    std::size_t window_;
};

namespace detail {

/// Cholesky of a symmetric matrix that is either positive or negative definite.
class DefiniteFactor {
public:
    explicit DefiniteFactor(const RealMatrix& m) {
        try {
            factor_.emplace(m);
            sign_ = 1.0;
        } catch (const NotSPD&) {
            factor_.emplace(-1.0 * m);  // rethrows NotSPD when indefinite
            sign_ = -1.0;
        }
    }

    void solve_in_place(std::span<double> b) const {
        factor_->solve_in_place(b);
        if (sign_ < 0.0)
            for (auto& v : b) v = -v;
    }

private:
    std::optional<linalg::CholeskyFactor> factor_;
    double sign_ = 1.0;
};

inline RealMatrix velocity_block(const StokesSystem& sys, const BDFScheme& scheme, double dt, double omega) {
    RealMatrix m = (scheme.beta_nu() / omega) * sys.A;
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += scheme.alpha_nu() / dt;
    return m;
}

}  // namespace detail

/// True iff both per-level blocks, (α_ν/Δt)I + (β_ν/ω)A and (β_ν/τ)Q, are
/// definite and hence safely factorable.
inline bool check_solvability(const BDFScheme& scheme, double dt, const StokesSystem& sys,
                              const IterationParams& params) {
    if (!(dt > 0.0) || params.omega == 0.0 || params.tau == 0.0 || !sys.has_preconditioner()) return false;
    try {
        detail::DefiniteFactor v(detail::velocity_block(sys, scheme, dt, params.omega));
        detail::DefiniteFactor q(sys.Q);
    } catch (const Error&) {
        return false;
    }
    return true;
}

/// Sup-norm error of a window relative to the reference window's sup norm.
inline double stopping_metric(const std::vector<Vector>& iterate, const std::vector<Vector>& reference) {
    if (iterate.size() != reference.size()) throw DimensionMismatch("stopping_metric: level counts differ");
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < iterate.size(); ++n) {
        if (iterate[n].size() != reference[n].size()) throw DimensionMismatch("stopping_metric: level sizes differ");
        for (std::size_t i = 0; i < iterate[n].size(); ++i) {
            const double d = std::abs(iterate[n][i] - reference[n][i]);
            if (!std::isfinite(d)) return HUGE_VAL;  // diverged iterate
            num = std::max(num, d);
            den = std::max(den, std::abs(reference[n][i]));
        }
    }
    if (!(den >= DBL_MIN)) throw ZeroReference("reference window is identically zero");
    return num / den;
}

/// Factorizations and sweep kernel for one (system, scheme, Δt, ω, τ).
/// Immutable after construction; one instance serves every window of a run.
class DabsorIteration {
public:
    DabsorIteration(const StokesSystem& sys, BDFScheme scheme, double dt, IterationParams params)
        : sys_(&sys),
          scheme_(std::move(scheme)),
          dt_(dt),
          params_(params),
          velocity_(init_velocity()),
          pressure_(init_pressure()) {}

    const BDFScheme& scheme() const noexcept { return scheme_; }
    const IterationParams& params() const noexcept { return params_; }
    double dt() const noexcept { return dt_; }

    /// One waveform sweep: `next` gets z^{(k)} from `prev` = z^{(k-1)}.
    /// `rhs` holds either the window's L levels or ν+L levels including the
    /// start levels (only needed when some β_j with j < ν is nonzero).
    void sweep(const std::vector<Vector>& start, const std::vector<Vector>& rhs, const std::vector<Vector>& prev,
               std::vector<Vector>& next) const {
        const std::size_t nu = scheme_.steps();
        const std::size_t len = prev.size();
        const std::size_t r = sys_->r(), l = sys_->l();
        check_shapes(start, rhs, len);
        next.resize(len);
        const double w = params_.omega, t = params_.tau;
        const auto& alpha = scheme_.alpha;
        const auto& beta = scheme_.beta;

        auto level = [&](const std::vector<Vector>& seq, std::size_t q) -> const Vector& {
            return q < nu ? start[q] : seq[q - nu];
        };
        auto forcing = [&](std::size_t q) -> const Vector& {
            if (rhs.size() == len + nu) return rhs[q];
            if (q < nu) throw InvalidArgument("scheme needs right-hand sides at the start levels");
            return rhs[q - nu];
        };

        Vector rx(r), ry(l);
        for (std::size_t m = 0; m < len; ++m) {
            std::fill(rx.begin(), rx.end(), 0.0);
            for (std::size_t j = 0; j <= nu; ++j) {
                const double bj = beta[j];
                const Vector& xo = level(prev, m + j);
                std::span<const double> xold(xo.data(), r), yold(xo.data() + r, l);
                if (bj != 0.0) {
                    const Vector& f = forcing(m + j);
                    for (std::size_t i = 0; i < r; ++i) rx[i] += bj * f[i];
                    linalg::multiply_add(sys_->A, xold, bj * (1.0 / w - 1.0), std::span<double>(rx));
                    linalg::multiply_add(sys_->B, yold, -bj, std::span<double>(rx));
                }
                if (j < nu) {
                    const Vector& xn = level(next, m + j);
                    std::span<const double> xnew(xn.data(), r);
                    for (std::size_t i = 0; i < r; ++i) rx[i] -= alpha[j] / dt_ * xnew[i];
                    if (bj != 0.0) linalg::multiply_add(sys_->A, xnew, -bj / w, std::span<double>(rx));
                }
            }
            Vector& z = next[m];
            z.resize(r + l);
            velocity_.solve_in_place(rx);
            std::copy(rx.begin(), rx.end(), z.begin());

            std::fill(ry.begin(), ry.end(), 0.0);
            for (std::size_t j = 0; j <= nu; ++j) {
                const double bj = beta[j];
                if (bj == 0.0) continue;
                const Vector& xn = j < nu ? level(next, m + j) : z;
                const Vector& zo = level(prev, m + j);
                const Vector& g = forcing(m + j);
                for (std::size_t i = 0; i < l; ++i) ry[i] += bj * g[r + i];
                linalg::multiply_transpose_add(sys_->B, std::span<const double>(xn.data(), r), bj, std::span<double>(ry));
                linalg::multiply_add(sys_->Q, std::span<const double>(zo.data() + r, l), bj / t, std::span<double>(ry));
                if (j < nu) {
                    const Vector& yn = level(next, m + j);
                    linalg::multiply_add(sys_->Q, std::span<const double>(yn.data() + r, l), -bj / t,
                                         std::span<double>(ry));
                }
            }
            pressure_.solve_in_place(ry);
            const double scale = t / scheme_.beta_nu();
            for (std::size_t i = 0; i < l; ++i) z[r + i] = scale * ry[i];
        }
    }

private:
    detail::DefiniteFactor init_velocity() const {
        params_.validate();
        if (!(dt_ > 0.0)) throw InvalidArgument("time step must be positive");
        if (!sys_->has_preconditioner()) throw InvalidArgument("system has no preconditioner attached");
        return detail::DefiniteFactor(detail::velocity_block(*sys_, scheme_, dt_, params_.omega));
    }

    detail::DefiniteFactor init_pressure() const { return detail::DefiniteFactor(sys_->Q); }

    void check_shapes(const std::vector<Vector>& start, const std::vector<Vector>& rhs, std::size_t len) const {
        const std::size_t n = sys_->size();
        if (start.size() != scheme_.steps()) throw DimensionMismatch("need exactly ν start values");
        if (rhs.size() != len && rhs.size() != len + scheme_.steps())
            throw DimensionMismatch("right-hand side level count does not match the window");
        for (const auto& v : start)
            if (v.size() != n) throw DimensionMismatch("start value has wrong dimension");
        for (const auto& v : rhs)
            if (v.size() != n) throw DimensionMismatch("right-hand side has wrong dimension");
    }

    const StokesSystem* sys_;
    BDFScheme scheme_;
    double dt_;
    IterationParams params_;
    detail::DefiniteFactor velocity_;
    detail::DefiniteFactor pressure_;
};

struct WindowResult {
    WaveSequence sequence;
    std::size_t iterations = 0;
    std::vector<double> history;  // history[0] is the initial error, history[k] after k sweeps
};

/// Iterates one window until the error against `reference` drops below tol.
inline WindowResult dabsor_window(const DabsorIteration& it, const std::vector<Vector>& start_values,
                                  const std::vector<Vector>& rhs, const std::vector<Vector>& reference,
                                  std::vector<Vector> initial) {
    if (initial.size() != reference.size()) throw DimensionMismatch("initial iterate and reference differ in length");
    WindowResult out;
    out.history.push_back(stopping_metric(initial, reference));
    std::vector<Vector> prev = std::move(initial), next;
    const auto& p = it.params();
    if (out.history.back() < p.tol) {
        out.sequence = {start_values, std::move(prev)};
        return out;
    }
    for (std::size_t k = 1; k <= p.max_iters; ++k) {
        it.sweep(start_values, rhs, prev, next);
        std::swap(prev, next);
        out.history.push_back(stopping_metric(prev, reference));
        out.iterations = k;
        if (!std::isfinite(out.history.back())) break;
        if (out.history.back() < p.tol) {
            out.sequence = {start_values, std::move(prev)};
            return out;
        }
    }
    throw MaxItersExceeded("no convergence in " + std::to_string(p.max_iters) + " sweeps",
                           {start_values, std::move(prev)}, std::move(out.history));
}

inline WindowResult dabsor_window(const StokesSystem& sys, const BDFScheme& scheme, double dt,
                                  const IterationParams& params, const std::vector<Vector>& start_values,
                                  const std::vector<Vector>& rhs, const std::vector<Vector>& reference,
                                  std::vector<Vector> initial) {
    const DabsorIteration it(sys, scheme, dt, params);
    return dabsor_window(it, start_values, rhs, reference, std::move(initial));
}

/// Monolithic BDF integrator for the coupled saddle system, one LU for all levels.
class ReferenceSolver {
public:
    ReferenceSolver(const StokesSystem& sys, BDFScheme scheme, double dt)
        : sys_(&sys), scheme_(std::move(scheme)), dt_(dt), lu_(level_matrix(sys, scheme_, dt)) {}

    /// Levels z_{ν}, ..., z_{ν+L-1} from the start values and L right-hand sides.
    std::vector<Vector> solve(const std::vector<Vector>& start, const std::vector<Vector>& rhs) const {
        const std::size_t nu = scheme_.steps();
        const std::size_t r = sys_->r(), l = sys_->l(), n = r + l;
        if (start.size() != nu) throw DimensionMismatch("need exactly ν start values");
        for (std::size_t j = 0; j + 1 <= nu; ++j)
            if (scheme_.beta[j] != 0.0) throw InvalidArgument("reference integrator supports BDF-type schemes only");
        std::vector<Vector> out;
        out.reserve(rhs.size());
        auto level = [&](std::size_t q) -> const Vector& { return q < nu ? start[q] : out[q - nu]; };
        for (std::size_t m = 0; m < rhs.size(); ++m) {
            if (rhs[m].size() != n) throw DimensionMismatch("right-hand side has wrong dimension");
            Vector b(n);
            for (std::size_t i = 0; i < n; ++i) b[i] = scheme_.beta_nu() * rhs[m][i];
            for (std::size_t j = 0; j < nu; ++j) {
                const Vector& z = level(m + j);
                for (std::size_t i = 0; i < r; ++i) b[i] -= scheme_.alpha[j] / dt_ * z[i];
            }
            lu_.solve_in_place(b);
            out.push_back(std::move(b));
        }
        return out;
    }

    /// Left-hand matrix (α_ν/Δt)ℬ + β_ν 𝒜 of each level.
    static RealMatrix level_matrix(const StokesSystem& sys, const BDFScheme& scheme, double dt) {
        if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
        const std::size_t r = sys.r(), l = sys.l();
        const double b = scheme.beta_nu();
        RealMatrix m(r + l, r + l);
        m.set_block(0, 0, b * sys.A);
        m.set_block(0, r, b * sys.B);
        m.set_block(r, 0, -b * sys.B.transpose());
        for (std::size_t i = 0; i < r; ++i) m(i, i) += scheme.alpha_nu() / dt;
        return m;
    }

private:
    const StokesSystem* sys_;
    BDFScheme scheme_;
    double dt_;
    linalg::LuFactor<double> lu_;
};

inline std::vector<Vector> reference_solve(const StokesSystem& sys, const BDFScheme& scheme, double dt,
                                           const std::vector<Vector>& start_values, const std::vector<Vector>& rhs) {
    return ReferenceSolver(sys, scheme, dt).solve(start_values, rhs);
}

/// Equal split of L_total steps over N windows; the remainder goes to the last.
struct WindowPlan {
    double t1 = 0.01;
    double t2 = 0.13;
    double dt = 0.001;
    std::size_t total = 0;
    std::vector<std::size_t> lengths;

    std::size_t windows() const noexcept { return lengths.size(); }
    std::size_t offset(std::size_t w) const {
        std::size_t o = 0;
        for (std::size_t i = 0; i < w; ++i) o += lengths.at(i);
        return o;
    }
    /// Time of window level index q (0-based over the whole interval).
    double time(std::size_t q) const { return t1 + static_cast<double>(q + 1) * dt; }
};

inline WindowPlan make_window_plan(double t1, double t2, double dt, std::size_t windows) {
    if (!(dt > 0.0) || !(t2 > t1)) throw InvalidArgument("need dt > 0 and t2 > t1");
    const double steps = (t2 - t1) / dt;
    const auto total = static_cast<std::size_t>(std::llround(steps));
    if (total == 0 || std::abs(steps - static_cast<double>(total)) > 1e-9 * steps)
        throw InvalidArgument("interval length is not a whole number of steps");
    if (windows == 0 || windows > total) throw InvalidArgument("window count must be in 1..L");
    WindowPlan plan{t1, t2, dt, total, {}};
    const std::size_t base = total / windows;
    plan.lengths.assign(windows, base);
    plan.lengths.back() += total - base * windows;
    return plan;
}

struct WindowedResult {
    std::vector<Vector> levels;
    std::vector<std::size_t> iterations;
    std::vector<std::vector<double>> histories;

    double average_iterations() const {
        if (iterations.empty()) return 0.0;
        double s = 0.0;
        for (auto k : iterations) s += static_cast<double>(k);
        return s / static_cast<double>(iterations.size());
    }
};

/// Runs the windows in order. Each window's reference is the monolithic
/// solution from that window's actual start values, and its last ν levels
/// seed the next window. Completed windows stay in `out` when a later one
/// throws.
inline void dabsor_windowed_into(const StokesSystem& sys, const BDFScheme& scheme, const IterationParams& params,
                                 const WindowPlan& plan, const std::vector<Vector>& start_values,
                                 const std::vector<Vector>& rhs_all, const std::vector<Vector>& initial_all,
                                 WindowedResult& out) {
    if (rhs_all.size() != plan.total || initial_all.size() != plan.total)
        throw DimensionMismatch("rhs and initial waves must cover every level of the plan");
    const DabsorIteration it(sys, scheme, plan.dt, params);
    const ReferenceSolver ref(sys, scheme, plan.dt);
    const std::size_t nu = scheme.steps();
    out = WindowedResult{};
    std::vector<Vector> start = start_values;
    std::size_t offset = 0;
    for (std::size_t w = 0; w < plan.windows(); ++w) {
        const std::size_t len = plan.lengths[w];
        const auto first = static_cast<std::ptrdiff_t>(offset);
        const auto last = static_cast<std::ptrdiff_t>(offset + len);
        std::vector<Vector> rhs(rhs_all.begin() + first, rhs_all.begin() + last);
        std::vector<Vector> init(initial_all.begin() + first, initial_all.begin() + last);
        const std::vector<Vector> reference = ref.solve(start, rhs);
        WindowResult res;
        try {
            res = dabsor_window(it, start, rhs, reference, std::move(init));
        } catch (const MaxItersExceeded& e) {
            throw MaxItersExceeded("window " + std::to_string(w) + ": " + e.what(), e.partial(), e.history(), w);
        }
        std::vector<Vector> chain = std::move(start);
        for (auto& v : res.sequence.levels) {
            out.levels.push_back(v);
            chain.push_back(std::move(v));
        }
        start.assign(chain.end() - static_cast<std::ptrdiff_t>(nu), chain.end());
        out.iterations.push_back(res.iterations);
        out.histories.push_back(std::move(res.history));
        offset += len;
    }
}

inline WindowedResult dabsor_windowed(const StokesSystem& sys, const BDFScheme& scheme, const IterationParams& params,
                                      const WindowPlan& plan, const std::vector<Vector>& start_values,
                                      const std::vector<Vector>& rhs_all, const std::vector<Vector>& initial_all) {
    WindowedResult out;
    dabsor_windowed_into(sys, scheme, params, plan, start_values, rhs_all, initial_all, out);
    return out;
}

/// Per window (ε_final/ε_initial)^{1/k}, averaged over windows that iterated.
inline double measure_dpocf(const std::vector<std::vector<double>>& histories) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& h : histories) {
        if (h.size() < 2) continue;
        if (!(h.front() > 0.0)) continue;
        const double k = static_cast<double>(h.size() - 1);
        sum += std::pow(h.back() / h.front(), 1.0 / k);
        ++count;
    }
    if (count == 0) throw EmptyHistory("no window recorded an iteration");
    return sum / static_cast<double>(count);
}

struct StaticResult {
    Vector solution;
    std::size_t iterations = 0;
    double factor = 0.0;  // geometric mean of the last (up to) 10 error ratios
    std::vector<double> errors;
};

/// Stationary splitting iteration z^k = (σM_ℬ + M_𝒜)⁻¹(N_𝒜 z^{k-1} + b) for
/// (σℬ + 𝒜)z = b, started from zero. Errors are measured against an LU solve.
inline StaticResult static_iteration(const StokesSystem& sys, double sigma_value, const IterationParams& params,
                                     const Vector& b) {
    params.validate();
    const std::size_t r = sys.r(), l = sys.l(), n = r + l;
    if (b.size() != n) throw DimensionMismatch("static_iteration: rhs has wrong dimension");
    if (!sys.has_preconditioner()) throw InvalidArgument("system has no preconditioner attached");
    const double w = params.omega, t = params.tau;

    RealMatrix full(n, n);
    full.set_block(0, 0, sys.A);
    full.set_block(0, r, sys.B);
    full.set_block(r, 0, -1.0 * sys.B.transpose());
    for (std::size_t i = 0; i < r; ++i) full(i, i) += sigma_value;
    const Vector exact = linalg::LuFactor<double>(full).solve(b);
    const double scale = linalg::max_abs(std::span<const double>(exact));
    if (!(scale >= DBL_MIN)) throw ZeroReference("static system has the zero solution");

    RealMatrix vel = (1.0 / w) * sys.A;
    for (std::size_t i = 0; i < r; ++i) vel(i, i) += sigma_value;
    const detail::DefiniteFactor vf(vel);
    const detail::DefiniteFactor qf(sys.Q);

    StaticResult out;
    Vector z(n, 0.0), rx(r), ry(l);
    auto error_of = [&](const Vector& v) {
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(v[i] - exact[i]);
            if (!std::isfinite(d)) return HUGE_VAL;
            e = std::max(e, d);
        }
        return e / scale;
    };
    out.errors.push_back(error_of(z));
    for (std::size_t k = 1; k <= params.max_iters; ++k) {
        std::copy(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(r), rx.begin());
        linalg::multiply_add(sys.A, std::span<const double>(z.data(), r), 1.0 / w - 1.0, std::span<double>(rx));
        linalg::multiply_add(sys.B, std::span<const double>(z.data() + r, l), -1.0, std::span<double>(rx));
        vf.solve_in_place(rx);
        std::copy(rx.begin(), rx.end(), z.begin());
        std::copy(b.begin() + static_cast<std::ptrdiff_t>(r), b.end(), ry.begin());
        linalg::multiply_transpose_add(sys.B, std::span<const double>(z.data(), r), 1.0, std::span<double>(ry));
        qf.solve_in_place(ry);
        for (std::size_t i = 0; i < l; ++i) z[r + i] += t * ry[i];
        out.errors.push_back(error_of(z));
        out.iterations = k;
        if (!std::isfinite(out.errors.back())) break;
        if (out.errors.back() < params.tol) {
            const std::size_t last = out.errors.size() - 1;
            const std::size_t span = std::min<std::size_t>(10, last);
            double log_sum = 0.0;
            for (std::size_t i = last - span + 1; i <= last; ++i)
                log_sum += std::log(out.errors[i] / out.errors[i - 1]);
            out.factor = std::exp(log_sum / static_cast<double>(span));
            out.solution = std::move(z);
            return out;
        }
    }
    throw MaxItersExceeded("static iteration did not converge in " + std::to_string(params.max_iters) + " steps",
                           {{}, {z}}, out.errors);
}

}  // namespace dabsor
