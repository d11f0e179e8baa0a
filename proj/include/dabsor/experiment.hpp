#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dabsor/bdf.hpp"
#include "dabsor/errors.hpp"
#include "dabsor/spectral.hpp"
#include "dabsor/stokes.hpp"
#include "dabsor/waveform.hpp"

/// Experiment orchestration: resolved run configuration, single runs, the
/// convergence-factor and iteration-count tables, and their CSV rendering.
namespace dabsor::experiment {

using linalg::Vector;
using stokes::Preconditioner;
using stokes::StokesSystem;

struct ExperimentConfig {
    std::size_t grid = 12;  ///< interior points per direction
    int order = 1;
    double dt = 0.001;
    double t_start = 0.01;
    double t_end = 0.13;
    std::size_t windows = 1;
    Preconditioner precond = Preconditioner::Q1;
    bool optimal = true;  ///< closed-form optimal (ω, τ); otherwise omega/tau below
    double omega = 1.0;
    double tau = 1.0;
    std::size_t max_iters = 800;
    double tol = 1e-6;
    bool run_static = true;
    std::string out = "out";
    std::uint64_t seed = 42;
    std::size_t resolution = 21;

    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
        if (grid < 2) fail("grid", "need at least 2 interior points");
        if (order < 1 || order > 6) throw UnsupportedOrder("order: BDF order must be in 1..6, got " + std::to_string(order));
        if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt", "must be positive");
        if (!(t_end > t_start)) fail("t_end", "must exceed t_start");
        if (windows < 1) fail("windows", "must be at least 1");
        if (!optimal) {
            if (!std::isfinite(omega) || omega == 0.0) fail("omega", "must be finite and nonzero");
            if (!std::isfinite(tau) || tau == 0.0) fail("tau", "must be finite and nonzero");
        }
        if (max_iters < 1) fail("max_iters", "must be at least 1");
        if (!(tol > 0.0)) fail("tol", "must be positive");
        if (resolution < 1) fail("resolution", "must be at least 1");
        try {
            make_window_plan(t_start, t_end, dt, windows);
        } catch (const InvalidArgument& e) {
            fail("windows", e.what());
        }
    }
};

inline Preconditioner parse_preconditioner(std::string_view s) {
    if (s == "q1" || s == "Q1") return Preconditioner::Q1;
    if (s == "q2" || s == "Q2") return Preconditioner::Q2;
    throw ConfigError("precond: expected q1 or q2, got '" + std::string(s) + "'");
}

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Fixed 17-significant-digit rendering.
inline std::string format_17g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Everything a single run needs that follows from the configuration.
struct Problem {
    StokesSystem sys;
    BDFScheme scheme;
    WindowPlan plan;
    stokes::AnalyticConstants constants;
    std::vector<Vector> start;
    std::vector<Vector> rhs;
    std::vector<Vector> initial;
};

/// Start levels come from the analytic solution at t_start − (ν−1−j)Δt.
inline Problem build_problem(const ExperimentConfig& cfg) {
    cfg.validate();
    Problem p{stokes::make_system(stokes::square_grid(cfg.grid), cfg.precond), bdf_coefficients(cfg.order),
              make_window_plan(cfg.t_start, cfg.t_end, cfg.dt, cfg.windows), {}, {}, {}, {}};
    const std::size_t nu = p.scheme.steps();
    for (std::size_t j = 0; j < nu; ++j)
        p.start.push_back(stokes::sample_state(p.sys.grid, p.constants,
                                               cfg.t_start - static_cast<double>(nu - 1 - j) * cfg.dt));
    for (std::size_t q = 0; q < p.plan.total; ++q) {
        p.rhs.push_back(stokes::manufactured_rhs(p.sys, p.constants, p.plan.time(q)));
        p.initial.push_back(stokes::initial_wave(p.sys.grid, p.constants, p.plan.time(q)));
    }
    return p;
}

struct RunReport {
    double sigma = 0.0;
    spectral::SpectralBounds bounds;
    spectral::OptimalResult optimal;
    spectral::AssumptionReport assumptions;
    double omega = 0.0;
    double tau = 0.0;
    double rho = 0.0;  ///< ρ(K(σ)) at the parameters used
    bool in_domain = false;

    bool static_run = false;
    bool static_converged = false;
    std::size_t static_iterations = 0;
    double apocf = std::nan("");

    bool converged = false;
    std::optional<std::size_t> failed_window;
    std::string failure;
    std::vector<std::size_t> window_lengths;
    std::vector<std::size_t> iterations;
    std::vector<std::vector<double>> histories;
    double average_iterations = std::nan("");
    double dpocf = std::nan("");
    double checksum = std::nan("");             ///< Σ|z| over all computed levels
    double reference_deviation = std::nan("");  ///< stopping metric against the monolithic solve
};

/// assemble → preconditioner → bounds → parameters → windowed iteration (+ static iteration).
inline RunReport run_experiment(const ExperimentConfig& cfg) {
    const Problem p = build_problem(cfg);
    RunReport rep;
    rep.sigma = sigma(p.scheme, cfg.dt);
    rep.bounds = spectral::compute_bounds(p.sys, rep.sigma);
    rep.optimal = spectral::optimal_params(rep.bounds);
    rep.omega = cfg.optimal ? rep.optimal.omega_opt : cfg.omega;
    rep.tau = cfg.optimal ? rep.optimal.tau_opt : cfg.tau;
    rep.rho = spectral::finite_interval_radius(p.sys, p.scheme, cfg.dt, rep.omega, rep.tau);
    rep.in_domain = spectral::convergence_domain(rep.omega, rep.tau, rep.sigma, rep.bounds);
    rep.assumptions = spectral::check_assumptions(p.sys, rep.omega, rep.tau, rep.bounds);
    rep.window_lengths = p.plan.lengths;
    const IterationParams params{rep.omega, rep.tau, cfg.max_iters, cfg.tol};

    if (cfg.run_static) {
        rep.static_run = true;
        const Vector z = stokes::sample_state(p.sys.grid, p.constants, cfg.t_start);
        Vector b(z.size(), 0.0);
        const std::size_t r = p.sys.r();
        for (std::size_t i = 0; i < r; ++i) b[i] = rep.sigma * z[i];
        const std::span<const double> x(z.data(), r), y(z.data() + r, p.sys.l());
        linalg::multiply_add(p.sys.A, x, 1.0, std::span<double>(b.data(), r));
        linalg::multiply_add(p.sys.B, y, 1.0, std::span<double>(b.data(), r));
        linalg::multiply_transpose_add(p.sys.B, x, -1.0, std::span<double>(b.data() + r, p.sys.l()));
        try {
            const StaticResult st = static_iteration(p.sys, rep.sigma, params, b);
            rep.static_converged = true;
            rep.static_iterations = st.iterations;
            rep.apocf = st.factor;
        } catch (const MaxItersExceeded& e) {
            rep.static_iterations = e.history().empty() ? 0 : e.history().size() - 1;
        }
    }

    WindowedResult res;
    try {
        dabsor_windowed_into(p.sys, p.scheme, params, p.plan, p.start, p.rhs, p.initial, res);
        rep.converged = true;
    } catch (const MaxItersExceeded& e) {
        rep.failed_window = e.window();
        rep.failure = e.what();
        res.histories.push_back(e.history());
        res.iterations.push_back(e.history().empty() ? 0 : e.history().size() - 1);
    }
    rep.iterations = res.iterations;
    rep.histories = res.histories;
    if (rep.converged) {
        rep.average_iterations = res.average_iterations();
        rep.dpocf = measure_dpocf(res.histories);
        double sum = 0.0;
        for (const auto& v : res.levels)
            for (double x : v) sum += std::abs(x);
        rep.checksum = sum;
        const auto ref = reference_solve(p.sys, p.scheme, cfg.dt, p.start, p.rhs);
        rep.reference_deviation = stopping_metric(res.levels, ref);
    }
    return rep;
}

/// Long-format history: window,iteration,epsilon.
inline void write_history_csv(std::ostream& os, const RunReport& rep) {
    os << "window,iteration,epsilon\n";
    for (std::size_t w = 0; w < rep.histories.size(); ++w) {
        const std::size_t window = rep.failed_window && w + 1 == rep.histories.size() ? *rep.failed_window : w;
        for (std::size_t k = 0; k < rep.histories[w].size(); ++k)
            os << window << ',' << k << ',' << format_number(rep.histories[w][k]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Tables

enum class Scale { Full, Desk };

inline Scale parse_scale(std::string_view s) {
    if (s == "full") return Scale::Full;
    if (s == "desk") return Scale::Desk;
    throw ConfigError("scale: expected full or desk, got '" + std::string(s) + "'");
}

enum class TableKind { Factors, Iterations };

struct TableSpec {
    std::string id;
    TableKind kind;
    std::size_t grid;
    Preconditioner precond;
    std::string title;
};

inline const std::vector<TableSpec>& table_specs() {
    static const std::vector<TableSpec> specs = {
        {"T3", TableKind::Factors, 12, Preconditioner::Q1, "Optimal convergence factor, 12x12 grid, Q1"},
        {"T4", TableKind::Factors, 12, Preconditioner::Q2, "Optimal convergence factor, 12x12 grid, Q2"},
        {"T5", TableKind::Factors, 24, Preconditioner::Q1, "Optimal convergence factor, 24x24 grid, Q1"},
        {"T6", TableKind::Factors, 24, Preconditioner::Q2, "Optimal convergence factor, 24x24 grid, Q2"},
        {"T7", TableKind::Iterations, 12, Preconditioner::Q1, "Average iterations per window, 12x12 grid, Q1"},
        {"T8", TableKind::Iterations, 12, Preconditioner::Q2, "Average iterations per window, 12x12 grid, Q2"},
        {"T9", TableKind::Iterations, 24, Preconditioner::Q1, "Average iterations per window, 24x24 grid, Q1"},
        {"T10", TableKind::Iterations, 24, Preconditioner::Q2, "Average iterations per window, 24x24 grid, Q2"},
    };
    return specs;
}

inline const TableSpec& find_table(std::string_view id) {
    for (const auto& s : table_specs())
        if (s.id == id) return s;
    throw UnknownTable("no table '" + std::string(id) + "'; expected T3..T10");
}

/// Grid, orders and window counts a table is evaluated on at a given scale.
/// Desk scale runs every table on the 12x12 grid with orders 1..3.
struct TableLayout {
    std::size_t grid;
    std::vector<int> orders;
    std::vector<std::size_t> windows;
};

inline TableLayout table_layout(const TableSpec& spec, Scale scale) {
    TableLayout l;
    l.grid = scale == Scale::Desk ? 12 : spec.grid;
    l.orders = scale == Scale::Desk ? std::vector<int>{1, 2, 3} : std::vector<int>{1, 2, 3, 4, 5, 6};
    if (spec.kind == TableKind::Factors)
        l.windows = {6, 12, 20, 30, 40, 60};
    else
        l.windows = {1, 2, 3, 4, 5, 6};
    return l;
}

inline constexpr std::string_view kNoConvergence = "---";

struct Table {
    std::string id;
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// One cell's raw outcome, kept so callers can inspect numbers without
/// re-parsing the CSV.
struct TableCell {
    int order = 0;
    std::size_t windows = 0;
    RunReport report;
};

struct TableResult {
    Table table;
    std::vector<TableCell> cells;
};

inline TableResult reproduce_table(std::string_view id, Scale scale, ExperimentConfig base = {}) {
    const TableSpec& spec = find_table(id);
    const TableLayout layout = table_layout(spec, scale);
    base.grid = layout.grid;
    base.precond = spec.precond;
    base.optimal = true;

    TableResult out;
    Table& t = out.table;
    t.id = spec.id;
    t.title = spec.title;
    t.header.push_back(spec.kind == TableKind::Factors ? "" : "NoW");
    for (int k : layout.orders) t.header.push_back("BDF(" + std::to_string(k) + ")");
    if (spec.kind == TableKind::Iterations) t.header.push_back("NoU");

    const std::size_t n = 3 * layout.grid * layout.grid;
    if (spec.kind == TableKind::Factors) {
        std::vector<std::string> dtocf{"DTOCF"}, apocf{"APOCF"};
        std::vector<std::vector<std::string>> dp;
        for (std::size_t w : layout.windows) dp.push_back({"DPOCF(" + std::to_string(w) + ")"});
        for (int k : layout.orders) {
            for (std::size_t wi = 0; wi < layout.windows.size(); ++wi) {
                ExperimentConfig cfg = base;
                cfg.order = k;
                cfg.windows = layout.windows[wi];
                cfg.run_static = wi == 0;
                RunReport rep = run_experiment(cfg);
                if (wi == 0) {
                    dtocf.push_back(format_number(rep.optimal.rho_opt));
                    apocf.push_back(rep.static_converged ? format_number(rep.apocf) : std::string(kNoConvergence));
                }
                dp[wi].push_back(rep.converged ? format_number(rep.dpocf) : std::string(kNoConvergence));
                out.cells.push_back({k, cfg.windows, std::move(rep)});
            }
        }
        t.rows.push_back(std::move(dtocf));
        t.rows.push_back(std::move(apocf));
        for (auto& row : dp) t.rows.push_back(std::move(row));
    } else {
        for (std::size_t w : layout.windows) {
            std::vector<std::string> row{std::to_string(w)};
            for (int k : layout.orders) {
                ExperimentConfig cfg = base;
                cfg.order = k;
                cfg.windows = w;
                cfg.run_static = false;
                RunReport rep = run_experiment(cfg);
                row.push_back(rep.converged ? format_number(rep.average_iterations) : std::string(kNoConvergence));
                out.cells.push_back({k, w, std::move(rep)});
            }
            const WindowPlan plan = make_window_plan(base.t_start, base.t_end, base.dt, w);
            row.push_back(std::to_string(plan.lengths.front() * n));
            t.rows.push_back(std::move(row));
        }
    }
    return out;
}

inline void write_table_csv(std::ostream& os, const Table& t) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

// ---------------------------------------------------------------------------
// Surfaces

struct SurfaceRange {
    double omega_lo = 0.05;
    double omega_hi = 1.95;
    double tau_lo = 0.1;
    double tau_hi = 0.0;  ///< 0 selects twice the closed-form optimal τ
};

inline std::vector<spectral::SurfacePoint> emit_surface(const ExperimentConfig& cfg, SurfaceRange range = {}) {
    cfg.validate();
    const StokesSystem sys = stokes::make_system(stokes::square_grid(cfg.grid), cfg.precond);
    const BDFScheme scheme = bdf_coefficients(cfg.order);
    if (range.tau_hi <= 0.0) {
        const auto opt = spectral::optimal_params(spectral::compute_bounds(sys, sigma(scheme, cfg.dt)));
        range.tau_hi = std::max(2.0 * opt.tau_opt, range.tau_lo);
    }
    return spectral::sweep_surface(sys, scheme, cfg.dt, range.omega_lo, range.omega_hi, range.tau_lo, range.tau_hi,
                                   cfg.resolution);
}

/// omega,tau,rho,solvable at 17 significant digits; unsolvable points leave rho empty.
inline void write_surface_csv(std::ostream& os, const std::vector<spectral::SurfacePoint>& pts) {
    os << "omega,tau,rho,solvable\n";
    for (const auto& p : pts) {
        os << format_17g(p.omega) << ',' << format_17g(p.tau) << ',';
        if (p.solvable) os << format_17g(p.rho);
        os << ',' << (p.solvable ? 1 : 0) << '\n';
    }
}

}  // namespace dabsor::experiment
