// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "dabsor/experiment.hpp"
#include "test_support.hpp"

using namespace dabsor;
using namespace dabsor::spectral;
using experiment::ExperimentConfig;
using experiment::format_number;
using linalg::Complex;
using linalg::RealMatrix;
using linalg::Vector;
using stokes::Preconditioner;

namespace {

constexpr double kDt = 0.001;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

const StokesSystem& grid4() {
    static const StokesSystem sys = stokes::make_system(stokes::square_grid(4), Preconditioner::Q1);
    return sys;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// ∂v/∂y of the closed-form flow, differentiated by hand.
double dv_dy(double x, double y, double t, const stokes::AnalyticConstants& c) {
    const double decay = std::exp(c.theta * x - c.zeta * t);
    return (-c.c1 * c.theta * std::sin(c.theta * y) - 2.0 * c.c2 * c.kappa * std::sin(c.kappa * y)) * decay;
}

Outcome bdf_golden() {
    const std::vector<std::vector<double>> alpha = {
        {-1.0, 1.0},
        {1.0 / 3, -4.0 / 3, 1.0},
        {-2.0 / 11, 9.0 / 11, -18.0 / 11, 1.0},
        {3.0 / 25, -16.0 / 25, 36.0 / 25, -48.0 / 25, 1.0},
        {-12.0 / 137, 75.0 / 137, -200.0 / 137, 300.0 / 137, -300.0 / 137, 1.0},
        {10.0 / 147, -72.0 / 147, 225.0 / 147, -400.0 / 147, 450.0 / 147, -360.0 / 147, 1.0}};
    const double beta[] = {1.0, 2.0 / 3, 6.0 / 11, 12.0 / 25, 60.0 / 137, 60.0 / 147};
    double worst = 0.0;
    for (int k = 1; k <= 6; ++k) {
        const BDFScheme s = bdf_coefficients(k);
        if (s.alpha != alpha[k - 1] || s.beta_nu() != beta[k - 1]) return {false, "order " + std::to_string(k)};
        double sum = 0.0;
        for (double a : s.alpha) sum += a;
        worst = std::max(worst, std::abs(sum));
    }
    return {worst <= 1e-15, "max |sum alpha| = " + fmt(worst)};
}

Outcome analytic_identity() {
    const stokes::AnalyticConstants c;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(-1.0, 1.0), time(0.0, 0.2);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double x = pos(rng), y = pos(rng), t = time(rng);
        const auto f = stokes::analytic_solution(x, y, t, c);
        worst = std::max(worst, std::abs(c.theta * f.u + dv_dy(x, y, t, c)));
    }
    const double v0 = stokes::analytic_solution(0.0, 0.0, 0.0, c).v;
    return {worst < 1e-12 && v0 == 5.390472650419484,
            "max divergence " + fmt(worst) + ", v(0,0;0) = " + format_number(v0)};
}

Outcome theorem41() {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> wd(0.1, 1.9), td(0.1, 10.0);
    double worst = 0.0;
    for (int order = 1; order <= 3; ++order)
        for (std::size_t len : {3u, 5u})
            for (int k = 0; k < 5; ++k) {
                const BDFScheme s = bdf_coefficients(order);
                const double w = wd(rng), t = td(rng);
                const auto stacked = oracle::stacked_radius(grid4(), s, kDt, w, t, len);
                if (stacked.upper_leak > 1e-13) return {false, "stacked operator is not block lower triangular"};
                worst = std::max(worst, std::abs(finite_interval_radius(grid4(), s, kDt, w, t) - stacked.radius));
            }
    return {worst < 1e-8, "max |rho(K(sigma)) - rho(C^-1 D)| = " + fmt(worst)};
}

Outcome laplace_identity() {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> mag(1.1, 10.0), arg(0.0, 2.0 * std::numbers::pi);
    double worst = 0.0;
    for (int order = 1; order <= 3; ++order)
        for (int k = 0; k < 20; ++k)
            worst = std::max(worst, laplace_relation_check(grid4(), bdf_coefficients(order), kDt, 0.9, 2.0,
                                                           std::polar(mag(rng), arg(rng))));
    return {worst < 1e-10, "max deviation " + fmt(worst)};
}

Outcome domain_soundness() {
    const BDFScheme s = bdf_coefficients(1);
    const SpectralBounds b = compute_bounds(grid4(), sigma(s, kDt));
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double w = 2.0 * u(rng);
        const double t = 2.0 * b.eta_min * b.mu_min * (2.0 / w + b.delta_min() - 1.0) * u(rng);
        if (!convergence_domain(w, t, b.sigma, b)) return {false, "sampler left the domain"};
        worst = std::max(worst, finite_interval_radius(grid4(), s, kDt, w, t));
    }
    return {worst < 1.0 - 1e-12, "max rho over 200 in-domain points = " + format_number(worst)};
}

Outcome optimality() {
    const BDFScheme s = bdf_coefficients(1);
    bool ok = true;
    std::string detail;
    for (auto p : {Preconditioner::Q1, Preconditioner::Q2}) {
        const StokesSystem sys = stokes::make_system(stokes::square_grid(12), p);
        const SpectralBounds b = compute_bounds(sys, sigma(s, kDt));
        const OptimalResult centre = optimal_params(b);
        const double rho = finite_interval_radius(sys, s, kDt, centre.omega_opt, centre.tau_opt);
        double lo = HUGE_VAL, hi = 0.0, rlo = HUGE_VAL, rhi = 0.0;
        for (int k = 1; k <= 10; ++k) {
            const double d = b.delta_min() + (b.delta_max() - b.delta_min()) * k / 11.0;
            const OptimalResult r = optimal_params(b, d);
            const double v = finite_interval_radius(sys, s, kDt, r.omega_opt, r.tau_opt);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            rlo = std::min(rlo, r.rho_opt);
            rhi = std::max(rhi, r.rho_opt);
        }
        const bool here = rho <= centre.rho_opt + 1e-6 && hi <= centre.rho_opt + 1e-6 && hi - lo < 1e-6 &&
                          rhi - rlo < 1e-6;
        ok = ok && here;
        detail += std::string(stokes::to_string(p)) + ": rho(K) at optimum " + fmt(rho) + " vs rho_opt " +
                  fmt(centre.rho_opt) + ", curve rho in [" + fmt(lo) + ", " + fmt(hi) + "]; ";
    }
    return {ok, detail};
}

Outcome infinite_vs_finite() {
    double worst = HUGE_VAL;
    for (int order = 1; order <= 2; ++order)
        for (auto [w, t] : {std::pair{1.0, 1.0}, std::pair{0.6, 3.0}, std::pair{1.4, 0.5}}) {
            const BDFScheme s = bdf_coefficients(order);
            worst = std::min(worst, infinite_interval_radius(grid4(), s, kDt, w, t) -
                                        finite_interval_radius(grid4(), s, kDt, w, t));
        }
    return {worst >= -1e-8, "min (infinite - finite) = " + fmt(worst)};
}

Outcome error_propagation() {
    const StokesSystem& sys = grid4();
    const BDFScheme s = bdf_coefficients(1);
    const std::size_t len = 5, n = sys.size();
    const double w = 0.8, t = 1.7;
    const stokes::AnalyticConstants c;
    const std::vector<Vector> start{stokes::sample_state(sys.grid, c, 0.01)};
    const auto rhs = stokes::rhs_sequence(sys, c, 0.011, kDt, len);
    const auto ref = reference_solve(sys, s, kDt, start, rhs);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> iterate = ref;
    Vector e(len * n);
    for (std::size_t m = 0; m < len; ++m)
        for (std::size_t i = 0; i < n; ++i) {
            e[m * n + i] = u(rng);
            iterate[m][i] += e[m * n + i];
        }
    const DabsorIteration it(sys, s, kDt, {w, t});
    std::vector<Vector> next;
    it.sweep(start, rhs, iterate, next);
    const auto [cm, dm] = oracle::toeplitz_pair(sys, s, kDt, w, t, len);
    const Vector expected = linalg::LuFactor<double>(cm).solve(linalg::multiply(dm, std::span<const double>(e)));
    double worst = 0.0;
    for (std::size_t m = 0; m < len; ++m)
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(next[m][i] - ref[m][i] - expected[m * n + i]));
    const double rel = worst / linalg::max_abs(std::span<const double>(expected));
    return {rel < 1e-10, "max relative deviation " + fmt(rel)};
}

// Table cells shared between criteria 9 and 12.
std::map<std::string, experiment::TableResult> tables;

const experiment::TableResult& table(const std::string& id) {
    auto it = tables.find(id);
    if (it == tables.end()) it = tables.emplace(id, experiment::reproduce_table(id, experiment::Scale::Desk)).first;
    return it->second;
}

std::string table_csv(const experiment::Table& t) {
    std::ostringstream os;
    experiment::write_table_csv(os, t);
    return os.str();
}

Outcome windowing() {
    bool ok = true;
    std::string detail;
    std::map<std::pair<int, std::size_t>, double> q1, q2;
    for (const char* id : {"T7", "T8"}) {
        auto& store = std::string(id) == "T7" ? q1 : q2;
        for (const auto& cell : table(id).cells)
            store[{cell.order, cell.windows}] =
                cell.report.converged ? cell.report.average_iterations : std::nan("");
    }
    for (int order = 1; order <= 2; ++order) {
        for (auto* store : {&q1, &q2}) {
            std::string row = std::string(store == &q1 ? "Q1" : "Q2") + " BDF(" + std::to_string(order) + "):";
            for (std::size_t w = 1; w <= 6; ++w) {
                const double v = (*store)[{order, w}];
                row += " " + (std::isnan(v) ? std::string("---") : format_number(v));
                if (w > 1) {
                    const double prev = (*store)[{order, w - 1}];
                    if (!(v < prev)) ok = false;
                }
            }
            detail += row + "; ";
        }
        for (std::size_t w = 1; w <= 6; ++w)
            if (!(q2[{order, w}] <= q1[{order, w}])) ok = false;
    }
    return {ok, detail};
}

Outcome dpocf_trend() {
    bool ok = true;
    std::string detail;
    for (auto p : {Preconditioner::Q1, Preconditioner::Q2}) {
        std::map<std::size_t, double> dp;
        double dtocf = 0.0;
        for (std::size_t n : {6u, 12u, 60u}) {
            ExperimentConfig cfg;
            cfg.precond = p;
            cfg.windows = n;
            cfg.run_static = false;
            const auto rep = experiment::run_experiment(cfg);
            dtocf = rep.optimal.rho_opt;
            dp[n] = rep.converged ? rep.dpocf : std::nan("");
        }
        const bool here = dp[60] < dp[12] && dp[12] < dp[6] && std::abs(dp[60] - dtocf) <= 0.15;
        ok = ok && here;
        auto show = [](double v) { return std::isnan(v) ? std::string("---") : fmt(v); };
        detail += std::string(stokes::to_string(p)) + ": DPOCF(6,12,60) = " + show(dp[6]) + ", " + show(dp[12]) +
                  ", " + show(dp[60]) + ", DTOCF " + fmt(dtocf) + "; ";
    }
    return {ok, detail};
}

Outcome quantitative() {
    const BDFScheme s = bdf_coefficients(1);
    std::string detail;
    bool within = true;
    for (auto [p, published] : {std::pair{Preconditioner::Q1, 0.3590}, std::pair{Preconditioner::Q2, 0.2940}}) {
        const StokesSystem sys = stokes::make_system(stokes::square_grid(12), p);
        const double dtocf = optimal_params(compute_bounds(sys, sigma(s, kDt))).rho_opt;
        const double rel = (dtocf - published) / published;
        within = within && std::abs(rel) <= 0.10;
        detail += std::string(stokes::to_string(p)) + " BDF(1) DTOCF " + fmt(dtocf) + " vs published " +
                  fmt(published) + " (" + fmt(100.0 * rel, 3) + "%); ";
    }
    // The criterion is a contingency: outside ±10% it requires the deviation
    // to be logged, which this line does.
    detail += within ? "within 10%" : "outside 10%, deviation logged, criteria 1-10 stand on their own";
    return {true, detail};
}

Outcome determinism() {
    const std::string first = table_csv(table("T7").table);
    ExperimentConfig cfg;
    cfg.seed = 42;
    const std::string second = table_csv(experiment::reproduce_table("T7", experiment::Scale::Desk, cfg).table);
    return {first == second, first == second ? "T7 desk CSVs byte-identical (" + std::to_string(first.size()) + " bytes)"
                                             : "T7 desk CSVs differ"};
}

}  // namespace

int main() {
    criterion(1, "BDF coefficients", bdf_golden);
    criterion(2, "analytic solution", analytic_identity);
    criterion(3, "finite radius vs stacked window operator", theorem41);
    criterion(4, "discrete symbol relation", laplace_identity);
    criterion(5, "convergence domain soundness", domain_soundness);
    criterion(6, "optimal parameters", optimality);
    criterion(7, "infinite >= finite radius", infinite_vs_finite);
    criterion(8, "error propagation", error_propagation);
    criterion(9, "windowing acceleration", windowing);
    criterion(10, "DPOCF trend", dpocf_trend);
    criterion(11, "quantitative contingency", quantitative);
    criterion(12, "determinism", determinism);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
