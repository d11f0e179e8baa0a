#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "dabsor/experiment.hpp"

namespace fs = std::filesystem;
using namespace dabsor;
using namespace dabsor::experiment;
using nlohmann::ordered_json;

namespace {

ordered_json config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["grid"] = c.grid;
    j["order"] = c.order;
    j["dt"] = c.dt;
    j["t_start"] = c.t_start;
    j["t_end"] = c.t_end;
    j["windows"] = c.windows;
    j["precond"] = std::string(stokes::to_string(c.precond));
    j["params"] = c.optimal ? "optimal" : "explicit";
    if (!c.optimal) {
        j["omega"] = c.omega;
        j["tau"] = c.tau;
    }
    j["max_iters"] = c.max_iters;
    j["tol"] = c.tol;
    j["static"] = c.run_static;
    j["out"] = c.out;
    j["seed"] = c.seed;
    j["resolution"] = c.resolution;
    return j;
}

ordered_json report_json(const ExperimentConfig& c, const RunReport& r) {
    const BDFScheme s = bdf_coefficients(c.order);
    ordered_json j;
    j["config"] = config_json(c);
    j["scheme"] = {{"order", s.order}, {"alpha", s.alpha}, {"beta", s.beta}};
    j["sigma"] = r.sigma;
    const auto& b = r.bounds;
    j["bounds"] = {{"eta_min", b.eta_min},         {"eta_max", b.eta_max},         {"mu_min", b.mu_min},
                   {"mu_max", b.mu_max},           {"delta_min", b.delta_min()},   {"delta_max", b.delta_max()},
                   {"gamma_min", b.gamma_min()},   {"gamma_max", b.gamma_max()}};
    j["optimal"] = {{"delta_star", r.optimal.delta_star},
                    {"omega", r.optimal.omega_opt},
                    {"tau", r.optimal.tau_opt},
                    {"rho", r.optimal.rho_opt}};
    j["params"] = {{"omega", r.omega}, {"tau", r.tau}};
    j["rho_sigma"] = r.rho;
    j["in_domain"] = r.in_domain;
    j["assumptions"] = {{"spectrum_excludes_probe", r.assumptions.a1},
                        {"theta_nonpositive_delta_gt_1", r.assumptions.a2},
                        {"theta_nonpositive_delta_le_1", r.assumptions.a3}};
    j["DTOCF"] = r.optimal.rho_opt;
    if (r.static_run) {
        j["APOCF"] = r.static_converged ? ordered_json(r.apocf) : ordered_json(nullptr);
        j["static_iterations"] = r.static_iterations;
        j["static_converged"] = r.static_converged;
    }
    j["converged"] = r.converged;
    j["DPOCF"] = r.converged ? ordered_json(r.dpocf) : ordered_json(nullptr);
    j["average_iterations"] = r.converged ? ordered_json(r.average_iterations) : ordered_json(nullptr);
    j["window_lengths"] = r.window_lengths;
    j["iterations"] = r.iterations;
    if (r.failed_window) {
        j["failed_window"] = *r.failed_window;
        j["failure"] = r.failure;
    }
    j["checksum"] = r.converged ? ordered_json(r.checksum) : ordered_json(nullptr);
    j["reference_deviation"] = r.converged ? ordered_json(r.reference_deviation) : ordered_json(nullptr);
    j["histories"] = r.histories;
    return j;
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("out: cannot write " + p.string());
    return f;
}

int cmd_run(const ExperimentConfig& cfg) {
    const RunReport rep = run_experiment(cfg);
    ensure_dir(cfg.out);
    open_out(fs::path(cfg.out) / "report.json") << report_json(cfg, rep).dump(2) << '\n';
    auto hist = open_out(fs::path(cfg.out) / "history.csv");
    write_history_csv(hist, rep);
    std::cout << "rho(K(sigma)) = " << format_number(rep.rho) << ", DTOCF = " << format_number(rep.optimal.rho_opt)
              << '\n';
    if (!rep.converged) {
        std::cerr << "error: " << rep.failure << '\n';
        return 2;
    }
    std::cout << "average iterations per window = " << format_number(rep.average_iterations)
              << ", DPOCF = " << format_number(rep.dpocf) << '\n';
    return 0;
}

int cmd_table(const ExperimentConfig& cfg, const std::string& id, Scale scale) {
    const TableResult res = reproduce_table(id, scale, cfg);
    ensure_dir(cfg.out);
    const fs::path path = fs::path(cfg.out) / (res.table.id + ".csv");
    auto f = open_out(path);
    write_table_csv(f, res.table);
    write_table_csv(std::cout, res.table);
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

int cmd_surface(const ExperimentConfig& cfg, const SurfaceRange& range) {
    const auto pts = emit_surface(cfg, range);
    ensure_dir(cfg.out);
    const fs::path path = fs::path(cfg.out) / "surface.csv";
    auto f = open_out(path);
    write_surface_csv(f, pts);
    std::cout << "wrote " << pts.size() << " points to " << path.string() << '\n';
    return 0;
}

int cmd_export(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = stokes::make_system(stokes::square_grid(cfg.grid), cfg.precond);
    ensure_dir(cfg.out);
    const std::string tag = std::to_string(cfg.grid) + "x" + std::to_string(cfg.grid);
    auto fa = open_out(fs::path(cfg.out) / "A.mtx");
    stokes::write_matrix_market(fa, sys.A, "velocity block, " + tag);
    auto fb = open_out(fs::path(cfg.out) / "B.mtx");
    stokes::write_matrix_market(fb, sys.B, "pressure gradient, " + tag);
    auto fq = open_out(fs::path(cfg.out) / "Q.mtx");
    stokes::write_matrix_market(fq, sys.Q, std::string(stokes::to_string(cfg.precond)) + " preconditioner, " + tag);
    std::cout << "wrote A.mtx B.mtx Q.mtx to " << cfg.out << '\n';
    return 0;
}

// Structural checks plus seeded spot checks of the spectral predictions.
int cmd_check(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = stokes::make_system(stokes::square_grid(cfg.grid), cfg.precond);
    const BDFScheme scheme = bdf_coefficients(cfg.order);
    int failures = 0;
    auto report = [&](bool ok, const std::string& what) {
        std::cout << (ok ? "PASS " : "FAIL ") << what << '\n';
        if (!ok) ++failures;
    };
    const auto sc = stokes::check_system(sys);
    report(sc.a_symmetric && sc.a_spd, "A symmetric positive definite");
    report(sc.b_full_rank, "B full column rank");
    report(sc.q_symmetric && sc.q_spd, "Q symmetric positive definite");

    const double sig = sigma(scheme, cfg.dt);
    const auto bounds = spectral::compute_bounds(sys, sig);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
    double worst = 0.0;
    for (std::size_t k = 0; k < cfg.resolution; ++k) {
        const double w = 2.0 * u(rng);
        const double t = 2.0 * bounds.eta_min * bounds.mu_min * (2.0 / w + bounds.delta_min() - 1.0) * u(rng);
        worst = std::max(worst, spectral::finite_interval_radius(sys, scheme, cfg.dt, w, t));
    }
    report(worst < 1.0, "sampled convergence-domain points contract (max rho " + format_number(worst) + ")");
    const auto opt = spectral::optimal_params(bounds);
    const double rho = spectral::finite_interval_radius(sys, scheme, cfg.dt, opt.omega_opt, opt.tau_opt);
    report(rho <= opt.rho_opt + 1e-6,
           "rho at closed-form optimum " + format_number(rho) + " <= " + format_number(opt.rho_opt));
    return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block SOR waveform relaxation for semi-discrete Stokes DAEs"};
    app.set_config("--config", "", "flat key=value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    ExperimentConfig cfg;
    std::string precond = "q1";
    std::string scale = "desk";
    app.add_option("--grid", cfg.grid, "interior points per direction")->capture_default_str();
    app.add_option("--order", cfg.order, "BDF order 1..6")->capture_default_str();
    app.add_option("--dt", cfg.dt, "time step")->capture_default_str();
    app.add_option("--t-start", cfg.t_start, "interval start")->capture_default_str();
    app.add_option("--t-end", cfg.t_end, "interval end")->capture_default_str();
    app.add_option("--windows", cfg.windows, "number of windows")->capture_default_str();
    app.add_option("--precond", precond, "q1 or q2")->capture_default_str();
    auto* omega = app.add_option("--omega", cfg.omega, "explicit omega");
    auto* tau = app.add_option("--tau", cfg.tau, "explicit tau");
    auto* optimal = app.add_flag("--optimal", "closed-form optimal omega and tau (default unless --omega/--tau)");
    app.add_option("--max-iters", cfg.max_iters, "iteration cap per window")->capture_default_str();
    app.add_option("--tol", cfg.tol, "stopping tolerance")->capture_default_str();
    app.add_option("--out", cfg.out, "output directory")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed for sampled checks")->capture_default_str();
    app.add_option("--resolution", cfg.resolution, "surface points per axis, or check samples")->capture_default_str();
    app.add_option("--scale", scale, "full or desk")->capture_default_str();
    bool no_static = false;
    app.add_flag("--no-static", no_static, "skip the static iteration");

    auto* run = app.add_subcommand("run", "windowed run: report.json and history.csv");
    auto* table = app.add_subcommand("table", "reproduce a table T3..T10 as CSV");
    std::string table_id;
    table->add_option("id", table_id, "table id")->required();
    auto* surface = app.add_subcommand("surface", "spectral radius surface over (omega, tau)");
    SurfaceRange range;
    std::vector<double> omega_range, tau_range;
    surface->add_option("--omega-range", omega_range, "lo hi")->expected(2);
    surface->add_option("--tau-range", tau_range, "lo hi (default 0.1 to twice the optimal tau)")->expected(2);
    auto* exp = app.add_subcommand("export-matrices", "write A, B, Q as MatrixMarket");
    auto* check = app.add_subcommand("check", "structural and sampled spectral checks");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.precond = parse_preconditioner(precond);
        cfg.optimal = optimal->count() > 0 || (omega->count() == 0 && tau->count() == 0);
        cfg.run_static = !no_static;
        if (omega_range.size() == 2) {
            range.omega_lo = omega_range[0];
            range.omega_hi = omega_range[1];
        }
        if (tau_range.size() == 2) {
            range.tau_lo = tau_range[0];
            range.tau_hi = tau_range[1];
        }
        if (*run) return cmd_run(cfg);
        if (*table) return cmd_table(cfg, table_id, parse_scale(scale));
        if (*surface) return cmd_surface(cfg, range);
        if (*exp) return cmd_export(cfg);
        if (*check) return cmd_check(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
