// Command-line driver: forward, reconstruct, chain and calibrate runs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "calderon/calderon.hpp"

namespace fs = std::filesystem;
using namespace calderon;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    unsigned threads = default_thread_count();
    std::uint64_t seed = 1;
    double noise_rel = 0.0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(p, mode);
    if (!f) throw Error("cannot write " + p.string());
    return f;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Config load_and_snapshot(const Options& o) {
    const std::string text = read_text(o.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(o.config + ": " + e.what());
    }
    Config c = parse_config(j);
    fs::create_directories(o.out);
    auto snapshot = open_out(fs::path(o.out) / "config.json");
    snapshot << text;
    return c;
}

ForwardOptions forward_options(const Config& c, const Options& o) {
    ForwardOptions f;
    f.solver = c.solver;
    f.threads = o.threads;
    return f;
}

void write_metrics(const fs::path& p, const std::vector<std::pair<std::string, std::string>>& kv) {
    auto f = open_out(p);
    for (const auto& [k, v] : kv) f << k << ' ' << v << '\n';
}

std::string num(double x) {
    std::ostringstream s;
    s.precision(10);
    s << x;
    return s.str();
}

struct Measured {
    ForwardSolution solution;
    NDMatrix nd;  ///< with noise, if requested
};

Measured measure(const Setup& s, const Options& o) {
    const auto field = discretize(s.mesh, s.config.field, s.config.quadrature, o.threads);
    Measured m{forward_solve(s.mesh, field, s.basis, forward_options(s.config, o)), {}};
    m.nd = add_noise(m.solution.nd, o.noise_rel, o.seed);
    return m;
}

/// Largest relative gap between <f, u|Γ> and the stiffness energy of u.
double energy_identity_error(const ForwardSolution& fw) {
    double worst = 0.0;
    for (int k = 0; k < fw.loads.cols(); ++k) {
        const Eigen::VectorXd u = fw.potentials.col(k);
        const double flux = fw.loads.col(k).dot(u);
        const double e = dirichlet_energy(fw.system, u);
        worst = std::max(worst, std::abs(flux - e) / std::max(std::abs(e), 1e-300));
    }
    return worst;
}

void report_warnings(const Setup& s) {
    for (const auto& w : s.basis.warnings) std::cerr << "warning: " << w << '\n';
}

int run_forward(const Options& o) {
    const auto t0 = Clock::now();
    const Setup s = prepare(load_and_snapshot(o));
    report_warnings(s);
    const auto m = measure(s, o);
    const fs::path out(o.out);
    {
        auto f = open_out(out / "nd.txt");
        write_nd(f, m.nd);
    }
    {
        auto f = open_out(out / "eigenvalues.txt");
        const auto ev = pencil_eigenvalues(m.nd.L, s.basis.G);
        for (int i = ev.size() - 1; i >= 0; --i) f << num(ev(i)) << '\n';
    }
    std::vector<std::pair<std::string, std::string>> kv{
        {"h", num(s.config.h)},
        {"m", std::to_string(s.basis.m)},
        {"vertices", std::to_string(s.mesh.num_vertices())},
        {"triangles", std::to_string(s.mesh.num_triangles())},
        {"asymmetry", num(m.solution.nd.asymmetry)},
        {"energy_identity_error", num(energy_identity_error(m.solution))},
        {"noise_rel", num(o.noise_rel)},
        {"seed", std::to_string(o.seed)},
    };
    for (std::size_t i = 0; i < s.config.field.regions.regions.size(); ++i) {
        const auto& w = s.config.field.region_weights[i];
        if (w.is_constant()) continue;
        const auto est = estimate_a2_constant(w, s.config.domain, s.config.a2_balls, s.config.a2_quad, o.threads);
        kv.push_back({"a2_" + s.config.field.regions.regions[i].name, num(est.constant_estimate)});
    }
    kv.push_back({"wall_time", num(seconds_since(t0))});
    write_metrics(out / "metrics.txt", kv);
    return 0;
}

int run_reconstruct(const Options& o) {
    const auto t0 = Clock::now();
    const Setup s = prepare(load_and_snapshot(o));
    report_warnings(s);
    const auto m = measure(s, o);
    ReconstructionOptions ro;
    ro.grid_n = s.config.grid_n;
    ro.tau = s.config.tau;
    ro.side = s.config.side;
    ro.threads = o.threads;
    ro.fill = s.config.fill;
    ro.mode = s.config.scan;
    auto res = reconstruct(m.nd, s.config.domain, s.mesh, s.config.field.background, s.basis, ro);
    const auto truth = inclusion_polygons(s.config.field);
    if (!truth.empty()) res.jaccard = jaccard(res, s.config.domain, truth);

    const fs::path out(o.out);
    {
        auto f = open_out(out / "nd.txt");
        write_nd(f, m.nd);
    }
    {
        auto f = open_out(out / "verdicts.txt");
        for (const auto& v : res.log) write_verdict(f, v);
    }
    rasterize(res, (out / "result.csv").string(), (out / "result.ppm").string());
    int indeterminate = 0, filled = 0;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        indeterminate += res.indeterminate[i];
        filled += res.filled[i];
    }
    write_metrics(out / "metrics.txt", {{"jaccard", truth.empty() ? "nan" : num(res.jaccard)},
                                        {"tau", num(ro.tau)},
                                        {"grid_n", std::to_string(ro.grid_n)},
                                        {"m", std::to_string(s.basis.m)},
                                        {"h", num(s.config.h)},
                                        {"side", std::string(to_string(ro.side))},
                                        {"inside_cells", std::to_string(res.count_inside())},
                                        {"indeterminate_cells", std::to_string(indeterminate)},
                                        {"filled_cells", std::to_string(filled)},
                                        {"tests", std::to_string(res.log.size())},
                                        {"noise_rel", num(o.noise_rel)},
                                        {"seed", std::to_string(o.seed)},
                                        {"wall_time", num(seconds_since(t0))}});
    return 0;
}

int run_chain(const Options& o) {
    const auto t0 = Clock::now();
    const Setup s = prepare(load_and_snapshot(o));
    report_warnings(s);
    const auto& c = s.config;
    const auto fwd = forward_options(c, o);
    const auto [lo, hi] = bracket_coefficients(c.domain, c.field);
    const auto m = measure(s, o);
    const NDMatrix L_lo = nd_matrix(s.mesh, lo, s.basis, c.quadrature, fwd);
    const NDMatrix L_hi = nd_matrix(s.mesh, hi, s.basis, c.quadrature, fwd);
    const auto background = discretize_background(s.mesh, c.field.background, c.quadrature, o.threads);
    const auto C = s.chain_set();
    const NDMatrix L0 = nd_extreme(s.mesh, C, ExtremeKind::insulating, background, s.basis, fwd);
    const NDMatrix Linf = nd_extreme(s.mesh, C, ExtremeKind::conducting, background, s.basis, fwd);
    const auto report = bracketing_chain(m.nd, L_lo, L_hi, L0, Linf, s.basis.G, c.tau);
    const fs::path out(o.out);
    {
        auto f = open_out(out / "chain.txt");
        write_chain(f, report, c.tau);
    }
    {
        auto f = open_out(out / "nd.txt");
        write_nd(f, m.nd);
    }
    write_metrics(out / "metrics.txt", {{"all_pass", report.all_pass() ? "1" : "0"},
                                        {"tau", num(c.tau)},
                                        {"m", std::to_string(s.basis.m)},
                                        {"h", num(c.h)},
                                        {"wall_time", num(seconds_since(t0))}});
    return report.all_pass() ? 0 : 1;
}

/// Sweeps (h, m, tau). For each setting: the largest relative error of the
/// background ND eigenvalues against 1/n (unit disk, full arc, constant
/// background only) and the reconstruction score.
int run_calibrate(const Options& o) {
    const Config base = load_and_snapshot(o);
    auto f = open_out(fs::path(o.out) / "calibration.txt");
    f << "h m tau vertices oracle_max_rel_err jaccard inside_cells wall_time\n";
    const bool oracle = base.domain.shape == DomainShape::disk && base.domain.gamma_is_full() &&
                        base.field.background.is_constant();
    const auto truth = inclusion_polygons(base.field);
    for (double h : base.calibrate_h)
        for (int m : base.calibrate_m) {
            const auto t0 = Clock::now();
            const Setup s = prepare(base, h, m);
            report_warnings(s);
            const auto fwd = forward_options(s.config, o);
            double oracle_err = std::numeric_limits<double>::quiet_NaN();
            const auto background = discretize_background(s.mesh, s.config.field.background, s.config.quadrature, o.threads);
            if (oracle) {
                const auto ev = pencil_eigenvalues(nd_matrix(s.mesh, background, s.basis, fwd).L, s.basis.G);
                const double g0 = s.config.field.background.scale;
                oracle_err = 0.0;
                for (int k = 0; k < ev.size(); ++k) {
                    const int n = CurrentBasis::frequency(static_cast<int>(ev.size()) - 1 - k);
                    const double exact = disk_nd_eigenvalue(n, 0.0, 1.0, g0);
                    oracle_err = std::max(oracle_err, std::abs(ev(k) - exact) / exact);
                }
            }
            const auto meas = measure(s, o);
            const double setup_time = seconds_since(t0);
            for (double tau : base.calibrate_tau) {
                const auto t1 = Clock::now();
                ReconstructionOptions ro;
                ro.grid_n = s.config.grid_n;
                ro.tau = tau;
                ro.side = s.config.side;
                ro.threads = o.threads;
                ro.fill = s.config.fill;
                ro.mode = s.config.scan;
                auto res = reconstruct(meas.nd, s.config.domain, s.mesh, s.config.field.background, s.basis, ro);
                const double jac = truth.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : jaccard(res, s.config.domain, truth);
                f << num(h) << ' ' << m << ' ' << num(tau) << ' ' << s.mesh.num_vertices() << ' ' << num(oracle_err)
                  << ' ' << num(jac) << ' ' << res.count_inside() << ' ' << num(setup_time + seconds_since(t1))
                  << '\n';
                f.flush();
            }
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotonicity-based shape reconstruction from local Neumann-to-Dirichlet data"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "noise seed")->capture_default_str();
        sub->add_option("--noise-rel", o.noise_rel, "relative Frobenius size of the measurement noise")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
    };
    auto* forward = app.add_subcommand("forward", "compute the ND matrix of the configured coefficient");
    auto* recon = app.add_subcommand("reconstruct", "scan the grid and write the reconstructed shape");
    auto* chain = app.add_subcommand("chain", "check the bracketing operator chain for the configured test set");
    auto* calibrate = app.add_subcommand("calibrate", "sweep h, m and tau and write a calibration table");
    for (auto* sub : {forward, recon, chain, calibrate}) common(sub);
    CLI11_PARSE(app, argc, argv);

    try {
        if (forward->parsed()) return run_forward(o);
        if (recon->parsed()) return run_reconstruct(o);
        if (chain->parsed()) return run_chain(o);
        return run_calibrate(o);
    } catch (const ValidationFailure& e) {
        std::cerr << "invalid configuration:\n";
        for (const auto& v : e.violations()) std::cerr << "  [" << v.clause << "] " << v.message << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << " (relative residual " << e.residual() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
