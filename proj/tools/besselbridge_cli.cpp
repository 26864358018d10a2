// Command-line front end: config-driven verification and simulation runs
// writing CSV reports. Exit code 0 iff every configured tolerance is met,
// 1 on a tolerance failure, 2 on a usage or configuration error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "besselbridge/ibpf.hpp"
#include "besselbridge/renorm.hpp"
#include "besselbridge/sampler.hpp"
#include "besselbridge/spde.hpp"
#include "besselbridge/specfun.hpp"
#include "config.hpp"

namespace bb = besselbridge;
namespace cfg = besselbridge::config;
using cfg::json;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> threads;

    std::uint64_t seed_from(const json& j) const {
        return seed ? *seed : cfg::count_or(j, "seed", 1, "config");
    }
    int thread_count() const { return threads ? *threads : bb::default_threads(); }
    std::string out(const std::string& name) const { return (std::filesystem::path(out_dir) / name).string(); }
};

int finish(bool ok) {
    std::cout << (ok ? "all tolerances met" : "TOLERANCE FAILURE") << "\n";
    return ok ? 0 : 1;
}

// ---- verify-mu ------------------------------------------------------------

bool within_guard_band(double alpha) {
    if (alpha > bb::pole_guard) return false;
    const double r = std::round(alpha);
    return r != alpha && std::abs(alpha - r) < bb::pole_guard;
}

int cmd_verify_mu(const json& j, const Globals& g) {
    cfg::check_keys(j, {"alphas", "lambdas", "functions", "gamma_x", "gamma_c", "tolerance", "gamma_rel_tolerance", "seed"},
                    "verify-mu");
    const auto alphas = cfg::numbers(cfg::require(j, "alphas", "verify-mu"), "alphas");
    if (alphas.empty()) throw cfg::ConfigError("verify-mu: alphas must not be empty");
    const auto lambdas = j.contains("lambdas") ? cfg::numbers(j.at("lambdas"), "lambdas") : std::vector<double>{};
    std::vector<bb::ScalarTestFunction> fns;
    if (j.contains("functions")) {
        const auto& f = j.at("functions");
        if (!f.is_array()) throw cfg::ConfigError("functions: expected an array");
        for (std::size_t i = 0; i < f.size(); ++i) fns.push_back(cfg::scalar_function(f[i], "functions[" + std::to_string(i) + "]"));
    }
    const auto gx = j.contains("gamma_x") ? cfg::numbers(j.at("gamma_x"), "gamma_x") : std::vector<double>{};
    const auto gc = j.contains("gamma_c") ? cfg::numbers(j.at("gamma_c"), "gamma_c") : std::vector<double>{};
    const double tol = cfg::number_or(j, "tolerance", 1e-8, "verify-mu");
    const double rel_tol = cfg::number_or(j, "gamma_rel_tolerance", 1e-8, "verify-mu");

    bb::csv::Writer w(g.out("verify_mu.csv"), {"check", "alpha", "lambda_or_phi", "value", "expected", "residual", "status"});
    bool ok = true;
    int rows = 0, skipped = 0;
    auto emit = [&](const char* check, double alpha, const std::string& label, double value, double expected,
                    double residual, double limit) {
        const bool pass = std::isfinite(residual) && std::abs(residual) <= limit;
        ok = ok && pass;
        ++rows;
        w.row({check, alpha, label, value, expected, residual, pass ? "pass" : "fail"});
    };
    auto skip = [&](const char* check, double alpha, const std::string& label, const std::string& reason) {
        ++skipped;
        w.row({check, alpha, label, "", "", "", "skip: " + reason});
    };
    auto guarded = [&](double a) { return within_guard_band(a); };

    for (double a : alphas) {
        for (double lam : lambdas) {
            const std::string label = "lambda=" + bb::csv::sci(lam);
            if (guarded(a)) {
                skip("laplace", a, label, "alpha within pole guard band");
                continue;
            }
            const double v = bb::pair_mu(a, bb::test_functions::exponential(lam));
            const double e = std::pow(lam, -a);
            emit("laplace", a, label, v, e, v - e, tol);
        }
        for (const auto& phi : fns) {
            if (guarded(a) || guarded(a - 1.0)) {
                skip("ibp", a, phi.name(), "alpha within pole guard band");
                continue;
            }
            const double v = bb::pair_mu(a, phi.derivative_instance());
            const double e = -bb::pair_mu(a - 1.0, phi);
            emit("ibp", a, phi.name(), v, e, v - e, tol);
            if (a < 0.0 && a != std::floor(a)) {
                const int k = static_cast<int>(std::floor(-a));
                const double cv = bb::pair_mu(a, phi);
                const double ce = ((k + 1) % 2 ? -1.0 : 1.0) * bb::pair_mu(a + k + 1, phi.derivative_instance(k + 1));
                emit("caputo", a, phi.name(), cv, ce, cv - ce, tol);
            }
        }
    }
    for (double x : gx)
        for (double c : gc) {
            const std::string label = "C=" + bb::csv::sci(c);
            try {
                const double v = bb::renorm_gamma_integral(x, c);
                const double e = bb::specfun::gamma(x) * std::pow(c, -x);
                emit("renorm_gamma", x, label, v, e, (v - e) / std::abs(e), rel_tol);
            } catch (const bb::specfun::PoleError&) {
                skip("renorm_gamma", x, label, "x at a pole of Gamma");
            }
        }
    std::cout << "verify-mu: " << rows << " checks, " << skipped << " skipped -> " << g.out("verify_mu.csv") << "\n";
    return finish(ok);
}

// ---- verify-ibpf ----------------------------------------------------------

int cmd_verify_ibpf(const json& j, const Globals& g) {
    cfg::check_keys(j, {"deltas", "functionals", "test_functions", "tolerance", "monte_carlo", "n", "grid_points", "seed"},
                    "verify-ibpf");
    const auto deltas = cfg::numbers(cfg::require(j, "deltas", "verify-ibpf"), "deltas");
    if (deltas.empty()) throw cfg::ConfigError("verify-ibpf: deltas must not be empty");
    const auto& fj = cfg::require(j, "functionals", "verify-ibpf");
    const auto& hj = cfg::require(j, "test_functions", "verify-ibpf");
    if (!fj.is_array() || fj.empty()) throw cfg::ConfigError("functionals: expected a nonempty array");
    if (!hj.is_array() || hj.empty()) throw cfg::ConfigError("test_functions: expected a nonempty array");
    std::vector<bb::ExpFunctional> phis;
    for (std::size_t i = 0; i < fj.size(); ++i) phis.push_back(cfg::functional(fj[i], "functionals[" + std::to_string(i) + "]"));
    std::vector<bb::TestFunctionH> hs;
    for (std::size_t i = 0; i < hj.size(); ++i) hs.push_back(cfg::test_function_h(hj[i], "test_functions[" + std::to_string(i) + "]"));

    bb::VerifyOptions opt;
    opt.tolerance = cfg::number_or(j, "tolerance", 1e-6, "verify-ibpf");
    opt.monte_carlo = cfg::bool_or(j, "monte_carlo", false, "verify-ibpf");
    opt.mc.n = cfg::count_or(j, "n", 100000, "verify-ibpf");
    opt.mc.grid_points = static_cast<int>(cfg::count_or(j, "grid_points", 64, "verify-ibpf"));
    opt.mc.seed = g.seed_from(j);
    opt.mc.threads = g.thread_count();
    if (opt.monte_carlo && opt.mc.n == 0) throw cfg::ConfigError("verify-ibpf: n must be positive");

    std::vector<bb::IbpfReport> reports;
    bool ok = true;
    for (double d : deltas)
        for (const auto& phi : phis)
            for (const auto& h : hs) {
                reports.push_back(bb::verify(d, phi, h, opt));
                const auto& r = reports.back();
                ok = ok && r.pass();
                if (!r.pass()) std::cout << "  fail: delta=" << d << " phi=" << r.phi_id << " h=" << r.h_id << "\n";
            }
    bb::write_ibpf_csv(g.out("ibpf.csv"), reports);
    std::cout << "verify-ibpf: " << reports.size() << " cases -> " << g.out("ibpf.csv") << "\n";
    return finish(ok);
}

// ---- sample ---------------------------------------------------------------

int cmd_sample(const json& j, const Globals& g) {
    cfg::check_keys(j, {"deltas", "rs", "n", "seed", "additivity", "expectations", "grid_points", "dump_paths", "dump_delta"},
                    "sample");
    const auto n = cfg::count_or(j, "n", 100000, "sample");
    if (n == 0) throw cfg::ConfigError("sample: n must be positive");
    const auto seed = g.seed_from(j);
    const int threads = g.thread_count();
    const auto deltas = j.contains("deltas") ? cfg::numbers(j.at("deltas"), "deltas") : std::vector<double>{};
    const auto rs = j.contains("rs") ? cfg::numbers(j.at("rs"), "rs") : std::vector<double>{0.25, 0.5, 0.75};
    const int grid_points = static_cast<int>(cfg::count_or(j, "grid_points", 64, "sample"));

    bool ok = true;
    std::vector<bb::KsResult> ks;
    for (double d : deltas)
        for (const auto& k : bb::marginal_ks(d, rs, n, seed, threads)) ks.push_back(k);
    if (j.contains("additivity")) {
        const auto& a = j.at("additivity");
        if (!a.is_array()) throw cfg::ConfigError("additivity: expected an array of [delta, delta'] pairs");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto p = cfg::numbers(a[i], "additivity[" + std::to_string(i) + "]");
            if (p.size() != 2) throw cfg::ConfigError("additivity: each entry is [delta, delta']");
            for (const auto& k : bb::additivity_check(p[0], p[1], rs, n, seed, threads)) ks.push_back(k);
        }
    }
    for (const auto& k : ks) ok = ok && k.pass();
    bb::write_ks_csv(g.out("ks.csv"), ks);

    bb::csv::Writer w(g.out("expectations.csv"),
                      {"delta", "phi_id", "estimate", "se", "exact", "grid_bias", "residual", "pass"});
    if (j.contains("expectations")) {
        const auto& e = j.at("expectations");
        if (!e.is_array()) throw cfg::ConfigError("expectations: expected an array");
        const auto base = bb::uniform_grid(grid_points);
        for (std::size_t i = 0; i < e.size(); ++i) {
            const std::string where = "expectations[" + std::to_string(i) + "]";
            cfg::check_keys(e[i], {"delta", "functional"}, where);
            const double d = cfg::number(cfg::require(e[i], "delta", where), where + ".delta");
            const auto phi = cfg::functional(cfg::require(e[i], "functional", where), where + ".functional");
            const auto est = bb::mc_expectation(d, phi, base, n, seed, threads);
            const double exact = bb::bridge_expectation(d, phi);
            const double bias = bb::grid_bias(d, phi, base);
            const bool pass = std::abs(est.mean - exact) <= 3.0 * est.se + bias;
            ok = ok && pass;
            w.row({d, phi.name(), est.mean, est.se, exact, bias, est.mean - exact, pass ? "1" : "0"});
        }
    }

    const auto dump = cfg::count_or(j, "dump_paths", 0, "sample");
    if (dump > 0) {
        const double d = cfg::number_or(j, "dump_delta", 1.0, "sample");
        const auto grid = bb::uniform_grid(grid_points);
        auto paths = bb::parallel_map<bb::BridgePath>(
            dump,
            [&](std::size_t i) {
                bb::RngStream rng(seed, i);
                return bb::sample_bessel_bridge(d, grid, rng);
            },
            threads);
        bb::write_paths_csv(g.out("paths.csv"), paths);
    }
    std::cout << "sample: " << ks.size() << " KS rows -> " << g.out("ks.csv") << ", expectations -> "
              << g.out("expectations.csv") << "\n";
    return finish(ok);
}

// ---- spde -----------------------------------------------------------------

int cmd_spde(const json& j, const Globals& g) {
    cfg::check_keys(j, {"m", "eps", "dt", "t_end", "replicas", "burn_in", "drift", "control", "tolerance", "probe_stride",
                        "snapshot_stride", "noise", "seed"},
                    "spde");
    bb::SpdeConfig c;
    c.m = static_cast<int>(cfg::count_or(j, "m", c.m, "spde"));
    c.eps = cfg::number_or(j, "eps", c.eps, "spde");
    c.dt = cfg::number_or(j, "dt", c.dt, "spde");
    c.t_end = cfg::number_or(j, "t_end", c.t_end, "spde");
    c.replicas = static_cast<int>(cfg::count_or(j, "replicas", c.replicas, "spde"));
    c.burn_in = cfg::number_or(j, "burn_in", 0.5 * c.t_end, "spde");
    c.noise = cfg::number_or(j, "noise", c.noise, "spde");
    c.probe_stride = static_cast<int>(cfg::count_or(j, "probe_stride", c.probe_stride, "spde"));
    c.snapshot_stride = static_cast<int>(cfg::count_or(j, "snapshot_stride", c.snapshot_stride, "spde"));
    if (c.probe_stride <= 0) throw cfg::ConfigError("spde: probe_stride must be positive");
    const bool run_drift = cfg::bool_or(j, "drift", true, "spde");
    const bool run_control = cfg::bool_or(j, "control", true, "spde");
    const double tol = cfg::number_or(j, "tolerance", 0.05, "spde");
    const auto seed = g.seed_from(j);
    try {
        bb::detail::check_stability(c);
    } catch (const std::invalid_argument& e) {
        throw cfg::ConfigError(std::string("spde: ") + e.what());
    }

    std::vector<bb::DiagnosticsRow> diag;
    const double x_probe = c.probe_index() * c.dx();
    auto run = [&](bool drift, const char* name) {
        auto rc = c;
        rc.drift = drift;
        const auto runs = bb::run_replicas(rc, seed, g.thread_count());
        bb::write_trajectory_csv(g.out(std::string("trajectory_") + name + ".csv"), runs);
        diag.push_back({name, x_probe, bb::stationarity_report(runs, rc.burn_in, drift), tol});
        const auto& r = diag.back().report;
        std::printf("  %s: KS %.4f (tol %.3g), samples %zu, autocorrelation %.1f, negativity %.4f\n", name, r.ks_distance,
                    tol, r.samples, r.autocorrelation_time, r.negativity_fraction);
    };
    if (run_drift) run(true, "bessel1");
    if (run_control) run(false, "she");
    bb::write_diagnostics_csv(g.out("diagnostics.csv"), diag);
    bool ok = true;
    for (const auto& d : diag) ok = ok && d.pass();
    std::cout << "spde: diagnostics -> " << g.out("diagnostics.csv") << "\n";
    return finish(ok);
}

// ---- mollified ------------------------------------------------------------

int cmd_mollified(const json& j, const Globals& g) {
    cfg::check_keys(j, {"functional", "test_function", "eps", "min_order", "rel_tolerance", "seed"}, "mollified");
    const auto phi = cfg::functional(cfg::require(j, "functional", "mollified"), "functional");
    const auto h = cfg::test_function_h(cfg::require(j, "test_function", "mollified"), "test_function");
    const auto eps = j.contains("eps") ? cfg::numbers(j.at("eps"), "eps") : std::vector<double>{0.2, 0.1, 0.05};
    if (eps.size() < 2) throw cfg::ConfigError("mollified: need at least two eps values");
    const double min_order = cfg::number_or(j, "min_order", 1.8, "mollified");
    const double rel = cfg::number_or(j, "rel_tolerance", 1e-2, "mollified");
    double target = 0.0;
    const auto rows = bb::mollified_limit_check(phi, h, eps, &target);
    bb::write_mollified_csv(g.out("mollified.csv"), rows, target);
    bool ok = std::abs(rows.back().error) <= rel * std::abs(target);
    for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].order >= min_order;
    for (const auto& r : rows) std::printf("  eps %.3g: value %.10f error %.3e order %.3f\n", r.eps, r.value, r.error, r.order);
    std::cout << "mollified: target " << bb::csv::sci(target) << " -> " << g.out("mollified.csv") << "\n";
    return finish(ok);
}

// ---- distinction ----------------------------------------------------------

int cmd_distinction(const json& j, const Globals& g) {
    cfg::check_keys(j, {"cases", "quad_tolerance", "seed"}, "distinction");
    const auto& cases = cfg::require(j, "cases", "distinction");
    if (!cases.is_array() || cases.empty()) throw cfg::ConfigError("distinction.cases: expected a nonempty array");
    const double qtol = cfg::number_or(j, "quad_tolerance", 1e-8, "distinction");
    std::vector<bb::DistinctionRow> rows;
    bool ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string where = "cases[" + std::to_string(i) + "]";
        cfg::check_keys(cases[i], {"id", "k", "test_function", "expect", "threshold"}, where);
        const auto k = cfg::k_function(cfg::require(cases[i], "k", where), where + ".k");
        const auto h = cfg::test_function_h(cfg::require(cases[i], "test_function", where), where + ".test_function");
        const auto expect = cfg::string(cfg::require(cases[i], "expect", where), where + ".expect");
        if (expect != "zero" && expect != "nonzero") throw cfg::ConfigError(where + ".expect: 'zero' or 'nonzero'");
        const double thr = cfg::number_or(cases[i], "threshold", expect == "zero" ? 1e-10 : 1e-3, where);
        const auto res = bb::distinction_gap(k, h, qtol);
        const bool pass = expect == "zero" ? std::abs(res.gap) <= thr : std::abs(res.gap) >= thr;
        ok = ok && pass;
        const std::string id = cases[i].contains("id") ? cfg::string(cases[i].at("id"), where + ".id") : where;
        rows.push_back({id, res, bb::distinction_residual(k, 0.5), pass});
        std::printf("  %s: J %.10e L %.10e gap %.3e (%s)\n", id.c_str(), res.j, res.l, res.gap, pass ? "pass" : "fail");
    }
    bb::write_distinction_csv(g.out("distinction.csv"), rows);
    std::cout << "distinction: " << rows.size() << " cases -> " << g.out("distinction.csv") << "\n";
    return finish(ok);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bessel bridge integration-by-parts toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", g.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
    app.add_option("--out", g.out_dir, "output directory for CSV files");
    auto* threads_opt =
        app.add_option("--threads", threads, "worker threads (default: BESSEL_IBPF_THREADS or 1)")->check(CLI::PositiveNumber);

    using Command = int (*)(const json&, const Globals&);
    Command command = nullptr;
    auto add = [&](const char* name, const char* help, Command fn) {
        app.add_subcommand(name, help)->callback([&command, fn] { command = fn; });
    };
    add("verify-mu", "renormalized pairing identities and Gamma integrals", cmd_verify_mu);
    add("verify-ibpf", "integration-by-parts routes over a (delta, Phi, h) grid", cmd_verify_ibpf);
    add("sample", "bridge sampling: KS tables, expectations, path dump", cmd_sample);
    add("spde", "regularized delta = 1 dynamics and heat-equation control", cmd_spde);
    add("mollified", "mollified-limit convergence table", cmd_mollified);
    add("distinction", "J, L and their gap for configured k", cmd_distinction);

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed;
    if (*threads_opt) g.threads = threads;
    try {
        std::filesystem::create_directories(g.out_dir);
        return command(cfg::load(g.config_path), g);
    } catch (const cfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
