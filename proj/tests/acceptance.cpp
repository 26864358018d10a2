// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
// below. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "besselbridge/ibpf.hpp"
#include "besselbridge/laws.hpp"
#include "besselbridge/ode.hpp"
#include "besselbridge/renorm.hpp"
#include "besselbridge/sampler.hpp"
#include "besselbridge/spde.hpp"
#include "besselbridge/specfun.hpp"

using namespace besselbridge;
namespace fs = std::filesystem;
namespace tf = besselbridge::test_functions;

namespace tol {
constexpr double pairing = 1e-8;
constexpr double renorm_gamma_rel = 1e-8;
constexpr double ode = 1e-10;
constexpr double skeleton = 1e-6;
constexpr double routes = 1e-6;
constexpr double continuity = 1e-3;
constexpr double mc_sigmas = 3.0;
constexpr double mollified_order = 1.8;
constexpr double mollified_rel = 1e-2;
constexpr double spde_ks = 0.05;
constexpr double gap_nonzero = 1e-3;
constexpr double gap_zero = 1e-10;
constexpr double gap_quadrature = 1e-8;
constexpr double residual_half = 1e-10;
}  // namespace tol

namespace {

constexpr std::uint64_t seed = 1;
constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [violated: " << what << "]";
        }
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

int failures = 0;

void run(int id, const std::string& name, double limit_seconds, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < limit_seconds, "runtime " + fmt(secs) + " s >= " + fmt(limit_seconds) + " s");
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s:%s (%.1f s, limit %.0f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(),
                secs, limit_seconds);
    std::fflush(stdout);
}

std::vector<ScalarTestFunction> builtin_functions() {
    return {tf::exponential(1.5), tf::gaussian(2.0), tf::poly_gaussian({1.0, -1.0, 0.5}, 1.0),
            tf::poly_gaussian({0.0, 0.0, 1.0}, 0.5)};
}

std::vector<FiniteMeasure> mixed_measures() {
    return {FiniteMeasure::lebesgue(0.5),
            FiniteMeasure::atom(0.5, 1.0),
            FiniteMeasure::window(0.2, 0.6, 3.0) + FiniteMeasure::atom(0.8, 0.5),
            FiniteMeasure::atom(0.1, 2.0) + FiniteMeasure::atom(0.35, 0.3) + FiniteMeasure::lebesgue(1.2),
            FiniteMeasure({{0.5, 1.5}}, {0.0, 0.3, 0.5, 0.9, 1.0}, {0.0, 4.0, 0.5, 2.0}),
            FiniteMeasure::window(0.05, 0.95, 10.0)};
}

std::vector<ExpFunctional> ibpf_functionals() {
    return {ExpFunctional::one(), ExpFunctional::exp_of(FiniteMeasure::lebesgue(0.5), "half_lebesgue"),
            ExpFunctional::exp_of(FiniteMeasure::atom(0.5, 1.0), "atom_half"),
            ExpFunctional({{0.7, FiniteMeasure::lebesgue(0.5)},
                           {0.3, FiniteMeasure::atom(0.3, 0.8) + FiniteMeasure::window(0.5, 0.9, 1.0)}},
                          "two_term")};
}

const TestFunctionH poly_h = TestFunctionH::poly({1.0});
const TestFunctionH bump_h = TestFunctionH::bump(0.2, 0.8);

// ---- Monte Carlo runs shared by the reproducibility criterion -------------

struct ClassicalRun {
    std::vector<IbpfReport> reports;
};

ClassicalRun run_classical(const fs::path& dir, int threads) {
    ClassicalRun out;
    VerifyOptions opt;
    opt.tolerance = tol::routes;
    opt.mc.n = 100000;
    opt.mc.grid_points = 64;
    opt.mc.seed = seed;
    opt.mc.threads = threads;
    for (double d : {4.0, 5.0})
        for (const auto& phi : {ExpFunctional::one(), ExpFunctional::exp_of(FiniteMeasure::atom(0.5, 1.0), "atom_half")}) {
            IbpfReport rep;
            rep.delta = d;
            rep.phi_id = phi.name();
            rep.h_id = bump_h.describe();
            rep.tolerance = tol::routes;
            rep.lhs_closed = lhs_closed(d, phi, bump_h);
            rep.rhs_classical = rhs_classical(d, phi, bump_h, opt.mc);
            out.reports.push_back(rep);
        }
    write_ibpf_csv((dir / "classical.csv").string(), out.reports);
    return out;
}

struct SamplerRun {
    std::vector<KsResult> ks;
    struct Expectation {
        double delta;
        std::string id;
        McEstimate est;
        double exact;
        double bias;
    };
    std::vector<Expectation> expectations;
};

SamplerRun run_sampler(const fs::path& dir, int threads) {
    SamplerRun out;
    const std::vector<double> rs{0.25, 0.5, 0.75};
    const std::size_t n = 100000;
    for (double d : {0.5, 1.0, 2.0, 3.5})
        for (const auto& k : marginal_ks(d, rs, n, seed, threads)) out.ks.push_back(k);
    for (const auto& [a, b] : {std::pair{1.0, 1.0}, std::pair{1.3, 2.2}})
        for (const auto& k : additivity_check(a, b, rs, n, seed, threads)) out.ks.push_back(k);
    write_ks_csv((dir / "ks.csv").string(), out.ks);

    const auto grid = uniform_grid(64);
    const std::vector<std::pair<double, ExpFunctional>> cases{
        {1.0, ExpFunctional::exp_of(FiniteMeasure::atom(0.5, 1.0), "atom_half")},
        {2.0, ExpFunctional::exp_of(FiniteMeasure::lebesgue(0.5), "half_lebesgue")},
        {3.0, ExpFunctional({{0.7, FiniteMeasure::lebesgue(0.5)}, {0.3, FiniteMeasure::atom(0.3, 0.8)}}, "two_term")}};
    csv::Writer w((dir / "expectations.csv").string(), {"delta", "phi_id", "estimate", "se", "exact", "grid_bias"});
    for (const auto& [d, phi] : cases) {
        const auto est = mc_expectation(d, phi, grid, n, seed, threads);
        out.expectations.push_back({d, phi.name(), est, bridge_expectation(d, phi), grid_bias(d, phi, grid)});
        const auto& e = out.expectations.back();
        w.row({d, phi.name(), est.mean, est.se, e.exact, e.bias});
    }
    return out;
}

SpdeConfig reference_spde() {
    SpdeConfig c;
    c.m = 127;
    c.eps = 0.05;
    c.dt = 1e-5;
    c.t_end = 2.0;
    c.replicas = 32;
    c.burn_in = 1.0;
    c.probe_stride = 100;
    c.snapshot_stride = 20000;
    return c;
}

std::vector<DiagnosticsRow> run_spde(const fs::path& dir, int threads) {
    std::vector<DiagnosticsRow> rows;
    for (bool drift : {true, false}) {
        auto c = reference_spde();
        c.drift = drift;
        const auto runs = run_replicas(c, seed, threads);
        const char* name = drift ? "bessel1" : "she";
        write_trajectory_csv((dir / (std::string("trajectory_") + name + ".csv")).string(), runs);
        rows.push_back({name, c.probe_index() * c.dx(), stationarity_report(runs, c.burn_in, drift), tol::spde_ks});
    }
    write_diagnostics_csv((dir / "diagnostics.csv").string(), rows);
    return rows;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str() && !sa.str().empty();
}

}  // namespace

int main() {
    const fs::path first = fs::path("acceptance_out") / "run1";
    const fs::path second = fs::path("acceptance_out") / "run2";
    fs::create_directories(first);
    fs::create_directories(second);

    run(1, "renormalized pairings (Laplace identity, toy integration by parts)", 10, [](Outcome& o) {
        double worst_laplace = 0.0, worst_ibp = 0.0;
        for (int i = -5; i <= 5; ++i) {
            const double a = 0.5 * i;
            if (a <= 0.0 && a == std::floor(a)) continue;  // poles of 1/Gamma excluded from the grid
            for (double lam : {0.5, 1.0, 2.0})
                worst_laplace = std::max(worst_laplace, std::abs(pair_mu(a, tf::exponential(lam)) - std::pow(lam, -a)));
            for (const auto& phi : builtin_functions())
                worst_ibp = std::max(worst_ibp, std::abs(pair_mu(a, phi.derivative_instance()) + pair_mu(a - 1.0, phi)));
        }
        o.detail << " worst Laplace residual " << fmt(worst_laplace) << ", worst IbP residual " << fmt(worst_ibp);
        o.require(worst_laplace <= tol::pairing, "Laplace residual <= 1e-8");
        o.require(worst_ibp <= tol::pairing, "IbP residual <= 1e-8");
    });

    run(2, "renormalized Gamma integrals", 5, [](Outcome& o) {
        double worst = 0.0;
        for (double x : {-1.5, -0.5, 0.25, 1.5})
            for (double c : {0.5, 1.0, 4.0}) {
                const double ref = std::tgamma(x) * std::pow(c, -x);
                worst = std::max(worst, std::abs(renorm_gamma_integral(x, c) - ref) / std::abs(ref));
            }
        o.detail << " worst relative error " << fmt(worst);
        o.require(worst <= tol::renorm_gamma_rel, "relative error <= 1e-8");
    });

    run(3, "exact measure-coefficient ODE solutions", 5, [](Outcome& o) {
        double analytic = 0.0;
        const auto zero = solve(FiniteMeasure::zero());
        const auto half = solve(FiniteMeasure::lebesgue(0.5));
        const auto atom = solve(FiniteMeasure::atom(0.5, 1.0));
        for (int i = 0; i <= 64; ++i) {
            const double r = i / 64.0;
            analytic = std::max({analytic, std::abs(zero.psi(r) - r), std::abs(zero.psi_hat(r) - (1 - r)),
                                 std::abs(half.psi(r) - std::sinh(r)), std::abs(half.psi_hat(r) - std::sinh(1 - r)),
                                 std::abs(atom.psi(r) - (r <= 0.5 ? r : 0.5 + 2 * (r - 0.5)))});
        }
        analytic = std::max({analytic, std::abs(zero.psi_1() - 1.0), std::abs(half.psi_1() - std::sinh(1.0)),
                             std::abs(atom.psi_1() - 1.5)});
        double wronskian = 0.0, phi_route = 0.0;
        for (const auto& m : mixed_measures()) {
            const auto s = solve(m);
            const auto p = solve_phi(m);
            for (int i = 1; i < 1024; ++i) {
                const double r = i / 1024.0;
                for (Side side : {Side::left, Side::right})
                    wronskian = std::max(wronskian, std::abs(s.psi_prime(r, side) * s.psi_hat(r) -
                                                             s.psi(r) * s.psi_hat_prime(r, side) - s.psi_1()));
                phi_route = std::max(phi_route, std::abs(s.psi_hat(r) - (s.psi_1() * p.phi(r) - s.psi(r) * p.phi(1.0))));
            }
        }
        o.detail << " analytic " << fmt(analytic) << ", Wronskian " << fmt(wronskian) << ", phi route " << fmt(phi_route);
        o.require(analytic <= tol::ode, "analytic solutions to 1e-10");
        o.require(wronskian <= tol::ode, "Wronskian constancy to 1e-10");
        o.require(phi_route <= tol::ode, "phi-route identity to 1e-10");
    });

    run(4, "skeleton identity", 10, [](Outcome& o) {
        const std::vector<std::pair<FiniteMeasure, TestFunctionH>> pairs{
            {FiniteMeasure::zero(), poly_h},
            {FiniteMeasure::lebesgue(0.5), bump_h},
            {FiniteMeasure::atom(0.5, 1.0), poly_h},
            {FiniteMeasure::window(0.2, 0.6, 3.0) + FiniteMeasure::atom(0.8, 0.5), bump_h},
            {FiniteMeasure::atom(0.35, 0.3) + FiniteMeasure::lebesgue(1.2), TestFunctionH::poly({1.0, -0.5})},
            {FiniteMeasure({{0.5, 1.5}}, {0.0, 0.3, 0.5, 0.9, 1.0}, {0.0, 4.0, 0.5, 2.0}), TestFunctionH::bump(0.1, 0.7, 2.0)}};
        double worst = 0.0;
        for (const auto& [m, h] : pairs) worst = std::max(worst, skeleton_check(m, h));
        o.detail << " worst residual " << fmt(worst) << " over " << pairs.size() << " pairs";
        o.require(worst <= tol::skeleton, "residual <= 1e-6");
    });

    run(5, "integration-by-parts routes and critical continuity", 120, [](Outcome& o) {
        double worst_quad = 0.0, worst_unified = 0.0, worst_special = 0.0, worst_cont = 0.0;
        int cases = 0;
        for (double d : {0.5, 0.9, 1.1, 2.0, 2.5, 2.9, 3.1, 3.5, 5.0})
            for (const auto& phi : ibpf_functionals())
                for (const auto& h : {poly_h, bump_h}) {
                    const double lhs = lhs_closed(d, phi, h);
                    worst_quad = std::max(worst_quad, std::abs(lhs - rhs_quadrature(d, phi, h)));
                    if (d != 2.0) worst_unified = std::max(worst_unified, std::abs(lhs - rhs_unified(d, phi, h)));
                    ++cases;
                }
        for (double crit : {1.0, 3.0})
            for (const auto& phi : ibpf_functionals())
                for (const auto& h : {poly_h, bump_h}) {
                    const double special = rhs_special(crit, phi, h);
                    worst_special = std::max(worst_special, std::abs(special - lhs_closed(crit, phi, h)));
                    for (double off : {-0.001, 0.001})
                        worst_cont = std::max(worst_cont, std::abs(rhs_quadrature(crit + off, phi, h) - special));
                }
        o.detail << " " << cases << " cases; quadrature " << fmt(worst_quad) << ", unified " << fmt(worst_unified)
                 << ", special " << fmt(worst_special) << ", continuity at +-0.001 " << fmt(worst_cont);
        o.require(worst_quad <= tol::routes, "|lhs - rhs_quadrature| <= 1e-6");
        o.require(worst_unified <= tol::routes, "|lhs - rhs_unified| <= 1e-6");
        o.require(worst_special <= tol::routes, "|rhs_special - lhs| <= 1e-6");
        o.require(worst_cont <= tol::continuity, "critical continuity <= 1e-3");
    });

    run(6, "classical regime Monte Carlo (delta 4, 5)", 120, [&](Outcome& o) {
        const auto r = run_classical(first, default_threads());
        double worst = 0.0;
        for (const auto& rep : r.reports) {
            const double z = (rep.rhs_classical->mean - rep.lhs_closed) / rep.rhs_classical->se;
            worst = std::max(worst, std::abs(z));
            o.detail << " d=" << rep.delta << "/" << rep.phi_id << ": z=" << fmt(z) << ";";
        }
        o.require(worst <= tol::mc_sigmas, "within 3 SE of lhs_closed");
    });

    run(7, "exact bridge sampler", 180, [&](Outcome& o) {
        const auto r = run_sampler(first, default_threads());
        double worst_ratio = 0.0;
        for (const auto& k : r.ks) worst_ratio = std::max(worst_ratio, k.statistic / k.critical);
        o.detail << " " << r.ks.size() << " KS tests, worst stat/critical " << fmt(worst_ratio) << ";";
        o.require(worst_ratio <= 1.0, "KS below the 1% critical value");
        for (const auto& e : r.expectations) {
            const double err = std::abs(e.est.mean - e.exact);
            const double allowed = tol::mc_sigmas * e.est.se + e.bias;
            o.detail << " E[" << e.id << "] d=" << e.delta << ": " << fmt(e.est.mean) << " vs " << fmt(e.exact)
                     << " (|err| " << fmt(err) << " <= " << fmt(allowed) << "?);";
            o.require(err <= allowed, "expectation within 3 SE + grid bias");
        }
        o.require(std::abs(r.expectations[0].exact - 0.8164966) < 5e-8, "atom case equals 1.5^{-1/2}");
    });

    run(8, "mollified-limit identity", 30, [&](Outcome& o) {
        double target = 0.0;
        const auto rows = mollified_limit_check(ExpFunctional::one(), poly_h, {0.2, 0.1, 0.05}, &target);
        csv::Writer w((first / "mollified.csv").string(), {"eps", "value", "target", "error", "order"});
        for (const auto& r : rows) w.row({r.eps, r.value, target, r.error, r.order});
        o.detail << " target " << fmt(target);
        for (const auto& r : rows) o.detail << "; eps " << r.eps << " err " << fmt(r.error) << " order " << fmt(r.order);
        for (std::size_t i = 1; i < rows.size(); ++i) o.require(rows[i].order >= tol::mollified_order, "order >= 1.8");
        o.require(std::abs(rows.back().error) <= tol::mollified_rel * std::abs(target), "final error <= 1e-2 |target|");
        o.require(std::abs(target - (-(pi / 8.0) / (std::pow(2.0, 1.5) * std::sqrt(pi)))) < 1e-9, "target is the closed form");
    });

    std::vector<DiagnosticsRow> spde_rows;
    run(9, "delta = 1 SPDE stationarity and heat-equation control", 600, [&](Outcome& o) {
        spde_rows = run_spde(first, default_threads());
        for (const auto& r : spde_rows) {
            o.detail << " " << r.run << ": KS " << fmt(r.report.ks_distance) << " (samples " << r.report.samples
                     << ", autocorrelation " << fmt(r.report.autocorrelation_time) << ", negativity "
                     << fmt(r.report.negativity_fraction) << ");";
            o.require(r.pass(), r.run + " KS <= 0.05");
        }
    });

    run(10, "distinction of J and L", 5, [](Outcome& o) {
        const auto sine = distinction_gap(KFunction::sine({1.0}), bump_h, tol::gap_quadrature);
        const auto zero = distinction_gap(KFunction::sine({0.0}), bump_h, tol::gap_quadrature);
        const double res = distinction_residual(KFunction::sine({1.0}), 0.5);
        o.detail << " sine gap " << fmt(sine.gap) << ", zero gap " << fmt(zero.gap) << ", residual(1/2) + 4/pi^4 = "
                 << fmt(res + 4.0 / std::pow(pi, 4));
        o.require(std::abs(sine.gap) >= tol::gap_nonzero, "|gap| >= 1e-3 for k = sin(pi r)");
        o.require(std::abs(zero.gap) <= tol::gap_zero, "|gap| <= 1e-10 for k = 0");
        o.require(std::abs(res + 4.0 / std::pow(pi, 4)) <= tol::residual_half, "residual at 1/2 equals -4/pi^4");
    });

    run(11, "reproducibility of Monte Carlo CSVs (rerun with 2 threads)", 1200, [&](Outcome& o) {
        run_classical(second, 2);
        run_sampler(second, 2);
        run_spde(second, 2);
        for (const char* f : {"classical.csv", "ks.csv", "expectations.csv", "trajectory_bessel1.csv", "trajectory_she.csv",
                              "diagnostics.csv"}) {
            const bool same = same_bytes(first / f, second / f);
            o.detail << " " << f << (same ? " identical;" : " DIFFERS;");
            o.require(same, std::string(f) + " byte-identical");
        }
    });

    std::printf("%s: %d criteria failed\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED", failures);
    return failures ? 1 : 0;
}
