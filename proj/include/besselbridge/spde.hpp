#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "csv.hpp"
#include "ibpf.hpp"
#include "laws.hpp"
#include "measures.hpp"
#include "quadrature.hpp"
#include "sampler.hpp"

namespace besselbridge {

/// rho_eps(y) = rho(y/eps)/eps with rho = (315/256)(1-y^2)^4 on [-1, 1].
struct Mollifier {
    double eps;

    explicit Mollifier(double e) : eps(e) {
        if (!(e > 0.0)) throw std::invalid_argument("Mollifier: eps must be positive");
    }

    static constexpr double norm = 315.0 / 256.0;

    static double base(double y) {
        if (std::abs(y) >= 1.0) return 0.0;
        const double u = 1.0 - y * y;
        return norm * u * u * u * u;
    }
    static double base2(double y) {
        if (std::abs(y) >= 1.0) return 0.0;
        const double u = 1.0 - y * y;
        return norm * u * u * (56.0 * y * y - 8.0);
    }
    static double base3(double y) {
        if (std::abs(y) >= 1.0) return 0.0;
        return norm * (1.0 - y * y) * y * (144.0 - 336.0 * y * y);
    }

    double operator()(double y) const { return base(y / eps) / eps; }
    double second(double y) const { return base2(y / eps) / (eps * eps * eps); }
    double third(double y) const { return base3(y / eps) / (eps * eps * eps * eps); }
};

/// Stationary and time-t covariances of the stochastic heat equation
/// du = 1/2 u'' dt + xi on [0,1] with Dirichlet boundary, by eigen-expansion.
class CovarianceKernel {
public:
    explicit CovarianceKernel(int modes = 2000) : modes_(modes) {}

    static double q_inf(double x, double y) { return std::min(x, y) - x * y; }

    /// q^t = sum_k exp(-lambda_k t)/lambda_k e_k(x) e_k(y)
    double q_tail(double t, double x, double y) const {
        double s = 0.0;
        for (int k = 1; k <= modes_; ++k) {
            const double lam = k * k * std::numbers::pi * std::numbers::pi;
            const double w = std::exp(-lam * t);
            if (w == 0.0) break;
            s += w / lam * 2.0 * std::sin(k * std::numbers::pi * x) * std::sin(k * std::numbers::pi * y);
        }
        return s;
    }

    double q(double t, double x, double y) const { return q_inf(x, y) - q_tail(t, x, y); }
    int modes() const noexcept { return modes_; }

private:
    int modes_;
};

struct SpdeConfig {
    int m = 127;                  ///< interior grid points
    double dt = 1e-5;
    double t_end = 2.0;
    int replicas = 32;
    double eps = 0.05;
    bool drift = true;            ///< false: plain stochastic heat equation
    int probe_stride = 100;       ///< steps between probe samples
    int snapshot_stride = 20000;  ///< steps between full-field snapshots
    double burn_in = 1.0;
    double blow_up = 50.0;
    double noise = 1.0;           ///< noise amplitude multiplier; 0 gives the deterministic heat flow

    double dx() const { return 1.0 / (m + 1); }
    long steps() const { return std::lround(t_end / dt); }
    int probe_index() const { return (m + 1) / 2; }  ///< grid index (1-based) nearest x = 1/2
};

struct SpdeState {
    std::vector<double> u;  ///< interior values, boundary implicitly 0
    double t = 0.0;
    double dx = 0.0;
    double dt = 0.0;
};

class SpdeBlowUp : public std::runtime_error {
public:
    explicit SpdeBlowUp(double t) : std::runtime_error("spde: |u| exceeded blow-up threshold at t = " + std::to_string(t)) {}
};

struct Trajectory {
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> snapshots;  ///< interior fields
    std::vector<double> probe_times;
    std::vector<double> probe;                   ///< u(t, x_probe)
    double negativity_fraction = 0.0;
    double dx = 0.0;
};

namespace detail {

// Semi-implicit Euler with prefactored (I - dt/2 L), L the Dirichlet second difference.
class HeatStepper {
public:
    HeatStepper(int m, double dt, double noise_scale = 1.0) : m_(m), dt_(dt), dx_(1.0 / (m + 1)), c_(m), inv_(m) {
        const double diag = 1.0 + dt / (dx_ * dx_);
        off_ = -dt / (2.0 * dx_ * dx_);
        // Thomas forward elimination coefficients
        double denom = diag;
        inv_[0] = 1.0 / denom;
        c_[0] = off_ * inv_[0];
        for (int i = 1; i < m; ++i) {
            denom = diag - off_ * c_[i - 1];
            inv_[i] = 1.0 / denom;
            c_[i] = off_ * inv_[i];
        }
        noise_ = noise_scale * std::sqrt(dt / dx_);
    }

    template <class Drift>
    void step(std::vector<double>& u, RngStream& rng, Drift&& drift, std::vector<double>& rhs) const {
        for (int i = 0; i < m_; ++i) rhs[i] = u[i] + dt_ * drift(u[i]) + (noise_ != 0.0 ? noise_ * rng.normal() : 0.0);
        // forward sweep, then back substitution
        rhs[0] *= inv_[0];
        for (int i = 1; i < m_; ++i) rhs[i] = (rhs[i] - off_ * rhs[i - 1]) * inv_[i];
        u[m_ - 1] = rhs[m_ - 1];
        for (int i = m_ - 2; i >= 0; --i) u[i] = rhs[i] - c_[i] * u[i + 1];
    }

private:
    int m_;
    double dt_;
    double dx_;
    double off_ = 0.0;
    double noise_ = 0.0;
    std::vector<double> c_;
    std::vector<double> inv_;
};

inline void check_stability(const SpdeConfig& cfg) {
    if (cfg.m < 3) throw std::invalid_argument("spde: need at least 3 grid points");
    if (!(cfg.dt > 0.0) || cfg.dt > 0.5 * cfg.dx() * cfg.dx())
        throw std::invalid_argument("spde: dt violates the stability bound dt <= dx^2/2");
    if (!(cfg.t_end > 0.0)) throw std::invalid_argument("spde: T must be positive");
}

template <class Drift>
Trajectory run(std::vector<double> u, const SpdeConfig& cfg, RngStream& rng, Drift&& drift) {
    check_stability(cfg);
    if (static_cast<int>(u.size()) != cfg.m) throw std::invalid_argument("spde: initial field has wrong size");
    const HeatStepper stepper(cfg.m, cfg.dt, cfg.noise);
    std::vector<double> rhs(cfg.m);
    Trajectory tr;
    tr.dx = cfg.dx();
    const long steps = cfg.steps();
    const int probe = cfg.probe_index() - 1;
    long negative = 0;
    auto record = [&](long n) {
        const double t = n * cfg.dt;
        if (n % cfg.probe_stride == 0) {
            tr.probe_times.push_back(t);
            tr.probe.push_back(u[probe]);
        }
        if (cfg.snapshot_stride > 0 && n % cfg.snapshot_stride == 0) {
            tr.snapshot_times.push_back(t);
            tr.snapshots.push_back(u);
        }
    };
    record(0);
    for (long n = 1; n <= steps; ++n) {
        stepper.step(u, rng, drift, rhs);
        for (double v : u) {
            if (v < 0.0) ++negative;
            if (!(std::abs(v) <= cfg.blow_up)) throw SpdeBlowUp(n * cfg.dt);
        }
        record(n);
    }
    tr.negativity_fraction = static_cast<double>(negative) / (static_cast<double>(steps) * cfg.m);
    return tr;
}

inline std::vector<double> interior_grid(int m) {
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) g[i] = (i + 1.0) / (m + 1);
    return g;
}

}  // namespace detail

/// Stochastic heat equation from z0 (interior values).
inline Trajectory simulate_she(std::vector<double> z0, const SpdeConfig& cfg, RngStream& rng) {
    return detail::run(std::move(z0), cfg, rng, [](double) { return 0.0; });
}

/// Regularized delta = 1 dynamics: heat equation plus drift -1/4 rho_eps''(u).
/// No reflection is imposed.
inline Trajectory simulate_bessel1(std::vector<double> u0, const SpdeConfig& cfg, RngStream& rng) {
    for (double v : u0)
        if (v < 0.0) throw std::invalid_argument("simulate_bessel1: initial field must be nonnegative");
    const Mollifier rho(cfg.eps);
    return detail::run(std::move(u0), cfg, rng, [&](double v) { return -0.25 * rho.second(v); });
}

/// One replica: initial field drawn from the stationary law (reflected
/// Brownian bridge with drift, signed Brownian bridge without), then evolved.
inline Trajectory run_replica(const SpdeConfig& cfg, std::uint64_t seed, std::uint64_t replica) {
    RngStream rng(seed, replica);
    const auto grid = detail::interior_grid(cfg.m);
    if (cfg.drift) {
        auto p = sample_bessel_bridge(1.0, grid, rng);
        return simulate_bessel1(std::vector<double>(p.values.begin() + 1, p.values.end() - 1), cfg, rng);
    }
    auto p = sample_brownian_bridge(grid, rng);
    return simulate_she(std::vector<double>(p.values.begin() + 1, p.values.end() - 1), cfg, rng);
}

inline std::vector<Trajectory> run_replicas(const SpdeConfig& cfg, std::uint64_t seed, int threads = default_threads()) {
    detail::check_stability(cfg);
    if (cfg.replicas <= 0) throw std::invalid_argument("spde: replicas must be positive");
    return parallel_map<Trajectory>(
        static_cast<std::size_t>(cfg.replicas), [&](std::size_t i) { return run_replica(cfg, seed, i); }, threads);
}

struct StationarityReport {
    std::size_t samples = 0;
    double ks_distance = 0.0;
    double autocorrelation_time = 0.0;  ///< in units of probe samples
    double negativity_fraction = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Pools the probe series after burn-in across replicas and compares them to
/// the stationary marginal at x = 1/2: |N(0, 1/4)| with drift, N(0, 1/4) without.
inline StationarityReport stationarity_report(const std::vector<Trajectory>& runs, double burn_in, bool folded) {
    if (runs.empty()) throw std::invalid_argument("stationarity_report: empty trajectory set");
    std::vector<double> pooled;
    double neg = 0.0;
    double tau_sum = 0.0;
    for (const auto& tr : runs) {
        std::vector<double> x;
        for (std::size_t i = 0; i < tr.probe.size(); ++i)
            if (tr.probe_times[i] >= burn_in) x.push_back(tr.probe[i]);
        if (x.empty()) continue;
        pooled.insert(pooled.end(), x.begin(), x.end());
        neg += tr.negativity_fraction;
        // integrated autocorrelation time, summed until the first negative lag
        const std::size_t n = x.size();
        double mu = pairwise_sum(x) / n;
        double c0 = 0.0;
        for (double v : x) c0 += (v - mu) * (v - mu);
        double tau = 1.0;
        if (c0 > 0.0)
            for (std::size_t lag = 1; lag < n / 2; ++lag) {
                double c = 0.0;
                for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mu) * (x[i + lag] - mu);
                const double rho = c / c0;
                if (rho <= 0.0) break;
                tau += 2.0 * rho;
            }
        tau_sum += tau;
    }
    if (pooled.empty()) throw std::invalid_argument("stationarity_report: no samples after burn-in");
    StationarityReport rep;
    rep.samples = pooled.size();
    const auto s = summarize(pooled);
    rep.mean = s.mean;
    double v = 0.0;
    for (double x : pooled) v += (x - s.mean) * (x - s.mean);
    rep.variance = v / (pooled.size() - 1);
    const double sigma = 0.5;
    if (folded)
        rep.ks_distance = ks_statistic(pooled, [&](double x) { return folded_normal_cdf(sigma, x); });
    else
        rep.ks_distance = ks_statistic(pooled, [&](double x) { return normal_cdf(sigma, x); });
    rep.autocorrelation_time = tau_sum / runs.size();
    rep.negativity_fraction = neg / runs.size();
    return rep;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<Trajectory>& runs) {
    csv::Writer w(path, {"replica", "t", "x", "u"});
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& tr = runs[k];
        for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
            const auto& u = tr.snapshots[s];
            for (std::size_t i = 0; i < u.size(); ++i) w.row({k, tr.snapshot_times[s], (i + 1.0) * tr.dx, u[i]});
        }
    }
}

/// One diagnostics row per run: (run, x, samples, ks_distance, tolerance,
/// autocorrelation_time, negativity_fraction, pass).
struct DiagnosticsRow {
    std::string run;
    double x;
    StationarityReport report;
    double tolerance;
    bool pass() const { return report.ks_distance <= tolerance; }
};

inline void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
    csv::Writer w(path, {"run", "x", "samples", "ks_distance", "tolerance", "autocorrelation_time",
                         "negativity_fraction", "pass"});
    for (const auto& r : rows)
        w.row({r.run, r.x, r.report.samples, r.report.ks_distance, r.tolerance, r.report.autocorrelation_time,
               r.report.negativity_fraction, r.pass() ? "1" : "0"});
}

// ---- mollified-limit identity ---------------------------------------------

struct MollifiedRow {
    double eps;
    double value;
    double error;  ///< value - target
    double order;  ///< log2 of the error ratio to the previous eps (NaN for the first)
};

/// 1/2 int int h_r rho_eps''(a) N(0, r(1-r))(a) E^1[Phi | X_r = |a|] da dr
/// for each eps, against the target rhs_special(1, Phi, h).
inline std::vector<MollifiedRow> mollified_limit_check(const ExpFunctional& phi, const TestFunctionH& h,
                                                       const std::vector<double>& eps_list, double* target_out = nullptr) {
    const double target = rhs_special(1.0, phi, h);
    if (target_out) *target_out = target;
    std::vector<MollifiedRow> rows;
    const quadrature::Options inner{1e-14, 1e-12, 4000};
    for (double eps : eps_list) {
        const Mollifier rho(eps);
        const double value = detail::integrate_against_h(h, phi.nodes(), [&](double r) {
            const double v = r * (1.0 - r);
            const double sd = std::sqrt(v);
            auto f = [&](double a) {
                return rho.second(a) * std::exp(-a * a / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v) *
                       conditional_laplace(1.0, phi, r, a);
            };
            // integrand even in a: 1/2 int_{-eps}^{eps} = int_0^eps
            const double hi = std::min(eps, 40.0 * sd);
            std::vector<double> cuts{eps / std::sqrt(7.0)};
            for (double c : {sd, 4.0 * sd, 10.0 * sd}) cuts.push_back(c);
            return quadrature::integrate_split(f, 0.0, hi, cuts, inner, "mollified inner").value;
        });
        MollifiedRow row{eps, value, value - target, std::numeric_limits<double>::quiet_NaN()};
        if (!rows.empty()) {
            const auto& prev = rows.back();
            row.order = std::log(std::abs(prev.error) / std::abs(row.error)) / std::log(prev.eps / eps);
        }
        rows.push_back(row);
    }
    return rows;
}

inline void write_mollified_csv(const std::string& path, const std::vector<MollifiedRow>& rows, double target) {
    csv::Writer w(path, {"eps", "value", "target", "error", "order"});
    for (const auto& r : rows) w.row({r.eps, r.value, target, r.error, r.order});
}

// ---- distinction quantities -----------------------------------------------

/// k on [0,1] as a finite sine or polynomial series, with K = Qk and K'
/// in closed form (Q the Brownian-bridge covariance operator).
class KFunction {
public:
    enum class Family { sine, poly };

    /// k = sum_j a_j sin(j pi r), j = 1, 2, ...
    static KFunction sine(std::vector<double> a) { return KFunction(Family::sine, std::move(a)); }
    /// k = sum_j b_j r^j, j = 0, 1, ...
    static KFunction poly(std::vector<double> b) { return KFunction(Family::poly, std::move(b)); }

    static KFunction from_params(const std::string& family, const std::vector<double>& coeffs) {
        for (double c : coeffs)
            if (!std::isfinite(c)) throw std::invalid_argument("k: coefficients must be finite");
        if (family == "sine") return sine(coeffs);
        if (family == "poly") return poly(coeffs);
        throw std::invalid_argument("k: unknown family '" + family + "' (expected sine or poly)");
    }

    double k(double r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i)
            s += c_[i] * (family_ == Family::sine ? std::sin((i + 1.0) * std::numbers::pi * r) : std::pow(r, i));
        return s;
    }

    double big_k(double r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (family_ == Family::sine) {
                const double w = (i + 1.0) * std::numbers::pi;
                s += c_[i] * std::sin(w * r) / (w * w);
            } else {
                const double d = (i + 1.0) * (i + 2.0);
                s += c_[i] * (r - std::pow(r, i + 2.0)) / d;
            }
        }
        return s;
    }

    double big_k_prime(double r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (family_ == Family::sine) {
                const double w = (i + 1.0) * std::numbers::pi;
                s += c_[i] * std::cos(w * r) / w;
            } else {
                s += c_[i] * (1.0 / ((i + 1.0) * (i + 2.0)) - std::pow(r, i + 1.0) / (i + 1.0));
            }
        }
        return s;
    }

    bool is_zero() const {
        for (double c : c_)
            if (c != 0.0) return false;
        return true;
    }

private:
    KFunction(Family f, std::vector<double> c) : family_(f), c_(std::move(c)) {}
    Family family_;
    std::vector<double> c_;
};

inline double distinction_lambda(double x, double y, double r) {
    const double v = r * (1.0 - r);
    const double b = (1.0 - 2.0 * r) / v;
    return x * x + x * y * b + y * y * b * b / 4.0 - 1.0 / (4.0 * v);
}

/// (K')^2 - (1-2r)/(r(1-r)) K K' - K^2/(r(1-r)); zero for all r iff J = L for every h.
inline double distinction_residual(const KFunction& k, double r) {
    const double v = r * (1.0 - r);
    const double kk = k.big_k(r), kp = k.big_k_prime(r);
    return kp * kp - (1.0 - 2.0 * r) / v * kk * kp - kk * kk / v;
}

struct DistinctionResult {
    double j;
    double l;
    double gap;
};

inline DistinctionResult distinction_gap(const KFunction& k, const TestFunctionH& h, double tol = 1e-8) {
    const quadrature::Options opt{tol * 1e-2, tol * 1e-2, 8000};
    const double qkk =
        k.is_zero() ? 0.0
                    : quadrature::integrate([&](double r) { return k.big_k(r) * k.k(r); }, 0.0, 1.0, opt, "<Qk,k>").value;
    const double pre = std::exp(0.5 * qkk);
    const auto [a, b] = h.support();
    auto j_integrand = [&](double r) {
        const double v = r * (1.0 - r);
        const double kk = k.big_k(r);
        return h.value(r) / std::sqrt(v) * std::exp(-kk * kk / (2.0 * v)) * distinction_lambda(k.big_k_prime(r), -kk, r);
    };
    auto l_integrand = [&](double r) {
        const double v = r * (1.0 - r);
        const double kk = k.big_k(r);
        return h.value(r) / std::sqrt(2.0 * std::numbers::pi * v) * ((kk * kk - v) / (v * v)) * std::exp(-kk * kk / (2.0 * v));
    };
    const double j = pre / std::sqrt(2.0 * std::numbers::pi) * integrate_r(j_integrand, a, b, {}, opt);
    const double l = 0.25 * pre * integrate_r(l_integrand, a, b, {}, opt);
    return {j, l, j - l};
}

struct DistinctionRow {
    std::string id;
    DistinctionResult result;
    double residual_at_half;
    bool pass;
};

inline void write_distinction_csv(const std::string& path, const std::vector<DistinctionRow>& rows) {
    csv::Writer w(path, {"case", "J", "L", "gap", "residual_at_half", "pass"});
    for (const auto& r : rows) w.row({r.id, r.result.j, r.result.l, r.result.gap, r.residual_at_half, r.pass ? "1" : "0"});
}

}  // namespace besselbridge
