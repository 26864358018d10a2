#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "csv.hpp"
#include "laws.hpp"
#include "measures.hpp"

namespace besselbridge {

/// Reproducible random stream keyed by (seed, stream id).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::mt19937_64& engine() noexcept { return engine_; }

    double normal() { return std::normal_distribution<double>{}(engine_); }
    double gamma(double shape, double rate) { return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_); }
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<long>(mean)(engine_);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

struct BridgePath {
    enum class Kind { squared, bessel };
    std::vector<double> grid;    ///< includes 0 and 1
    std::vector<double> values;  ///< 0 at both ends
    Kind kind = Kind::squared;
};

/// n equally spaced interior points j/(n+1).
inline std::vector<double> uniform_grid(int n) {
    std::vector<double> g;
    for (int j = 1; j <= n; ++j) g.push_back(static_cast<double>(j) / (n + 1));
    return g;
}

/// n interior points sin^2(pi j / (2(n+1))), clustered toward both ends where
/// the bridge behaves like sqrt(r).
inline std::vector<double> clustered_grid(int n) {
    std::vector<double> g;
    for (int j = 1; j <= n; ++j) {
        const double s = std::sin(std::numbers::pi * j / (2.0 * (n + 1)));
        g.push_back(s * s);
    }
    return g;
}

/// Interior grid merged with extra points (e.g. atom locations).
inline std::vector<double> merge_points(std::vector<double> grid, const std::vector<double>& extra) {
    grid.insert(grid.end(), extra.begin(), extra.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline std::vector<double> with_endpoints(const std::vector<double>& interior) {
    std::vector<double> g{0.0};
    g.insert(g.end(), interior.begin(), interior.end());
    g.push_back(1.0);
    return g;
}

namespace detail {

inline void check_interior_grid(const std::vector<double>& grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0)) throw std::invalid_argument("sampler: grid points must lie in (0,1)");
        if (i > 0 && !(grid[i - 1] < grid[i])) throw std::invalid_argument("sampler: grid must be strictly increasing");
    }
}

}  // namespace detail

/// Squared Bessel bridge from 0 to 0 sampled exactly on the grid.
///
/// Given X_s = x, the next value at t (tau = t - s) is Gamma(N + delta/2) with
/// rate (1-s)/(2 tau (1-t)), where N ~ Poisson(x (1-t) / (2 tau (1-s))).
inline BridgePath sample_besq_bridge(double delta, const std::vector<double>& grid, RngStream& rng) {
    if (!(delta > 0.0)) throw std::invalid_argument("sample_besq_bridge: delta must be positive");
    detail::check_interior_grid(grid);
    BridgePath p;
    p.grid = with_endpoints(grid);
    p.values.assign(p.grid.size(), 0.0);
    const double h = 0.5 * delta;
    for (std::size_t i = 1; i + 1 < p.grid.size(); ++i) {
        const double s = p.grid[i - 1];
        const double t = p.grid[i];
        const double tau = t - s;
        const double x = p.values[i - 1];
        const long n = x > 0.0 ? rng.poisson(x * (1.0 - t) / (2.0 * tau * (1.0 - s))) : 0;
        p.values[i] = rng.gamma(static_cast<double>(n) + h, (1.0 - s) / (2.0 * tau * (1.0 - t)));
    }
    return p;
}

/// Bessel bridge: pointwise square root of the squared bridge.
inline BridgePath sample_bessel_bridge(double delta, const std::vector<double>& grid, RngStream& rng) {
    auto p = sample_besq_bridge(delta, grid, rng);
    for (auto& v : p.values) v = std::sqrt(v);
    p.kind = BridgePath::Kind::bessel;
    return p;
}

/// Standard Brownian bridge on [0,1] (signed), sampled sequentially.
inline BridgePath sample_brownian_bridge(const std::vector<double>& grid, RngStream& rng) {
    detail::check_interior_grid(grid);
    BridgePath p;
    p.grid = with_endpoints(grid);
    p.values.assign(p.grid.size(), 0.0);
    for (std::size_t i = 1; i + 1 < p.grid.size(); ++i) {
        const double s = p.grid[i - 1];
        const double t = p.grid[i];
        const double mean = p.values[i - 1] * (1.0 - t) / (1.0 - s);
        const double var = (t - s) * (1.0 - t) / (1.0 - s);
        p.values[i] = mean + std::sqrt(var) * rng.normal();
    }
    p.kind = BridgePath::Kind::bessel;
    return p;
}

/// Pairwise (cascade) summation.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// Default worker count from BESSEL_IBPF_THREADS, else 1.
inline int default_threads() {
    if (const char* e = std::getenv("BESSEL_IBPF_THREADS")) {
        const int n = std::atoi(e);
        if (n > 0) return n;
    }
    return 1;
}

/// Evaluates f(i) for i in [0, n) across `threads` workers. Output order is
/// by index, so the result does not depend on the thread count.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f, int threads) {
    std::vector<T> out(n);
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) out[i] = f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline McEstimate summarize(const std::vector<double>& x) {
    McEstimate e;
    e.n = x.size();
    if (e.n == 0) return e;
    e.mean = pairwise_sum(x) / static_cast<double>(e.n);
    if (e.n > 1) {
        std::vector<double> dev(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - e.mean) * (x[i] - e.mean);
        e.se = std::sqrt(pairwise_sum(dev) / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    }
    return e;
}

/// Monte Carlo of a generic path functional over N Bessel bridges; path i
/// uses stream (seed, i).
template <class F>
McEstimate mc_path_expectation(double delta, F&& functional, const std::vector<double>& grid, std::size_t n,
                          std::uint64_t seed, int threads = default_threads()) {
    if (n == 0) throw std::invalid_argument("mc_expectation: N must be positive");
    auto vals = parallel_map<double>(
        n,
        [&](std::size_t i) {
            RngStream rng(seed, i);
            return functional(sample_bessel_bridge(delta, grid, rng));
        },
        threads);
    return summarize(vals);
}

/// Per-term hat weights of an ExpFunctional on a full grid (with endpoints).
inline std::vector<std::vector<double>> term_weights(const ExpFunctional& phi, const std::vector<double>& full_grid) {
    std::vector<std::vector<double>> w;
    for (const auto& t : phi.terms()) w.push_back(hat_weights(t.measure(), full_grid));
    return w;
}

/// <m, X^2> for the piecewise-linear interpolant of X^2, from hat weights.
inline double quadratic_form(const std::vector<double>& weights, const BridgePath& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double v = p.values[i];
        s += weights[i] * (p.kind == BridgePath::Kind::bessel ? v * v : v);
    }
    return s;
}

/// Sampling grid for Phi: the base grid with every atom location inserted.
inline std::vector<double> grid_for(const ExpFunctional& phi, const std::vector<double>& base) {
    std::vector<double> atoms;
    for (const auto& t : phi.terms())
        for (const auto& a : t.measure().atoms()) atoms.push_back(a.r);
    return merge_points(base, atoms);
}

/// Monte Carlo of E^delta[Phi(X)].
inline McEstimate mc_expectation(double delta, const ExpFunctional& phi, const std::vector<double>& base_grid,
                                 std::size_t n, std::uint64_t seed, int threads = default_threads()) {
    const auto grid = grid_for(phi, base_grid);
    const auto weights = term_weights(phi, with_endpoints(grid));
    return mc_path_expectation(
        delta,
        [&](const BridgePath& p) {
            double s = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i)
                s += phi.terms()[i].coefficient * std::exp(-quadratic_form(weights[i], p));
            return s;
        },
        grid, n, seed, threads);
}

/// Exact interpolation bias of the grid estimator of E^delta[Phi]: the
/// estimator targets the same functional with every m_i replaced by its
/// hat-weight discretization.
inline double grid_bias(double delta, const ExpFunctional& phi, const std::vector<double>& base_grid) {
    const auto full = with_endpoints(grid_for(phi, base_grid));
    double s = 0.0;
    for (const auto& t : phi.terms()) {
        const OdeSolution disc(discretize_on_grid(t.measure(), full));
        s += t.coefficient * (std::pow(disc.psi_1(), -0.5 * delta) - std::pow(t.solution->psi_1(), -0.5 * delta));
    }
    return std::abs(s);
}

// ---- Kolmogorov-Smirnov ---------------------------------------------------

inline double gamma_cdf(double shape, double rate, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(shape, rate * x);
}

inline double normal_cdf(double sigma, double x) { return 0.5 * std::erfc(-x / (sigma * std::numbers::sqrt2)); }

/// CDF of |Z|, Z ~ N(0, sigma^2).
inline double folded_normal_cdf(double sigma, double x) {
    if (x <= 0.0) return 0.0;
    return std::erf(x / (sigma * std::numbers::sqrt2));
}

/// sup |F_n - F| for the given sample (copied and sorted).
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf&& cdf) {
    if (x.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

/// Asymptotic 1% critical value with the Stephens small-sample correction.
inline double ks_critical_1pct(std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    return 1.6276 / (sn + 0.12 + 0.11 / sn);
}

struct KsResult {
    double delta = 0.0;
    double r = 0.0;
    std::size_t n = 0;
    double statistic = 0.0;
    double critical = 0.0;
    bool pass() const { return statistic <= critical; }
};

/// Sampled squared-bridge marginals at every grid point, KS-tested against
/// Gamma(delta/2, rate 1/(2 r (1-r))).
inline std::vector<KsResult> marginal_ks(double delta, const std::vector<double>& grid, std::size_t n,
                                         std::uint64_t seed, int threads = default_threads()) {
    if (n == 0) throw std::invalid_argument("marginal_ks: N must be positive");
    auto paths = parallel_map<std::vector<double>>(
        n,
        [&](std::size_t i) {
            RngStream rng(seed, i);
            return sample_besq_bridge(delta, grid, rng).values;
        },
        threads);
    std::vector<KsResult> out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = paths[i][j + 1];
        const double r = grid[j];
        const double rate = 1.0 / (2.0 * r * (1.0 - r));
        KsResult k{delta, r, n, ks_statistic(std::move(x), [&](double z) { return gamma_cdf(0.5 * delta, rate, z); }),
                   ks_critical_1pct(n)};
        out.push_back(k);
    }
    return out;
}

/// Pathwise sum of independent delta and delta' squared bridges, KS-tested at
/// every grid point against the (delta + delta') marginal. delta' = 0 is the
/// identically zero path.
inline std::vector<KsResult> additivity_check(double delta, double delta2, const std::vector<double>& grid,
                                              std::size_t n, std::uint64_t seed, int threads = default_threads()) {
    if (n == 0) throw std::invalid_argument("additivity_check: N must be positive");
    if (!(delta2 >= 0.0)) throw std::invalid_argument("additivity_check: delta' must be >= 0");
    auto paths = parallel_map<std::vector<double>>(
        n,
        [&](std::size_t i) {
            RngStream a(seed, 2 * i);
            auto p = sample_besq_bridge(delta, grid, a).values;
            if (delta2 > 0.0) {
                RngStream b(seed, 2 * i + 1);
                const auto q = sample_besq_bridge(delta2, grid, b).values;
                for (std::size_t j = 0; j < p.size(); ++j) p[j] += q[j];
            }
            return p;
        },
        threads);
    const double total = delta + delta2;
    std::vector<KsResult> out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = paths[i][j + 1];
        const double r = grid[j];
        const double rate = 1.0 / (2.0 * r * (1.0 - r));
        out.push_back({total, r, n, ks_statistic(std::move(x), [&](double z) { return gamma_cdf(0.5 * total, rate, z); }),
                       ks_critical_1pct(n)});
    }
    return out;
}

/// Path dump with columns (path_id, t, value).
inline void write_paths_csv(const std::string& path, const std::vector<BridgePath>& paths) {
    csv::Writer w(path, {"path_id", "t", "value"});
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = 0; j < paths[i].grid.size(); ++j) w.row({i, paths[i].grid[j], paths[i].values[j]});
}

inline void write_ks_csv(const std::string& path, const std::vector<KsResult>& rows) {
    csv::Writer w(path, {"delta", "r", "n", "ks_stat", "critical_value", "pass"});
    for (const auto& k : rows) w.row({k.delta, k.r, k.n, k.statistic, k.critical, k.pass() ? "1" : "0"});
}

}  // namespace besselbridge
